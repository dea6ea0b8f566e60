"""Wave profiles by the method of steps.

A profile at speed c is integrated window by window: on [k c r, (k+1) c r]
the delayed term b(phi(t - c r)) is read from the dense history of earlier
windows.  Two starts are supported:

- ``SharpEdge``: phi(0) = 0 with zero flux.  The leading term
  phi = ((m-1) c t / (D m))^(1/(m-1)) (with its first flux correction) is
  used on a short bootstrap interval, then the flux system takes over.
- ``SmoothTail``: the left tail phi = a exp(lambda0 t), with the history for
  t < 0 filled by the same exponential.

Trajectories near a wave are unstable in forward time (the flux mode near
phi = 0 and the positive root of the characteristic function at kappa), so a
plain run only follows a wave for a limited time.  ``integrate`` therefore
offers a shadowing mode: the initial flux (smooth start) or the speed (sharp
start) is bisected between a decaying and an escaping run, and whenever the
two bracketing runs separate the flux is re-bracketed in a tiny window at the
last time they still agreed.  The flux corrections applied at these restarts
are recorded in ``WaveProfile.kinks``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, curve_fit

from .charspec import CharContext, lambda0
from .errors import DomainError, NumericalError, ParameterError
from .integrator import (
    DECAYED,
    ESCAPED,
    REACHED,
    UNDERFLOW,
    FluxSystem,
    History,
    StepStats,
    integrate_to,
)

MIN_WINDOWS = 20
RTOL = 1e-10
ATOL = 1e-12


# ---------------------------------------------------------------------------
# starts and guards


@dataclass(frozen=True)
class SharpEdge:
    kind = "sharp"


@dataclass(frozen=True)
class SmoothTail:
    """Left-tail start phi(0) = amplitude; ``psi0`` overrides the ansatz flux."""

    amplitude: float | None = None
    psi0: float | None = None
    kind = "smooth"


@dataclass(frozen=True)
class Guards:
    floor: float
    escape: float


def default_guards(ctx: CharContext, start=None) -> Guards:
    k = ctx.consts
    floor = 1e-9 * k.kappa
    if isinstance(start, SmoothTail):
        a = start.amplitude if start.amplitude is not None else default_amplitude(ctx)
        floor = min(floor, 1e-3 * a)
    return Guards(floor, k.zeta2 + max(1.0, k.zeta2))


def default_amplitude(ctx: CharContext) -> float:
    return ctx.consts.zeta1 / 10.0


# ---------------------------------------------------------------------------
# profile containers


@dataclass(frozen=True)
class Segment:
    k: int
    t_lo: float
    t_hi: float
    i0: int
    i1: int


@dataclass(frozen=True)
class EdgeAsymptotics:
    exponent: float
    coefficient: float
    fitted_exponent: float
    fitted_coefficient: float
    residual: float
    t_boot: float
    fit_range: tuple[float, float]


@dataclass(frozen=True)
class LeftTailFit:
    rate: float
    C1: float
    Lambda: float
    C2: float
    residual: float
    fit_range: tuple[float, float]


@dataclass
class WaveProfile:
    """Dense trajectory at speed c.  Built once, then treated as read-only."""

    speed: float
    lag: float
    kappa: float
    history: History
    start: str
    t_end: float
    edge: EdgeAsymptotics | None = None
    kinks: list[tuple[float, float]] = field(default_factory=list)
    speed_bracket: tuple[float, float] | None = None
    meta: dict = field(default_factory=dict)
    _arrays: tuple | None = field(default=None, repr=False)

    @property
    def t_start(self) -> float:
        return self.history.t_start if self.start == "sharp" else 0.0

    @property
    def segments(self) -> list[Segment]:
        h = self.history
        t0 = h.t0
        if not t0:
            return []
        if self.lag <= 0:
            return [Segment(0, self.t_start, self.t_end, 0, len(t0))]
        out = []
        n = int(math.ceil(self.t_end / self.lag - 1e-12))
        lo_i = 0
        for k in range(n):
            hi_t = min((k + 1) * self.lag, self.t_end)
            hi_i = int(np.searchsorted(np.asarray(t0), hi_t - 1e-12 * max(1.0, hi_t), side="right"))
            lo_t = self.t_start if k == 0 else k * self.lag
            out.append(Segment(k, lo_t, hi_t, lo_i, hi_i))
            lo_i = hi_i
        return out

    def arrays(self):
        if self._arrays is None or len(self._arrays[0]) != len(self.history):
            h = self.history
            self._arrays = (
                np.asarray(h.t0),
                np.asarray(h.h),
                np.asarray(h.cphi).reshape(-1, 4),
                np.asarray(h.cpsi).reshape(-1, 4),
            )
        return self._arrays

    def sample(self, t) -> tuple[np.ndarray, np.ndarray]:
        """phi and psi at the requested times (inside the integrated range)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        T0, H, CP, CS = self.arrays()
        i = np.clip(np.searchsorted(T0, t, side="right") - 1, 0, len(T0) - 1)
        th = (t - T0[i]) / H[i]
        phi = CP[i, 0] + th * (CP[i, 1] + th * (CP[i, 2] + th * CP[i, 3]))
        psi = CS[i, 0] + th * (CS[i, 1] + th * (CS[i, 2] + th * CS[i, 3]))
        if self.start == "sharp":
            early = t < self.history.t_start
            if np.any(early):
                phi[early] = [self.history.pre(s) for s in t[early]]
                psi[early] = self.speed * phi[early]
        return phi, psi

    def nodes(self):
        """Step points (t, phi, psi) including the right end."""
        T0, H, CP, CS = self.arrays()
        t = np.append(T0, T0[-1] + H[-1])
        phi = np.append(CP[:, 0], CP[-1].sum())
        psi = np.append(CS[:, 0], CS[-1].sum())
        return t, phi, psi

    def uniform(self, n: int = 2000, t_lo: float | None = None, t_hi: float | None = None):
        t_lo = self.t_start if t_lo is None else t_lo
        t_hi = self.t_end if t_hi is None else t_hi
        t = np.linspace(t_lo, t_hi, n)
        phi, psi = self.sample(t)
        return t, phi, psi


# ---------------------------------------------------------------------------
# outcomes


@dataclass(frozen=True)
class TailReport:
    classification: str
    sign_changes: int
    per_window: tuple[int, ...]
    envelope: tuple[float, ...]
    envelope_ratio: float
    tail_min: float
    tail_max: float
    window: float
    n_windows: int


@dataclass(frozen=True)
class DecayedToZero:
    t_death: float
    profile: WaveProfile | None = None
    kind = "decayed"


@dataclass(frozen=True)
class Blowup:
    t_escape: float
    profile: WaveProfile | None = None
    kind = "blowup"


@dataclass(frozen=True)
class Persistent:
    profile: WaveProfile
    tail: TailReport
    kind = "persistent"


TrajectoryOutcome = DecayedToZero | Blowup | Persistent

MONOTONE = "MonotoneConvergent"
OSCILLATORY = "OscillatoryConvergent"
NONDECAYING = "NonDecayingOscillatory"
UNDETERMINED = "Undetermined"


# ---------------------------------------------------------------------------
# sharp edge


def _edge_series(ctx: CharContext, c: float):
    """(a, phi(t), t_boot) for the edge series psi = c phi + a phi^m."""
    spec, k = ctx.spec, ctx.consts
    D, m = spec.diffusivity, spec.m
    net = k.dp0 - (k.bp0 if spec.delay == 0 else 0.0)
    a = D * net / c

    def phi_of_t(t: float) -> float:
        if t <= 0:
            return 0.0
        x = (m - 1.0) * t / (D * m)
        u = c * x if a == 0 else (c / a) * math.expm1(a * x)
        return u ** (1.0 / (m - 1.0)) if u > 0 else 0.0

    # keep the neglected next-order term below ~1e-10 relative
    u_cap = 1e-5 * c / abs(a) if a != 0 else math.inf
    t_boot = 1e-7
    if ctx.r > 0:
        t_boot = min(t_boot, 1e-3 * c * ctx.r)
    x = (m - 1.0) * t_boot / (D * m)
    if a != 0 and abs(a) * x > 1e-5:
        t_boot = 1e-5 * D * m / ((m - 1.0) * abs(a))
    u = phi_of_t(t_boot) ** (m - 1.0)
    if u > u_cap:
        t_boot *= u_cap / u
    return a, phi_of_t, t_boot


def _sharp_state(ctx: CharContext, c: float):
    a, phi_of_t, t_boot = _edge_series(ctx, c)
    phi_b = phi_of_t(t_boot)
    psi_b = c * phi_b + a * phi_b**ctx.spec.m
    hist = History(t_boot, pre=phi_of_t)
    return hist, t_boot, phi_b, psi_b


def _smooth_state(ctx: CharContext, c: float, start: SmoothTail):
    spec = ctx.spec
    a = start.amplitude if start.amplitude is not None else default_amplitude(ctx)
    if not 0 < a <= ctx.consts.zeta1 / 10 * (1 + 1e-12):
        raise ParameterError(f"smooth-tail amplitude must lie in (0, zeta1/10], got {a}")
    lam = lambda0(ctx, c)
    psi = start.psi0 if start.psi0 is not None else tail_flux(ctx, c, a)
    pre = lambda s: a * math.exp(lam * s)
    hist = History(0.0, pre=pre)
    return hist, 0.0, a, psi


def tail_flux(ctx: CharContext, c: float, a: float) -> float:
    """Flux of the exponential left tail at phi = a: D m lambda0 a^m."""
    spec = ctx.spec
    return spec.diffusivity * spec.m * lambda0(ctx, c) * a**spec.m


# ---------------------------------------------------------------------------
# core runner


@dataclass
class _Run:
    hist: History
    code: int
    t: float
    phi: float
    psi: float
    stats: StepStats

    @property
    def decayed(self) -> bool:
        return self.code == DECAYED

    @property
    def escaped(self) -> bool:
        return self.code == ESCAPED


def _continue(ctx, c, hist, t, phi, psi, horizon, guards, rtol, atol, h=None) -> _Run:
    sys = FluxSystem(ctx.spec, c, hist)
    lag = c * ctx.r
    stats = StepStats()
    # a sharp edge starts far below atol (phi ~ t^(1/(m-1))); keep it relative
    if phi > 0:
        atol = min(atol, rtol * phi)
    code = REACHED
    while t < horizon:
        if lag > 0:
            k = math.floor(t / lag + 1e-12) + 1
            t_next = min(k * lag, horizon)
            if t_next - t <= 1e-12 * max(1.0, t_next):
                t_next = min((k + 1) * lag, horizon)
        else:
            t_next = horizon
        code, t, phi, psi, h = integrate_to(
            sys, t, phi, psi, t_next, rtol=rtol, atol=atol, h=h,
            floor=guards.floor, escape=guards.escape, stats=stats,
        )
        if code != REACHED:
            break
    if code == UNDERFLOW:
        raise NumericalError(f"step size underflow at t={t:.6g}, phi={phi:.6g}, psi={psi:.6g}")
    return _Run(hist, code, t, phi, psi, stats)


def _initial(ctx, c, start):
    if isinstance(start, SharpEdge):
        return _sharp_state(ctx, c)
    if isinstance(start, SmoothTail):
        return _smooth_state(ctx, c, start)
    raise DomainError(f"unknown start {start!r}")


def _check_horizon(ctx, c, horizon):
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    if ctx.r > 0 and horizon < MIN_WINDOWS * c * ctx.r * (1 - 1e-12):
        raise ParameterError(
            f"horizon {horizon:.6g} shorter than {MIN_WINDOWS} delay windows ({MIN_WINDOWS * c * ctx.r:.6g})"
        )


def default_horizon(ctx: CharContext, c: float) -> float:
    return 40.0 * max(c * ctx.r, 1.0)


def _make_profile(ctx, c, run: _Run, start, kinks=(), bracket=None, meta=None) -> WaveProfile:
    prof = WaveProfile(
        speed=c,
        lag=c * ctx.r,
        kappa=ctx.consts.kappa,
        history=run.hist,
        start=start.kind,
        t_end=run.t,
        kinks=list(kinks),
        speed_bracket=bracket,
        meta=dict(meta or {}),
    )
    if start.kind == "sharp" and len(run.hist):
        prof.edge = _edge_fit(ctx, prof)
    return prof


def _outcome(ctx, c, run: _Run, start, window=None, **kw) -> TrajectoryOutcome:
    prof = _make_profile(ctx, c, run, start, **kw)
    if run.code == DECAYED:
        return DecayedToZero(run.t, prof)
    if run.code == ESCAPED:
        return Blowup(run.t, prof)
    w = window if window is not None else default_window(ctx, c, prof)
    return Persistent(prof, classify_tail(prof, w))


def default_window(ctx: CharContext, c: float, prof: WaveProfile | None = None) -> float:
    lag = c * ctx.r
    if lag > 0:
        return 5.0 * lag
    span = prof.t_end - prof.t_start if prof is not None else 40.0
    return span / 10.0


def integrate(
    ctx: CharContext,
    c: float,
    start=SharpEdge(),
    horizon: float | None = None,
    guards: Guards | None = None,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    window: float | None = None,
    shadow: bool = False,
    speed_bracket: tuple[float, float] | None = None,
) -> TrajectoryOutcome:
    """Integrate the profile equation at speed c and classify the outcome.

    With ``shadow=True`` the run is continued along the decay/escape
    separatrix (see module docstring).  For a sharp start the speed itself is
    refined inside ``speed_bracket`` (default: c +/- 1e-9 c).
    """
    if not c > 0:
        raise DomainError("speed must be positive")
    horizon = default_horizon(ctx, c) if horizon is None else horizon
    _check_horizon(ctx, c, horizon)
    guards = default_guards(ctx, start) if guards is None else guards
    if shadow:
        return _shadow(ctx, c, start, horizon, guards, rtol, atol, window, speed_bracket)
    hist, t, phi, psi = _initial(ctx, c, start)
    run = _continue(ctx, c, hist, t, phi, psi, horizon, guards, rtol, atol)
    return _outcome(ctx, c, run, start, window)


# ---------------------------------------------------------------------------
# shadowing continuation


AGREE_TOL = 1e-9
KINK_MAX = 1e-6
SETTLE = 4.0  # undecided runs are continued to SETTLE * horizon


def _bisect(make: Callable[[float], _Run], x_lo: float, x_hi: float, r_lo=None, r_hi=None, max_iter=200):
    """Bisect x between runs with different terminal codes.

    Returns (persistent_run, None, x) if some run reaches the horizon, or
    (run_a, run_b, x_a) for the final adjacent pair otherwise.  Returns None
    when the end points share an outcome.
    """
    r_lo = make(x_lo) if r_lo is None else r_lo
    if r_lo.code == REACHED:
        return r_lo, None, x_lo
    r_hi = make(x_hi) if r_hi is None else r_hi
    if r_hi.code == REACHED:
        return r_hi, None, x_hi
    if r_lo.code == r_hi.code:
        return None
    for _ in range(max_iter):
        x_mid = 0.5 * (x_lo + x_hi)
        if x_mid in (x_lo, x_hi):
            break
        r_mid = make(x_mid)
        if r_mid.code == REACHED:
            return r_mid, None, x_mid
        if r_mid.code == r_lo.code:
            x_lo, r_lo = x_mid, r_mid
        else:
            x_hi, r_hi = x_mid, r_mid
    return r_lo, r_hi, (x_lo, x_hi)


def _agreement_index(a: History, b: History, i_from: int, tol: float) -> int:
    """Largest piece index n >= i_from of ``a`` such that a and b agree on [.., a.t0[n]]."""
    n = i_from
    t_end_b = b.t_end
    for i in range(i_from, len(a)):
        s = a.t0[i]
        if s > t_end_b:
            break
        if abs(a.cphi[i][0] - b.phi(s)) > tol:
            break
        n = i
    return n


def _truncate(run: _Run, t_cut: float) -> _Run:
    h = run.hist
    if run.t <= t_cut:
        return run
    n = h.index(t_cut)
    if h.t0[n] < t_cut:
        n += 1
    n = min(n, len(h) - 1)
    phi, psi = h.cphi[n][0], h.cpsi[n][0]
    return _Run(h.prefix(n), REACHED, h.t0[n], phi, psi, run.stats)


def _shadow(ctx, c, start, horizon, guards, rtol, atol, window, speed_bracket):
    """Follow the decay/escape separatrix up to ``horizon``.

    Bracketing runs are integrated to an extended horizon so that a run is
    only accepted once its partner agrees with it past ``horizon``.
    """
    kappa = ctx.consts.kappa
    tol = AGREE_TOL * kappa
    h_ext = 2.0 * horizon
    kinks: list[tuple[float, float]] = []
    bracket = None
    meta: dict = {}

    def settle(x, run):
        # a slow departure may outlive the extended horizon: decide its side
        if run.code == REACHED:
            run = _continue(ctx, x, run.hist, run.t, run.phi, run.psi, SETTLE * horizon, guards, rtol, atol)
        return run

    if isinstance(start, SharpEdge):
        lo, hi = speed_bracket if speed_bracket is not None else (c * (1 - 1e-9), c * (1 + 1e-9))

        def make_c(x):
            h, t, p, s = _sharp_state(ctx, x)
            return settle(x, _continue(ctx, x, h, t, p, s, h_ext, guards, rtol, atol))

        res = _bisect(make_c, lo, hi)
        if res is None and speed_bracket is None:
            # c is off the sharp speed: the run decays or escapes on its own
            r0 = make_c(c)
            return _outcome(ctx, c, _truncate(r0, horizon), start, window,
                            meta={"restarts": 0, "shadow": "no-bracket"})
        if res is None:
            raise NumericalError("speed bracket does not separate decay from escape")
        ra, rb, x = res
        if rb is None:
            return _outcome(ctx, x, _truncate(ra, horizon), start, window, bracket=(x, x),
                            meta={"restarts": 0})
        # the reference branch runs at the upper speed of the final bracket
        ra, rb = rb, ra
        c = x[1]
        bracket = (x[0], x[1])
    else:
        a = start.amplitude if start.amplitude is not None else default_amplitude(ctx)
        psi_ans = tail_flux(ctx, c, a)
        start = SmoothTail(a, start.psi0)

        def make_s(x):
            h, t, p, _ = _smooth_state(ctx, c, SmoothTail(a))
            return settle(c, _continue(ctx, c, h, t, p, x, h_ext, guards, rtol, atol))

        res = _bisect(make_s, 0.0, 3.0 * psi_ans)
        if res is None:
            r0 = make_s(3.0 * psi_ans)
            return _outcome(ctx, c, _truncate(r0, horizon), start, window,
                            meta={"restarts": 0, "shadow": "no-bracket"})
        ra, rb, x = res
        if rb is None:
            return _outcome(ctx, c, _truncate(ra, horizon), start, window,
                            meta={"restarts": 0, "psi0": x})
        meta["psi0"] = x[0]
        meta["psi0_ansatz"] = psi_ans

    restarts = 0
    i_from = 0
    psi_ref = c * kappa
    status = "ok"
    while True:
        n = _agreement_index(ra.hist, rb.hist, i_from, tol)
        h = ra.hist
        if h.t0[n] >= horizon:
            run = _truncate(ra, horizon)
            break
        if n <= i_from:
            status = "stalled"
            run = ra if ra.t >= rb.t else rb
            break
        t_n = h.t0[n]
        phi_n = h.cphi[n][0]
        psi_n = h.cpsi[n][0]
        base = h.prefix(n)

        def make_p(x, base=base, t_n=t_n, phi_n=phi_n):
            return settle(c, _continue(ctx, c, base.prefix(len(base)), t_n, phi_n, x, h_ext, guards, rtol, atol))

        scale = max(abs(psi_n), psi_ref)
        w = 1e-10 * scale
        res = None
        while w <= KINK_MAX * scale:
            res = _bisect(make_p, psi_n - w, psi_n + w)
            if res is not None:
                break
            w *= 10.0
        restarts += 1
        if res is None:
            status = "kink-limit"
            run = ra if ra.t >= rb.t else rb
            break
        r1, r2, x = res
        xa = x if r2 is None else x[0]
        kinks.append((t_n, xa - psi_n))
        if r2 is None:
            run = _truncate(r1, horizon)
            break
        ra, rb = r1, r2
        i_from = n
    meta.update(restarts=restarts, shadow=status,
                max_kink=max((abs(k[1]) for k in kinks), default=0.0))
    if run.code == REACHED and run.t < horizon * (1 - 1e-12):
        run = _Run(run.hist, REACHED, run.t, run.phi, run.psi, run.stats)
    return _outcome(ctx, c, run, start, window, kinks=kinks, bracket=bracket, meta=meta)


# ---------------------------------------------------------------------------
# step-by-step construction


def first_segment(ctx: CharContext, c: float, t_end: float | None = None) -> WaveProfile:
    """Sharp-edge solution on the delay-free window [0, t_end] (t_end <= c r)."""
    if not c > 0:
        raise DomainError("speed must be positive")
    lag = c * ctx.r
    if t_end is None:
        t_end = lag if lag > 0 else 1.0
    if lag > 0 and t_end > lag * (1 + 1e-12):
        raise ParameterError("first segment extends past the delay window")
    hist, t, phi, psi = _sharp_state(ctx, c)
    g = default_guards(ctx)
    run = _continue(ctx, c, hist, t, phi, psi, t_end, g, RTOL, ATOL)
    if run.code == UNDERFLOW or len(hist) == 0:
        raise NumericalError("the edge solution could not leave the origin")
    prof = _make_profile(ctx, c, run, SharpEdge())
    prof.meta["terminated"] = {DECAYED: "decayed", ESCAPED: "blowup", REACHED: None}[run.code]
    return prof


def advance_segment(ctx: CharContext, profile: WaveProfile, k: int):
    """Integrate window k of a sharp profile in place.

    Returns the new Segment, or a DecayedToZero / Blowup record.
    """
    lag = profile.lag
    if lag <= 0:
        raise ParameterError("advance_segment needs r > 0 (r = 0 is a single segment)")
    if k < 1:
        raise ParameterError("segment index starts at 1")
    if abs(profile.t_end - k * lag) > 1e-9 * max(1.0, k * lag):
        raise ParameterError(f"profile ends at {profile.t_end:.6g}, expected {k * lag:.6g}")
    h = profile.history
    T0, H, CP, CS = profile.arrays()
    phi = float(CP[-1].sum())
    psi = float(CS[-1].sum())
    run = _continue(ctx, profile.speed, h, profile.t_end, phi, psi, (k + 1) * lag,
                    default_guards(ctx), RTOL, ATOL)
    profile.t_end = run.t
    profile._arrays = None
    if run.code == DECAYED:
        return DecayedToZero(run.t, profile)
    if run.code == ESCAPED:
        return Blowup(run.t, profile)
    return profile.segments[k]


# ---------------------------------------------------------------------------
# edge analysis


def _edge_fit(ctx: CharContext, prof: WaveProfile, t_lo=None, t_hi=None) -> EdgeAsymptotics:
    spec = ctx.spec
    D, m, c = spec.diffusivity, spec.m, prof.speed
    expo = 1.0 / (m - 1.0)
    coef = ((m - 1.0) * c / (D * m)) ** expo
    t_boot = prof.history.t_start
    t_lo = 10.0 * t_boot if t_lo is None else t_lo
    if t_hi is None:
        t_hi = 1e3 * t_lo
        if prof.lag > 0:
            t_hi = min(t_hi, 0.1 * prof.lag)
        t_hi = min(t_hi, prof.t_end)
    if not t_hi > t_lo:
        return EdgeAsymptotics(expo, coef, float("nan"), float("nan"), float("nan"), t_boot, (t_lo, t_hi))
    t = np.geomspace(t_lo, t_hi, 60)
    phi, _ = prof.sample(t)
    ok = phi > 0
    x, y = np.log(t[ok]), np.log(phi[ok])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), res, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    return EdgeAsymptotics(expo, coef, float(slope), float(math.exp(icpt)), resid, t_boot, (t_lo, t_hi))


def edge_fit(ctx: CharContext, profile: WaveProfile, t_lo: float | None = None,
             t_hi: float | None = None) -> EdgeAsymptotics:
    """Log-log fit of phi on [t_lo, t_hi] against the leading edge term."""
    if profile.start != "sharp":
        raise DomainError("edge fit needs a sharp-start profile")
    return _edge_fit(ctx, profile, t_lo, t_hi)


@dataclass(frozen=True)
class EdgeRegularity:
    regularity: str
    measured_derivative: float
    t_probe: float
    exponent: float


def edge_regularity(ctx: CharContext, c: float = 1.0, t_probe: float = 1e-6) -> EdgeRegularity:
    """C1 iff 1 < m < 2; reports phi'(t_probe) from the integrated first segment."""
    m = ctx.spec.m
    t_end = min(1e3 * t_probe, c * ctx.r) if ctx.r > 0 else 1e3 * t_probe
    prof = first_segment(ctx, c, t_end)
    _, psi = prof.sample([t_probe])
    phi, _ = prof.sample([t_probe])
    deriv = float(psi[0] / (ctx.spec.diffusivity * m * phi[0] ** (m - 1.0)))
    return EdgeRegularity("NonC1" if m >= 2 else "C1", deriv, t_probe, 1.0 / (m - 1.0))


def left_tail_fit(ctx: CharContext, profile: WaveProfile, phi_max: float | None = None) -> LeftTailFit:
    """Fit phi = C1 e^(lam t) + C2 e^(2 lam t) on the early smooth-start run."""
    if profile.start != "smooth":
        raise DomainError("left-tail fit needs a smooth-start profile")
    phi_max = ctx.consts.zeta1 / 2.0 if phi_max is None else phi_max
    t, phi, _ = profile.nodes()
    above = np.nonzero(phi >= phi_max)[0]
    t_hi = t[above[0]] if above.size else t[-1]
    ts = np.linspace(0.0, t_hi, 200)
    ph, _ = profile.sample(ts)
    lam_guess = lambda0(ctx, profile.speed)
    f = lambda tt, lam, C1, C2: C1 * np.exp(lam * tt) + C2 * np.exp(2 * lam * tt)
    p0 = (lam_guess, ph[0], 0.0)
    popt, _ = curve_fit(f, ts, ph, p0=p0, maxfev=20000)
    res = float(np.sqrt(np.mean((f(ts, *popt) - ph) ** 2)))
    return LeftTailFit(float(popt[0]), float(popt[1]), float(2 * popt[0]), float(popt[2]), res, (0.0, float(t_hi)))


# ---------------------------------------------------------------------------
# tail classification

NOISE = 1e-7


def classify_series(t: np.ndarray, phi: np.ndarray, kappa: float, window: float,
                    max_windows: int = 8, t_from: float | None = None) -> TailReport:
    """Classify the trailing behaviour of phi - kappa on uniform samples.

    Windows of length ``window`` are laid back from the end of the series.
    Trailing windows whose deviation is below the noise floor are dropped, so
    the class describes the last stretch that still carries signal; a series
    that settled is convergent, never non-decaying.
    """
    t = np.asarray(t, float)
    phi = np.asarray(phi, float)
    t_end = t[-1]
    t_begin = t[0] if t_from is None else max(t[0], t_from)
    n_all = int(math.floor((t_end - t_begin) / window + 1e-9))
    if n_all < 3:
        tail = phi[t >= t_end - window] if n_all >= 1 else phi
        return TailReport(UNDETERMINED, 0, (), (), float("nan"), float(tail.min()), float(tail.max()), window,
                          max(n_all, 0))
    noise = NOISE * kappa
    per_all, env_all = [], []
    for j in range(n_all, 0, -1):
        lo, hi = t_end - j * window, t_end - (j - 1) * window
        sel = (t >= lo) & (t <= hi)
        dev = phi[sel] - kappa
        env_all.append(float(np.max(np.abs(dev))) if dev.size else 0.0)
        sg = np.sign(dev[np.abs(dev) > noise])
        per_all.append(int(np.count_nonzero(sg[1:] != sg[:-1])) if sg.size > 1 else 0)
    last = phi[t >= t_end - window]
    loud = [i for i, e in enumerate(env_all) if e > noise]
    if not loud:
        n = min(max_windows, n_all)
        return TailReport(MONOTONE, 0, tuple(per_all[-n:]), tuple(env_all[-n:]), float("nan"),
                          float(last.min()), float(last.max()), window, n)
    stop = loud[-1] + 1
    settled_tail = stop < n_all
    start = max(0, stop - max_windows)
    per, env = per_all[start:stop], env_all[start:stop]
    n = len(env)
    total = int(sum(per))
    ratio = env[-1] / env[0] if env[0] > 0 else float("nan")
    # windows below 1e-3 of the largest window amplitude count as settled too
    settle = max(noise, 1e-3 * max(env))
    active = [i for i, e in enumerate(env) if e > settle]
    if total == 0:
        decreasing = all(env[i + 1] <= env[i] * (1 + 1e-9) or env[i + 1] <= noise for i in range(n - 1))
        cls = MONOTONE if decreasing else UNDETERMINED
    elif settled_tail or len(active) < n:
        cls = OSCILLATORY if all(per[i] >= 1 for i in active) else UNDETERMINED
    elif all(per[i] >= 2 for i in active):
        if ratio < 0.8:
            cls = OSCILLATORY
        elif n >= 5:
            cls = NONDECAYING
        else:
            cls = UNDETERMINED
    else:
        cls = UNDETERMINED
    return TailReport(cls, total, tuple(per), tuple(env), float(ratio), float(last.min()), float(last.max()),
                      window, n)


def leading_edge_end(profile: WaveProfile) -> float:
    """Time at which phi first reaches kappa/2 (t_end if it never does)."""
    t, phi, _ = profile.nodes()
    idx = np.nonzero(phi >= 0.5 * profile.kappa)[0]
    return float(t[idx[0]]) if idx.size else float(profile.t_end)


def classify_tail(profile: WaveProfile, window: float, samples_per_window: int = 400) -> TailReport:
    if profile.lag > 0 and window < 5 * profile.lag * (1 - 1e-12):
        raise ParameterError("tail window must be at least 5 delay windows")
    span = profile.t_end - profile.t_start
    n = max(200, int(samples_per_window * span / window))
    t, phi, _ = profile.uniform(n)
    return classify_series(t, phi, profile.kappa, window, t_from=leading_edge_end(profile))


# ---------------------------------------------------------------------------
# phase-delay functional


def phase_delay_functional(profile: WaveProfile, phi_value: float, D: float, m: float) -> float:
    """phi_cr(phi) = inf{theta : int_theta^phi D m s^(m-1)/psi(s) ds <= c r} on the leading edge."""
    cr = profile.lag
    if cr == 0:
        return phi_value
    t, phi, psi = profile.nodes()
    if profile.start == "sharp":
        t = np.concatenate([[0.0], t])
        phi = np.concatenate([[0.0], phi])
        psi = np.concatenate([[0.0], psi])
    # monotone leading part
    dec = np.nonzero(np.diff(phi) <= 0)[0]
    last = dec[0] if dec.size else len(phi) - 1
    if phi_value > phi[last] or phi_value < phi[0]:
        raise DomainError("phi value outside the monotone leading edge")
    ph, ps = phi[: last + 1], psi[: last + 1]
    # tau(phi) = int_phi0^phi D m s^(m-1)/psi ds by Gauss-Legendre on a spline of psi(phi)
    spl = CubicSpline(ph[1:], ps[1:]) if len(ph) > 3 else None
    xg, wg = np.polynomial.legendre.leggauss(6)

    def integrand(s):
        val = spl(s) if spl is not None else np.interp(s, ph, ps)
        return D * m * s ** (m - 1.0) / val

    tau = np.zeros_like(ph)
    if profile.start == "sharp":
        # exact under the leading-order edge relation psi = c s on the first interval
        tau[1] = t[1]
        start_i = 1
    else:
        tau[0] = t[0]
        start_i = 0
    for i in range(start_i, len(ph) - 1):
        a, b = ph[i], ph[i + 1]
        s = 0.5 * (b - a) * xg + 0.5 * (a + b)
        tau[i + 1] = tau[i] + 0.5 * (b - a) * np.sum(wg * integrand(s))

    def tau_of(x):
        i = int(np.clip(np.searchsorted(ph, x) - 1, 0, len(ph) - 2))
        a = ph[i]
        if x == a:
            return tau[i]
        s = 0.5 * (x - a) * xg + 0.5 * (a + x)
        base = tau[i]
        if profile.start == "sharp" and i == 0:
            return t[1] * (x / ph[1]) ** (m - 1.0)
        return base + 0.5 * (x - a) * np.sum(wg * integrand(s))

    target = tau_of(phi_value) - cr
    if profile.start == "sharp" and target <= 0:
        return 0.0
    if profile.start == "smooth" and target <= tau[0]:
        # below the integrated range: use the exponential pre-history
        return float(profile.history.pre(target))
    return float(brentq(lambda x: tau_of(x) - target, ph[0], phi_value, xtol=1e-14))
