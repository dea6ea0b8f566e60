"""Characteristic functions at both equilibria and the speed thresholds.

At the trivial state the wave profile linearizes to

    chi0(lam) = b'(0) exp(-lam c r) - c lam - d'(0),

and at the positive equilibrium kappa to

    chik(lam) = A lam^2 + b'(kappa) exp(-lam c r) - c lam - d'(kappa),

with A = D m kappa^(m-1).  ``c_kappa`` is the speed at which chik acquires a
negative double root; ``c_star`` is the speed at which a complex pair crosses
into the right half-plane.  ``lower_bound_speed`` evaluates the phase-plane
nonexistence bound cdot = min(c1, c2).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, ModelError, NumericalError
from .kinetics import DerivedConstants, KineticsSpec, derive_constants

_XTOL = 1e-12
INF = math.inf


@dataclass(frozen=True)
class CharContext:
    spec: KineticsSpec
    consts: DerivedConstants
    A: float

    @property
    def r(self) -> float:
        return self.spec.delay


def make_context(spec: KineticsSpec) -> CharContext:
    k = derive_constants(spec)
    A = spec.diffusivity * spec.m * k.kappa ** (spec.m - 1.0)
    return CharContext(spec, k, A)


# ---------------------------------------------------------------------------
# trivial equilibrium


def chi0(ctx: CharContext, c: float, lam: float) -> float:
    k = ctx.consts
    return k.bp0 * math.exp(-lam * c * ctx.r) - c * lam - k.dp0


def omega_r(ctx: CharContext) -> float:
    """Root of b'(0) exp(-r w) = w + d'(0) on (0, b'(0) - d'(0))."""
    k = ctx.consts
    if not k.bp0 > k.dp0:
        raise ModelError("b'(0) <= d'(0): chi0 has no positive root", clause="b'(0)>d'(0)")
    r = ctx.r
    if r == 0:
        return k.bp0 - k.dp0
    f = lambda w: k.bp0 * math.exp(-r * w) - w - k.dp0
    return brentq(f, 0.0, k.bp0 - k.dp0, xtol=_XTOL, rtol=1e-15)


def lambda0(ctx: CharContext, c: float) -> float:
    """Unique positive root of chi0 at speed c."""
    if not c > 0:
        raise DomainError("speed must be positive")
    lam = omega_r(ctx) / c
    # chi0 is strictly decreasing on (0, inf): one sign change on [0, 2 b'(0)/c]
    hi = 2.0 * ctx.consts.bp0 / c
    assert chi0(ctx, c, 0.0) > 0 > chi0(ctx, c, hi) and 0 < lam < hi
    return lam


# ---------------------------------------------------------------------------
# positive equilibrium


EXP_CAP = 700.0  # exp() argument cap for far-negative lam; keeps the sign of the delay term


def _exp(x: float) -> float:
    return math.exp(min(x, EXP_CAP))


def chik(ctx: CharContext, c: float, lam):
    """chik at real or complex lam."""
    k = ctx.consts
    if isinstance(lam, complex):
        return ctx.A * lam * lam + k.bpk * cmath.exp(-lam * c * ctx.r) - c * lam - k.dpk
    return ctx.A * lam * lam + k.bpk * _exp(-lam * c * ctx.r) - c * lam - k.dpk


def dchik(ctx: CharContext, c: float, lam):
    k = ctx.consts
    cr = c * ctx.r
    e = cmath.exp(-lam * cr) if isinstance(lam, complex) else _exp(-lam * cr)
    return 2.0 * ctx.A * lam - k.bpk * cr * e - c


def lambda_max(ctx: CharContext, c: float) -> float:
    k = ctx.consts
    return 10.0 * (c + abs(k.bpk) + k.dpk + 1.0) / ctx.A


def negative_real_roots(ctx: CharContext, c: float, n: int = 20001) -> list[float]:
    """Real roots of chik on [-lambda_max, 0) located by a sign scan."""
    lam = np.linspace(-lambda_max(ctx, c), 0.0, n)[:-1]
    k = ctx.consts
    v = ctx.A * lam**2 + k.bpk * np.exp(np.minimum(-lam * c * ctx.r, EXP_CAP)) - c * lam - k.dpk
    idx = np.nonzero(np.sign(v[:-1]) != np.sign(v[1:]))[0]
    f = lambda x: chik(ctx, c, x)
    return [brentq(f, lam[i], lam[i + 1], xtol=_XTOL) for i in idx]


@dataclass(frozen=True)
class OmegaKappa:
    omega: float
    mu: float
    in_theorem_bracket: bool


def mu_kappa(ctx: CharContext) -> OmegaKappa:
    """omega_kappa < -2 solving 2 d'(kappa) = b'(kappa) e^-w (2 + w), and mu_kappa."""
    k = ctx.consts
    if not k.bpk < 0:
        raise DomainError("mu_kappa needs b'(kappa) < 0")
    f = lambda w: 2.0 * k.dpk - k.bpk * math.exp(-w) * (2.0 + w)
    inside = f(-40.0) * f(-2.0) < 0
    if inside:
        w = brentq(f, -40.0, -2.0, xtol=_XTOL, rtol=1e-15)
    else:
        # diagnostic branch: look on (-2, 0) instead
        if f(-2.0) * f(-1e-12) >= 0:
            raise NumericalError("no negative root for omega_kappa")
        w = brentq(f, -2.0, -1e-12, xtol=_XTOL)
    radicand = 2.0 * ctx.A * w / k.bpk
    mu = math.sqrt(radicand) * math.exp(w / 2.0)
    return OmegaKappa(w, mu, inside)


def _double_root_newton(ctx: CharContext, lam: float, c: float, maxiter: int = 60):
    k = ctx.consts
    r, A, b = ctx.r, ctx.A, k.bpk
    for _ in range(maxiter):
        e = _exp(-lam * c * r)
        F1 = A * lam * lam + b * e - c * lam - k.dpk
        F2 = 2 * A * lam - b * c * r * e - c
        J11 = F2
        J12 = -b * lam * r * e - lam
        J21 = 2 * A + b * (c * r) ** 2 * e
        J22 = b * r * e * (lam * c * r - 1.0) - 1.0
        det = J11 * J22 - J12 * J21
        if det == 0 or not math.isfinite(det):
            return None
        dl = (F1 * J22 - F2 * J12) / det
        dc = (J11 * F2 - J21 * F1) / det
        # damping keeps c positive and lam negative
        t = 1.0
        while t > 1e-6 and (c - t * dc <= 0 or lam - t * dl >= 0):
            t *= 0.5
        lam -= t * dl
        c -= t * dc
        if abs(dl) < 1e-15 * max(1.0, abs(lam)) and abs(dc) < 1e-15 * max(1.0, c):
            break
    e = _exp(-lam * c * r)
    res1 = abs(A * lam * lam + b * e - c * lam - k.dpk)
    res2 = abs(2 * A * lam - b * c * r * e - c)
    if c > 0 and lam < 0 and res1 < 1e-10 and res2 < 1e-10:
        return lam, c
    return None


def _has_two_negative_roots(ctx: CharContext, c: float) -> bool:
    """max over lam < 0 of chik is >= 0 (two negative roots counted with multiplicity)."""
    L = lambda_max(ctx, c)
    lam = np.linspace(-L, 0.0, 4001)
    k = ctx.consts
    v = ctx.A * lam**2 + k.bpk * np.exp(np.minimum(-lam * c * ctx.r, EXP_CAP)) - c * lam - k.dpk
    i = int(np.argmax(v[:-1]))
    lo, hi = lam[max(i - 1, 0)], lam[min(i + 1, len(lam) - 1)]
    res = minimize_scalar(lambda x: -chik(ctx, c, x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13})
    return max(v[i], -res.fun) >= 0.0


@dataclass(frozen=True)
class CKappaResult:
    c_kappa: float
    lam: float | None
    method: str
    note: str = ""


def find_c_kappa_detail(ctx: CharContext) -> CKappaResult:
    k = ctx.consts
    if ctx.r == 0:
        return CKappaResult(INF, None, "closed-form", "r = 0")
    if not k.bpk < 0:
        return CKappaResult(INF, None, "closed-form", "monotone regime: b'(kappa) >= 0")
    om = mu_kappa(ctx)
    c_seed = om.mu / ctx.r
    l_seed = om.omega / om.mu
    for scale in (1.0, 0.5, 2.0, 0.75, 1.5, 0.6, 1.25, 0.9):
        sol = _double_root_newton(ctx, l_seed * scale, c_seed)
        if sol is not None and _validate_c_kappa(ctx, sol[1]):
            return CKappaResult(sol[1], sol[0], "newton")
    # fallback: bisection on the existence of negative real roots
    lo, hi = c_seed, c_seed
    while not _has_two_negative_roots(ctx, lo):
        lo *= 0.5
        if lo < 1e-12:
            return CKappaResult(INF, None, "bisection", "no negative roots at any tested c")
    while _has_two_negative_roots(ctx, hi):
        hi *= 2.0
        if hi > 1e12:
            return CKappaResult(INF, None, "bisection", "negative roots persist for all tested c")
    while hi - lo > 1e-13 * hi:
        mid = 0.5 * (lo + hi)
        if _has_two_negative_roots(ctx, mid):
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    sol = _double_root_newton(ctx, l_seed, c)
    if sol is not None:
        return CKappaResult(sol[1], sol[0], "bisection+newton")
    return CKappaResult(c, None, "bisection", "Newton polish failed")


def _validate_c_kappa(ctx: CharContext, c: float) -> bool:
    return len(negative_real_roots(ctx, 0.99 * c)) >= 2 and len(negative_real_roots(ctx, 1.01 * c)) == 0


def find_c_kappa(ctx: CharContext) -> float:
    """Speed at which chik has a negative double root (+inf if none)."""
    return find_c_kappa_detail(ctx).c_kappa


# ---------------------------------------------------------------------------
# oscillation threshold


@dataclass(frozen=True)
class CStarResult:
    c_star: float
    y: float | None
    sigma: float | None
    branches: int
    note: str = ""


def find_c_star_detail(ctx: CharContext) -> CStarResult:
    k = ctx.consts
    b, dk, A, r = k.bpk, k.dpk, ctx.A, ctx.r
    if not b < 0:
        raise DomainError("c_star needs b'(kappa) < 0")
    if b >= -dk:
        return CStarResult(INF, None, None, 0, "b'(kappa) >= -d'(kappa)")
    if r == 0:
        return CStarResult(INF, None, None, 0, "r = 0")
    B = -b
    # sin(x) = x / (r B) with x = r y in windows (2k pi, (2k+1) pi]
    g = lambda x: math.sin(x) - x / (r * B)
    K = math.ceil(r * B / math.pi)
    best = None
    count = 0
    for kk in range(K + 1):
        a0, a1 = 2 * kk * math.pi, (2 * kk + 1) * math.pi
        xs = np.linspace(a0, a1, 2001)
        xs[0] = a0 + 1e-12 * max(1.0, a0)
        gv = np.sin(xs) - xs / (r * B)
        roots = []
        for i in np.nonzero(np.sign(gv[:-1]) != np.sign(gv[1:]))[0]:
            roots.append(brentq(g, xs[i], xs[i + 1], xtol=1e-14))
        # tangential touch inside the window (double root)
        j = int(np.argmax(gv))
        if not roots and abs(gv[j]) < 1e-9:
            roots.append(float(xs[j]))
        for x in roots:
            y = x / r
            if y <= 0 or y > B * (1 + 1e-12):
                continue
            count += 1
            sigma = (b * math.cos(x) - dk) / (A * y * y)
            if sigma > 0 and (best is None or sigma > best[1]):
                best = (y, sigma)
    if best is None:
        return CStarResult(INF, None, None, count, "no branch with sigma > 0")
    return CStarResult(best[1] ** -0.5, best[0], best[1], count)


def find_c_star(ctx: CharContext) -> float:
    return find_c_star_detail(ctx).c_star


def mu_star(ctx: CharContext) -> float | None:
    """pi sqrt(A / (-b'(kappa) - d'(kappa))); None when b'(kappa) >= -d'(kappa)."""
    k = ctx.consts
    gap = -k.bpk - k.dpk
    if gap <= 0:
        return None
    return math.pi * math.sqrt(ctx.A / gap)


# ---------------------------------------------------------------------------
# upper guard from the delay-free monotone comparison problem


def _btilde(spec: KineticsSpec, consts: DerivedConstants):
    sM = consts.s_M
    if math.isfinite(sM):
        return lambda s: spec.b(min(s, sM))
    return spec.b


def _aux_positive(spec: KineticsSpec, consts: DerivedConstants, c: float) -> bool:
    """Does the solution of dpsi/dphi = c - Dm phi^(m-1)(bt - d)/psi stay positive on (0, zeta2]?"""
    D, m = spec.diffusivity, spec.m
    bt = _btilde(spec, consts)
    top = consts.zeta2
    k = consts.bp0 - consts.dp0
    phi0 = min(1e-6 * top, 1e-3 * (c * c / (D * max(k, 1e-300))) ** (1.0 / (m - 1.0)))
    psi0 = c * phi0 - D * k / c * phi0**m
    if psi0 <= 0:
        return False

    def rhs(phi, y):
        return [c - D * m * phi ** (m - 1.0) * (bt(phi) - spec.d(phi)) / y[0]]

    def hit(phi, y):
        return y[0] - 1e-14 * c * top

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(rhs, (phi0, top), [psi0], method="RK45", rtol=1e-9, atol=1e-14, events=hit)
    return sol.status == 0 and sol.y[0, -1] > 0


def upper_guard_estimate(spec: KineticsSpec, rel: float = 1e-6) -> float:
    """Smallest c keeping the delay-free comparison orbit (birth replaced by its
    running maximum) positive on (0, zeta2].  Any larger c blows up."""
    consts = derive_constants(spec)
    hi = 1.0
    while not _aux_positive(spec, consts, hi):
        hi *= 2.0
        if hi > 1e6:
            raise NumericalError("upper guard estimate exceeded 1e6")
    lo = hi / 2.0
    while _aux_positive(spec, consts, lo):
        hi = lo
        lo /= 2.0
        if lo < 1e-12:
            return hi
    while hi - lo > rel * hi:
        mid = 0.5 * (lo + hi)
        if _aux_positive(spec, consts, mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# nonexistence bound


@dataclass(frozen=True)
class LowerBound:
    cdot: float
    mu0: float
    zeta0: float
    zeta3: float
    eps: float
    eps_max: float
    delta: float
    C1: float
    c1: float
    c2: float
    cbar: float
    sup_bprime: float


def _zeta3(spec: KineticsSpec, consts: DerivedConstants, n: int = 20000) -> float:
    m = spec.m
    s = np.linspace(0.0, consts.zeta2, n + 1)[1:]
    f = s ** (m - 1.0) * (spec.b(s) - spec.d(s))
    dec = np.nonzero(np.diff(f) <= 0)[0]
    if dec.size == 0:
        return float(consts.zeta2)
    i = int(dec[0])
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, n - 1)]
    g = lambda x: -(x ** (m - 1.0) * (spec.b(x) - spec.d(x)))
    res = minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return float(res.x)


def _psi1_ratio(spec: KineticsSpec, consts: DerivedConstants, cbar: float, zeta0: float) -> float:
    """sup over (0, zeta0] of psi1/phi, dpsi1/dphi = cbar + Dm phi^(m-1) d / psi1."""
    D, m = spec.diffusivity, spec.m
    phi0 = 1e-8 * zeta0
    psi0 = cbar * phi0 + D * consts.dp0 / cbar * phi0**m
    rhs = lambda phi, y: [cbar + D * m * phi ** (m - 1.0) * spec.d(phi) / y[0]]
    grid = np.linspace(phi0, zeta0, 2001)
    sol = solve_ivp(rhs, (phi0, zeta0), [psi0], t_eval=grid, rtol=1e-10, atol=1e-14)
    if sol.status != 0:
        raise NumericalError(f"psi1 integration failed: {sol.message}")
    return float(max(cbar, np.max(sol.y[0] / sol.t)))


def _modulus(m: float, lo: float, hi: float):
    """Continuity modulus of x -> x^(1/(m-1)) on [lo^(m-1), hi^(m-1)]."""
    p = 1.0 / (m - 1.0)
    xl, xh = lo ** (m - 1.0), hi ** (m - 1.0)
    xs = np.linspace(xl, xh, 4001)
    fx = xs**p

    def omega(h: float) -> float:
        if h <= 0:
            return 0.0
        if h >= xh - xl:
            return hi - lo
        return float(np.max(np.minimum(xs + h, xh) ** p - fx))

    return omega, xh - xl


def lower_bound_speed(ctx: CharContext, n_eps: int = 60) -> LowerBound:
    """Certified nonexistence speed cdot = min(mu0 / r, c2)."""
    spec, k = ctx.spec, ctx.consts
    if not k.unimodal:
        raise ModelError("nonexistence bound needs unimodal kinetics", clause="unimodal")
    D, m, r = spec.diffusivity, spec.m, ctx.r
    zeta3 = _zeta3(spec, k)
    zeta0 = min(k.zeta1, zeta3)

    w = lambda p: p ** (m - 1.0)
    I_d = lambda e: quad(lambda p: w(p) * spec.d(p), 0.0, e, epsabs=1e-12, epsrel=1e-10)[0]
    I_g = lambda e: quad(lambda p: w(p) * (spec.b(p) - spec.d(p)), e, zeta0, epsabs=1e-12, epsrel=1e-10)[0]
    admissible = lambda e: I_d(e) - 0.25 * I_g(e)
    if admissible(1e-9 * zeta0) >= 0:
        raise ModelError("no admissible eps: nonexistence bound is vacuous", clause="eps")
    if admissible(zeta0) < 0:
        eps_max = zeta0
    else:
        eps_max = brentq(admissible, 1e-9 * zeta0, zeta0, xtol=1e-14)

    cbar = 2.0 * upper_guard_estimate(spec)
    C1 = _psi1_ratio(spec, k, cbar, zeta0)
    sgrid = np.linspace(0.0, zeta0, 20001)
    Lb = float(np.max(spec.db(sgrid)))
    gdiff = spec.b(sgrid) - spec.d(sgrid)

    def mu0_for(eps: float):
        delta = float(np.min(gdiff[sgrid > eps])) if np.any(sgrid > eps) else 0.0
        delta = min(delta, float(spec.b(zeta0) - spec.d(zeta0)), float(spec.b(eps) - spec.d(eps)))
        if delta <= 0:
            return 0.0, delta
        omega, hmax = _modulus(m, eps / 2.0, zeta0)
        scale = C1 * (m - 1.0) / (D * m)
        ok = lambda mu: Lb * omega(scale * mu) <= delta / 2.0
        mu_hi = hmax / scale
        if ok(mu_hi):
            return mu_hi, delta
        lo, hi = 0.0, mu_hi
        while hi - lo > 1e-12 * hi:
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        return lo, delta

    # eps ranges over the admissible interval; keep the value giving the largest mu0
    cands = np.linspace(eps_max / n_eps, eps_max * (1 - 1e-9), n_eps)
    scored = [(mu0_for(float(e)), float(e)) for e in cands]
    (mu0, delta), eps = max(scored, key=lambda t: t[0][0])
    if mu0 <= 0:
        raise ModelError("delta vanishes on the admissible eps range", clause="delta")

    c2 = 0.25 * D * m * I_g(eps) / (C1 * zeta0**2 / 2.0)
    c1 = mu0 / r if r > 0 else INF
    return LowerBound(
        cdot=min(c1, c2), mu0=mu0, zeta0=zeta0, zeta3=zeta3, eps=eps, eps_max=eps_max,
        delta=delta, C1=C1, c1=c1, c2=c2, cbar=cbar, sup_bprime=Lb,
    )


# ---------------------------------------------------------------------------
# summary


@dataclass(frozen=True)
class SpeedThresholds:
    c_kappa: float
    c_star: float
    mu_kappa: float | None
    mu_star: float | None
    omega_kappa: float | None
    cdot: float
    mu0: float
    notes: tuple[str, ...] = field(default_factory=tuple)


def speed_thresholds(ctx: CharContext) -> SpeedThresholds:
    k = ctx.consts
    notes = []
    ck = find_c_kappa_detail(ctx)
    if ck.note:
        notes.append(f"c_kappa: {ck.note}")
    if k.bpk < 0:
        om = mu_kappa(ctx)
        if not om.in_theorem_bracket:
            notes.append("omega_kappa found in (-2, 0)")
        cs = find_c_star_detail(ctx)
        if cs.note:
            notes.append(f"c_star: {cs.note}")
        omega, muk, cstar = om.omega, om.mu, cs.c_star
    else:
        omega = muk = None
        cstar = INF
        notes.append("monotone regime: b'(kappa) >= 0")
    lb = lower_bound_speed(ctx)
    return SpeedThresholds(ck.c_kappa, cstar, muk, mu_star(ctx), omega, lb.cdot, lb.mu0, tuple(notes))
