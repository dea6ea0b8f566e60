"""Explicit finite-difference simulation of the delayed degenerate equation.

    u_t = D (u^m)_xx - d(u) + b(u(t - r, x))

Cells of width dx with zero-flux ends.  The diffusion term is written in flux
form on w = u^m.  Delayed values come from snapshots stored every
``store_dt`` and interpolated linearly in time.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .kinetics import KineticsSpec, derive_constants
from .profile import TailReport, WaveProfile, classify_series

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid1D:
    x_lo: float
    x_hi: float
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 100:
            raise ParameterError("grid needs at least 100 cells")
        if not self.x_hi > self.x_lo:
            raise ParameterError("grid needs x_hi > x_lo")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / self.n_cells

    @property
    def x(self) -> np.ndarray:
        return self.x_lo + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True)
class CompactBump:
    """Parabolic bump of the given height and width centred at ``center``
    (default: the left boundary, which the zero-flux condition mirrors)."""

    height: float
    width: float
    center: float | None = None


@dataclass(frozen=True)
class ProfileTransplant:
    """Mirrored wave profile u(x) = phi(x_edge - x) with its exact history
    u(s, x) = phi(c s + x_edge - x) on [-r, 0]; the front moves right."""

    profile: WaveProfile
    x_edge: float


class DelayBuffer:
    """Snapshots of u on [t - r - store_dt, t] with linear interpolation."""

    def __init__(self, r: float, store_dt: float):
        self.r = r
        self.store_dt = store_dt
        self.times: deque[float] = deque()
        self.states: deque[np.ndarray] = deque()

    def push(self, t: float, u: np.ndarray) -> None:
        self.times.append(t)
        self.states.append(u.copy())
        while len(self.times) > 2 and self.times[1] < t - self.r - self.store_dt:
            self.times.popleft()
            self.states.popleft()

    def at(self, s: float) -> np.ndarray:
        ts = self.times
        if s <= ts[0]:
            return self.states[0]
        if s >= ts[-1]:
            return self.states[-1]
        # snapshots are uniform except possibly the newest one
        i = min(int((s - ts[0]) / self.store_dt), len(ts) - 2)
        while i > 0 and ts[i] > s:
            i -= 1
        while i < len(ts) - 2 and ts[i + 1] < s:
            i += 1
        t0, t1 = ts[i], ts[i + 1]
        w = (s - t0) / (t1 - t0)
        return (1.0 - w) * self.states[i] + w * self.states[i + 1]

    @property
    def span(self) -> float:
        return self.times[-1] - self.times[0] if self.times else 0.0


@dataclass
class SimState:
    t: float
    u: np.ndarray
    grid: Grid1D
    buffer: DelayBuffer
    clipped_mass: float = 0.0


def lipschitz_bound(spec: KineticsSpec, umax: float) -> float:
    s = np.linspace(0.0, max(umax, 1e-12), 513)
    return float(np.max(np.abs(spec.dd(s))) + np.max(np.abs(spec.db(s))))


def cfl_bound(spec: KineticsSpec, dx: float, umax: float) -> float:
    m, D = spec.m, spec.diffusivity
    return 0.4 * dx * dx / (2.0 * D * m * umax ** (m - 1.0) + dx * dx * lipschitz_bound(spec, umax))


def _delayed(spec: KineticsSpec, state: SimState) -> np.ndarray:
    if spec.delay == 0:
        return state.u
    return state.buffer.at(state.t - spec.delay)


def step(spec: KineticsSpec, state: SimState, dt: float, *, check: bool = True,
         store: bool = False) -> SimState:
    """Advance one explicit step in place and return the state."""
    u = state.u
    if check:
        umax = float(u.max()) if u.size else 0.0
        lim = cfl_bound(spec, state.grid.dx, max(umax, 1e-12))
        if dt > lim * (1 + 1e-12):
            raise ParameterError(f"dt={dt:.3g} violates the CFL bound {lim:.3g}")
    dx = state.grid.dx
    w = u**spec.m
    lap = np.empty_like(w)
    lap[1:-1] = w[2:] - 2.0 * w[1:-1] + w[:-2]
    lap[0] = w[1] - w[0]
    lap[-1] = w[-2] - w[-1]
    ud = _delayed(spec, state)
    new = u + dt * (spec.diffusivity * lap / (dx * dx) - spec.d(u) + spec.b(ud))
    neg = new < 0
    if np.any(neg):
        state.clipped_mass += float(-new[neg].sum() * dx)
        new[neg] = 0.0
    state.u = new
    state.t += dt
    if store and spec.delay > 0:
        state.buffer.push(state.t, new)
    return state


@dataclass
class FrontTrace:
    t: np.ndarray
    x_front: np.ndarray
    speed: float
    snapshots: dict[float, np.ndarray]
    x: np.ndarray
    probes: dict[float, tuple[np.ndarray, np.ndarray]]
    kappa: float
    delay: float
    dt: float
    dx: float
    clipped_mass: float
    truncated: bool
    level_speeds: dict[str, float] = field(default_factory=dict)
    final: np.ndarray | None = None


def front_position(x: np.ndarray, u: np.ndarray, level: float) -> float:
    """Rightmost crossing of ``level``, linearly interpolated (nan if none)."""
    above = np.nonzero(u >= level)[0]
    if above.size == 0:
        return math.nan
    i = int(above[-1])
    if i == len(u) - 1:
        return float(x[-1])
    u0, u1 = u[i], u[i + 1]
    return float(x[i] + (x[i + 1] - x[i]) * (u0 - level) / (u0 - u1))


def _fit_speed(t: np.ndarray, xf: np.ndarray) -> float:
    ok = np.isfinite(xf)
    t, xf = t[ok], xf[ok]
    if t.size < 3:
        return math.nan
    sel = t >= t[0] + 0.5 * (t[-1] - t[0])
    if np.count_nonzero(sel) < 2:
        sel = slice(None)
    return float(np.polyfit(t[sel], xf[sel], 1)[0])


def _initial(spec, grid, init, store_dt):
    x = grid.x
    r = spec.delay
    buf = DelayBuffer(r, store_dt)
    if isinstance(init, CompactBump):
        xc = grid.x_lo if init.center is None else init.center
        z = (x - xc) / (0.5 * init.width)
        u0 = init.height * np.clip(1.0 - z * z, 0.0, None)
        if r > 0:
            n = max(2, int(math.ceil(r / store_dt)) + 1)
            for s in np.linspace(-r, 0.0, n):
                buf.push(float(s), u0)
        return u0, buf
    if isinstance(init, ProfileTransplant):
        prof = init.profile

        def shape(s: float) -> np.ndarray:
            xi = prof.speed * s + init.x_edge - x
            out = np.zeros_like(xi)
            inside = xi > prof.t_start
            beyond = xi >= prof.t_end
            mid = inside & ~beyond
            if np.any(mid):
                out[mid] = prof.sample(xi[mid])[0]
            if np.any(beyond):
                out[beyond] = prof.sample([prof.t_end])[0][0]
            if prof.start == "sharp":
                early = (xi > 0) & (xi <= prof.t_start)
                out[early] = [prof.history.pre(v) for v in xi[early]]
            return np.clip(out, 0.0, None)

        if r > 0:
            n = max(2, int(math.ceil(r / store_dt)) + 1)
            for s in np.linspace(-r, 0.0, n):
                buf.push(float(s), shape(float(s)))
        return shape(0.0), buf
    raise ParameterError(f"unknown initial condition {init!r}")


def run(
    spec: KineticsSpec,
    init,
    T: float,
    grid: Grid1D,
    *,
    dt: float | None = None,
    store_dt: float | None = None,
    record_dt: float | None = None,
    snapshot_times=(),
    probes=(),
    level: float | None = None,
) -> FrontTrace:
    """Simulate to time T and trace the rightmost crossing of kappa/2."""
    k = derive_constants(spec)
    kappa = k.kappa
    level = 0.5 * kappa if level is None else level
    r = spec.delay
    store_dt = (r / 200.0 if r > 0 else 1.0) if store_dt is None else store_dt
    u, buf = _initial(spec, grid, init, store_dt)
    state = SimState(0.0, u, grid, buf)
    # dt from the CFL bound at the largest level the solution can reach
    umax_cap = max(float(u.max()), k.zeta2 + max(1.0, k.zeta2) * 0.25)
    dt_cfl = cfl_bound(spec, grid.dx, umax_cap)
    if dt is None:
        dt = dt_cfl
    elif dt > dt_cfl * (1 + 1e-12):
        raise ParameterError(f"dt={dt:.3g} violates the CFL bound {dt_cfl:.3g}")
    if r > 0:
        # land exactly on stored-snapshot times
        per = max(1, int(math.ceil(store_dt / dt)))
        dt = store_dt / per
    else:
        per = 1
    record_dt = (r / 10.0 if r > 0 else 0.1) if record_dt is None else record_dt
    x = grid.x
    snaps = sorted(float(s) for s in snapshot_times)
    snapshots: dict[float, np.ndarray] = {}
    probe_idx = {float(p): int(np.clip(np.searchsorted(x, p), 0, len(x) - 1)) for p in probes}
    probe_t: list[float] = []
    probe_v: dict[float, list[float]] = {p: [] for p in probe_idx}
    levels = {"quarter": 0.25 * kappa, "half": level, "three_quarter": 0.75 * kappa}
    ts, xs = [], {name: [] for name in levels}
    n_steps = int(math.ceil(T / dt - 1e-9))
    rec_every = max(1, int(round(record_dt / dt)))
    truncated = False
    edge_guard = 10 * grid.dx
    for n in range(n_steps + 1):
        if n % rec_every == 0 or n == n_steps:
            ts.append(state.t)
            for name, lv in levels.items():
                xs[name].append(front_position(x, state.u, lv))
            if probe_idx:
                probe_t.append(state.t)
                for p, i in probe_idx.items():
                    probe_v[p].append(float(state.u[i]))
            pos = xs["quarter"][-1]
            if math.isfinite(pos) and pos > grid.x_hi - edge_guard:
                log.warning("front reached the boundary at t=%.4g; trace truncated", state.t)
                truncated = True
                break
        while snaps and state.t >= snaps[0] - 0.5 * dt:
            snapshots[snaps.pop(0)] = state.u.copy()
        if n == n_steps:
            break
        step(spec, state, dt, check=False, store=(r > 0 and (n + 1) % per == 0))
    t_arr = np.asarray(ts)
    speeds = {name: _fit_speed(t_arr, np.asarray(v)) for name, v in xs.items()}
    return FrontTrace(
        t=t_arr,
        x_front=np.asarray(xs["half"]),
        speed=speeds["half"],
        snapshots=snapshots,
        x=x,
        probes={p: (np.asarray(probe_t), np.asarray(v)) for p, v in probe_v.items()},
        kappa=kappa,
        delay=r,
        dt=dt,
        dx=grid.dx,
        clipped_mass=state.clipped_mass,
        truncated=truncated,
        level_speeds=speeds,
        final=state.u.copy(),
    )


def detect_oscillation(trace: FrontTrace, x_probe: float, window: float | None = None) -> TailReport:
    """Tail classification of u(t, x_probe) after the front has passed."""
    if x_probe not in trace.probes:
        raise ParameterError(f"x={x_probe} was not recorded as a probe")
    t, u = trace.probes[x_probe]
    r = trace.delay
    window = (5.0 * r if r > 0 else 0.1 * (t[-1] - t[0])) if window is None else window
    passed = np.nonzero(u >= 0.5 * trace.kappa)[0]
    if passed.size == 0:
        return classify_series(t[-2:], u[-2:], trace.kappa, window)
    t_pass = float(t[passed[0]])
    if r > 0 and t[-1] - t_pass < 10.0 * r:
        return classify_series(t[-2:], u[-2:], trace.kappa, window)
    return classify_series(t, u, trace.kappa, window, t_from=t_pass)
