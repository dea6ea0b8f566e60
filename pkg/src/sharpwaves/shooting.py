"""Sharp wave speed by bisection on the trajectory outcome.

The predicate is "the sharp-start run decays to zero".  Below the sharp speed
c0 runs decay, above it they escape, and at c0 the run persists.  Each probe
uses the horizon policy 40 max(c r, 1), doubled until the outcome is stable
across one doubling.  The tail class reported at c0 follows the same policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .charspec import CharContext, lower_bound_speed, upper_guard_estimate
from .errors import ModelError, NumericalError, ParameterError
from .profile import (
    Blowup,
    DecayedToZero,
    Persistent,
    SharpEdge,
    SmoothTail,
    TrajectoryOutcome,
    default_horizon,
    integrate,
)

MAX_DOUBLINGS = 6
TAIL_DOUBLINGS = 3
C_CAP = 1e3
C_FLOOR = 1e-10


@dataclass(frozen=True)
class Probe:
    c: float
    outcome: str
    t_term: float | None
    horizon: float


def probe(ctx: CharContext, c: float, start=SharpEdge(), log: list | None = None) -> TrajectoryOutcome:
    """Run at speed c with the doubling horizon policy."""
    H = default_horizon(ctx, c)
    for _ in range(MAX_DOUBLINGS + 1):
        out = integrate(ctx, c, start, horizon=2.0 * H)
        t_term = getattr(out, "t_death", None) or getattr(out, "t_escape", None)
        stable = isinstance(out, Persistent) or t_term <= H
        if stable:
            break
        H *= 2.0
    if log is not None:
        log.append(Probe(c, out.kind, t_term, 2.0 * H))
    return out


def stable_outcome(ctx: CharContext, c: float, start=SharpEdge(), speed_bracket=None,
                   doublings: int = TAIL_DOUBLINGS) -> TrajectoryOutcome:
    """Shadowed run whose tail class agrees with a run over twice the horizon."""
    H = default_horizon(ctx, c)
    out = integrate(ctx, c, start, horizon=H, shadow=True, speed_bracket=speed_bracket)
    for _ in range(doublings):
        if not isinstance(out, Persistent):
            break
        H *= 2.0
        longer = integrate(ctx, c, start, horizon=H, shadow=True, speed_bracket=speed_bracket)
        same = isinstance(longer, Persistent) and longer.tail.classification == out.tail.classification
        out = longer
        if same:
            break
    return out


def decays(ctx: CharContext, c: float, log: list | None = None) -> bool:
    return isinstance(probe(ctx, c, log=log), DecayedToZero)


def find_guards(ctx: CharContext, log: list | None = None) -> tuple[float, float]:
    """(c_lo, c_hi) with a decaying run at c_lo and an escaping run at c_hi."""
    try:
        seed = 2.0 * lower_bound_speed(ctx).cdot
    except ModelError:
        seed = upper_guard_estimate(ctx.spec)
    c = seed
    if decays(ctx, c, log):
        c_lo = c
        c_hi = None
        while c_hi is None:
            c *= 2.0
            if c > C_CAP:
                raise ModelError(f"no escaping run below c = {C_CAP:g}", clause="upper-guard")
            out = probe(ctx, c, log=log)
            if isinstance(out, DecayedToZero):
                c_lo = c
            else:
                c_hi = c
    else:
        c_hi = c
        c_lo = None
        while c_lo is None:
            c *= 0.5
            if c < C_FLOOR:
                raise ModelError("no decaying run above the speed floor", clause="lower-guard")
            if decays(ctx, c, log):
                c_lo = c
            else:
                c_hi = c
    return c_lo, c_hi


@dataclass
class ShootingResult:
    c0: float
    bracket_width: float
    outcome_at_c0: TrajectoryOutcome
    iterations: int
    guard_lo: float
    guard_hi: float
    bracket: tuple[float, float]
    sub_brackets: list[tuple[float, float]] = field(default_factory=list)
    monotone_predicate: bool = True
    probes: list[Probe] = field(default_factory=list)
    uniqueness: str = "conjectured"


def _scan_brackets(ctx, lo, hi, n, log):
    """Sign changes of the decay predicate on n interior points of [lo, hi]."""
    cs = [lo + (hi - lo) * i / (n + 1) for i in range(n + 2)]
    flags = [True] + [decays(ctx, c, log) for c in cs[1:-1]] + [False]
    return [(cs[i], cs[i + 1]) for i in range(len(cs) - 1) if flags[i] != flags[i + 1]], flags


def find_sharp_speed(
    ctx: CharContext,
    tol: float = 1e-6,
    guards: tuple[float, float] | None = None,
    scan_points: int = 7,
    shadow: bool = True,
) -> ShootingResult:
    """Bisection for the sharp speed c0 to bracket width ``tol``."""
    if not tol > 0:
        raise ParameterError("tol must be positive")
    log: list[Probe] = []
    g_lo, g_hi = guards if guards is not None else find_guards(ctx, log)
    subs, _ = _scan_brackets(ctx, g_lo, g_hi, scan_points, log)
    monotone = len(subs) == 1
    # every decay -> non-decay transition is refined; c0 is the lowest one
    refined = []
    iters = 0
    for a, b in subs:
        lo, hi = a, b
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            iters += 1
            if decays(ctx, mid, log):
                lo = mid
            else:
                hi = mid
        refined.append((lo, hi))
    ups = [br for br, (a, _) in zip(refined, subs) if decays(ctx, a, None) or a == g_lo]
    lo, hi = (ups or refined)[0]
    c0 = 0.5 * (lo + hi)
    if shadow:
        out = stable_outcome(ctx, c0, SharpEdge(), speed_bracket=(lo, hi))
    else:
        out = probe(ctx, c0)
    return ShootingResult(
        c0=c0,
        bracket_width=hi - lo,
        outcome_at_c0=out,
        iterations=iters,
        guard_lo=g_lo,
        guard_hi=g_hi,
        bracket=(lo, hi),
        sub_brackets=refined,
        monotone_predicate=monotone,
        probes=log,
    )


def smooth_persists(ctx: CharContext, c: float, amplitude: float | None = None,
                    horizon: float | None = None) -> TrajectoryOutcome:
    """Shadowed smooth-tail run at speed c."""
    return integrate(ctx, c, SmoothTail(amplitude), horizon=horizon, shadow=True)


def empirical_min_smooth_speed(ctx: CharContext, c_grid, amplitude: float | None = None,
                               horizon: float | None = None) -> float | None:
    """EMPIRICAL: smallest grid speed whose smooth-tail run persists."""
    grid = [float(c) for c in c_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("c_grid must be strictly increasing")
    for c in grid:
        try:
            out = smooth_persists(ctx, c, amplitude, horizon)
        except NumericalError:
            continue
        if isinstance(out, Persistent) and out.profile.meta.get("shadow", "ok") == "ok":
            return c
    return None
