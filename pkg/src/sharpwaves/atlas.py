"""Delay sweeps of the speed curves and the (r, c) classification map.

Each row runs the characteristic analysis, the sharp-speed shooting and
(optionally) the empirical smooth threshold at one delay.  Rows are
independent; a failure is recorded in its row and the sweep moves on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .charspec import find_c_kappa, find_c_star, lower_bound_speed, make_context
from .errors import ModelError, ParameterError
from .kinetics import KineticsSpec
from .profile import MONOTONE, NONDECAYING, OSCILLATORY, Persistent
from .shooting import empirical_min_smooth_speed, find_sharp_speed

_INDEX = {MONOTONE: "1", OSCILLATORY: "2", NONDECAYING: "3"}


def taxonomy_label(start: str, m: float, tail_class: str | None) -> str:
    """A* smooth, B* sharp non-C1 (m >= 2), C* sharp C1 (1 < m < 2).

    Index 1 monotone, 2 non-monotone, 3 non-decaying oscillating; '?' when the
    tail is undetermined.
    """
    if start == "smooth":
        family = "A"
    else:
        family = "B" if m >= 2 else "C"
    return family + _INDEX.get(tail_class or "", "?")


@dataclass
class AtlasRow:
    r: float
    cdot: float = math.nan
    c0: float = math.nan
    c_kappa: float = math.nan
    c_star: float = math.nan
    c_hat_emp: float | None = None
    tail_class: str | None = None
    edge: str | None = None
    label: str | None = None
    error: str | None = None

    def as_tuple(self):
        return (self.r, self.cdot, self.c0, self.c_kappa, self.c_star, self.c_hat_emp,
                self.tail_class, self.edge, self.label, self.error)


def compute_row(spec: KineticsSpec, r: float, *, tol: float = 1e-6,
                c_hat_factors=None) -> AtlasRow:
    row = AtlasRow(r)
    try:
        ctx = make_context(spec.with_delay(r))
        row.c_kappa = find_c_kappa(ctx)
        row.c_star = find_c_star(ctx) if ctx.consts.bpk < 0 else math.inf
        try:
            row.cdot = lower_bound_speed(ctx).cdot
        except ModelError as exc:
            row.error = f"cdot: {exc}"
        res = find_sharp_speed(ctx, tol)
        row.c0 = res.c0
        row.edge = "NonC1" if spec.m >= 2 else "C1"
        out = res.outcome_at_c0
        if isinstance(out, Persistent):
            row.tail_class = out.tail.classification
        else:
            row.tail_class = out.kind
        row.label = taxonomy_label("sharp", spec.m, row.tail_class)
        if c_hat_factors:
            grid = [row.c0 * f for f in c_hat_factors]
            row.c_hat_emp = empirical_min_smooth_speed(ctx, grid)
    except Exception as exc:  # noqa: BLE001 - failures stay in their row
        msg = f"{type(exc).__name__}: {exc}"
        row.error = msg if row.error is None else f"{row.error}; {msg}"
    return row


def sweep(spec: KineticsSpec, r_values, *, tol: float = 1e-6, c_hat_factors=None) -> list[AtlasRow]:
    rs = [float(r) for r in r_values]
    if any(not (r > 0 and math.isfinite(r)) for r in rs):
        raise ParameterError("delays must be positive and finite")
    if any(b <= a for a, b in zip(rs, rs[1:])):
        raise ParameterError("delays must be strictly increasing")
    return [compute_row(spec, r, tol=tol, c_hat_factors=c_hat_factors) for r in rs]


@dataclass(frozen=True)
class Intersections:
    r_kappa: float | None
    r_star: float | None
    r_kappa_all: tuple[float, ...] = field(default_factory=tuple)
    r_star_all: tuple[float, ...] = field(default_factory=tuple)


def _crossings(rs, diffs) -> list[float]:
    pts = [(r, d) for r, d in zip(rs, diffs) if d is not None and math.isfinite(d)]
    if len(pts) < 4:
        return []
    out = []
    for (r0, d0), (r1, d1) in zip(pts, pts[1:]):
        if d0 == 0:
            out.append(r0)
        elif d0 * d1 < 0:
            out.append(r0 + (r1 - r0) * d0 / (d0 - d1))
    if pts[-1][1] == 0:
        out.append(pts[-1][0])
    return out


def find_intersections(rows: list[AtlasRow]) -> Intersections:
    """Linear-interpolated delays where c0 crosses c_kappa and c_star."""
    rs = [row.r for row in rows]
    dk = [row.c0 - row.c_kappa if math.isfinite(row.c_kappa) else None for row in rows]
    ds = [row.c0 - row.c_star if math.isfinite(row.c_star) else None for row in rows]
    ck, cs = _crossings(rs, dk), _crossings(rs, ds)
    return Intersections(ck[0] if ck else None, cs[0] if cs else None, tuple(ck), tuple(cs))


def plot_svg(rows: list[AtlasRow], path) -> None:
    """Speed curves against r: solid c0, dashed thresholds, dotted cdot."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rs = [row.r for row in rows]
    plt.rcParams["svg.hashsalt"] = "sharpwaves"
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rs, [row.c0 for row in rows], "k-", label="$c_0$")
    ax.plot(rs, [row.c_kappa for row in rows], "b--", label=r"$c_\kappa$")
    ax.plot(rs, [row.c_star for row in rows], "r--", label="$c^*$")
    ax.plot(rs, [row.cdot for row in rows], "g:", label=r"$\dot c$")
    hats = [(row.r, row.c_hat_emp) for row in rows if row.c_hat_emp is not None]
    if hats:
        ax.plot(*zip(*hats), "m-.", label=r"$\hat c$ (empirical)")
    finite = [v for row in rows for v in (row.c0, row.c_kappa, row.c_star) if math.isfinite(v)]
    if finite:
        ax.set_ylim(0, 1.2 * max(finite))
    ax.set_xlabel("r")
    ax.set_ylabel("c")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
