"""Adaptive Dormand-Prince 5(4) stepper for the delayed flux system.

The wave equation c phi' = D (phi^m)'' - d(phi) + b(phi(t - c r)) is written
in the flux variable psi = D (phi^m)' as

    phi' = psi / (D m phi^(m-1))
    psi' = c psi / (D m phi^(m-1)) + d(phi) - b(phi(t - c r)).

Accepted steps are stored as cubic Hermite pieces of (phi, psi) so delayed
values are read back without re-integration.  The stepper is scalar pure
Python: the state has two components and per-step numpy overhead would
dominate.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable

# Dormand-Prince coefficients
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


class History:
    """Piecewise cubic Hermite storage of (phi, psi) on [t_start, t_end].

    ``pre`` gives phi for t < t_start (zero for a sharp edge, the exponential
    ansatz for a smooth tail).
    """

    __slots__ = ("t0", "h", "cphi", "cpsi", "pre", "t_start")

    def __init__(self, t_start: float, pre: Callable[[float], float] | None = None):
        self.t_start = t_start
        self.t0: list[float] = []
        self.h: list[float] = []
        self.cphi: list[tuple[float, float, float, float]] = []
        self.cpsi: list[tuple[float, float, float, float]] = []
        self.pre = pre

    def __len__(self):
        return len(self.t0)

    @property
    def t_end(self) -> float:
        if not self.t0:
            return self.t_start
        return self.t0[-1] + self.h[-1]

    def append(self, t0, h, y0, f0, y1, f1, z0, g0, z1, g1):
        self.t0.append(t0)
        self.h.append(h)
        self.cphi.append(_hermite(h, y0, f0, y1, f1))
        self.cpsi.append(_hermite(h, z0, g0, z1, g1))

    def prefix(self, n: int) -> History:
        """Copy holding the first n pieces (pieces themselves are shared)."""
        out = History(self.t_start, self.pre)
        out.t0 = self.t0[:n]
        out.h = self.h[:n]
        out.cphi = self.cphi[:n]
        out.cpsi = self.cpsi[:n]
        return out

    def index(self, s: float) -> int:
        i = bisect.bisect_right(self.t0, s) - 1
        return 0 if i < 0 else i

    def phi(self, s: float) -> float:
        if s < self.t_start:
            return self.pre(s) if self.pre is not None else 0.0
        i = bisect.bisect_right(self.t0, s) - 1
        if i < 0:
            i = 0
        a0, a1, a2, a3 = self.cphi[i]
        th = (s - self.t0[i]) / self.h[i]
        return a0 + th * (a1 + th * (a2 + th * a3))

    def psi(self, s: float) -> float:
        i = self.index(s)
        a0, a1, a2, a3 = self.cpsi[i]
        th = (s - self.t0[i]) / self.h[i]
        return a0 + th * (a1 + th * (a2 + th * a3))

    def phi_at_piece(self, i: int, s: float) -> float:
        a0, a1, a2, a3 = self.cphi[i]
        th = (s - self.t0[i]) / self.h[i]
        return a0 + th * (a1 + th * (a2 + th * a3))


def _hermite(h, y0, f0, y1, f1):
    dy = y1 - y0
    return (y0, h * f0, 3.0 * dy - h * (2.0 * f0 + f1), -2.0 * dy + h * (f0 + f1))


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0


# termination codes
RUNNING, REACHED, DECAYED, ESCAPED, UNDERFLOW = range(5)


class FluxSystem:
    """Right-hand side of the delayed flux system at a fixed speed."""

    def __init__(self, spec, c: float, history: History):
        self.Dm = spec.diffusivity * spec.m
        self.m1 = spec.m - 1.0
        self.c = c
        self.lag = c * spec.delay
        self.b = spec.birth.value
        self.d = spec.death.value
        self.hist = history
        self.undelayed = spec.delay == 0

    def forcing(self, t: float, phi: float) -> float:
        if self.undelayed:
            return self.b(phi)
        s = t - self.lag
        if s < self.hist.t_start:
            pre = self.hist.pre
            return self.b(pre(s)) if pre is not None else 0.0
        return self.b(self.hist.phi(s))

    def __call__(self, t: float, phi: float, psi: float):
        g = self.Dm * phi**self.m1
        dphi = psi / g
        return dphi, self.c * dphi + self.d(phi) - self.forcing(t, phi)


def integrate_to(
    sys: FluxSystem,
    t: float,
    phi: float,
    psi: float,
    t_end: float,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    h: float | None = None,
    floor: float = 0.0,
    escape: float = math.inf,
    fsal: tuple[float, float] | None = None,
    stats: StepStats | None = None,
):
    """Advance (phi, psi) from t to t_end, appending pieces to sys.hist.

    Returns (code, t, phi, psi, h_next).  ``code`` is REACHED, DECAYED
    (phi fell below ``floor`` with psi <= 0, or a stage left phi > 0 with
    non-positive flux), ESCAPED (phi > escape) or UNDERFLOW.
    """
    hist = sys.hist
    span = t_end - t
    if span <= 0:
        return REACHED, t, phi, psi, h
    if h is None or h <= 0:
        h = min(span, 1e-3 * max(1.0, span))
    hmin = 1e-14 * max(1.0, abs(t_end))
    if fsal is None:
        k1p, k1s = sys(t, phi, psi)
    else:
        k1p, k1s = fsal
    while t < t_end:
        last = False
        if t + h >= t_end or t_end - (t + h) < 1e-12 * h:
            h = t_end - t
            last = True
        try:
            y = phi + h * _A21 * k1p
            if y <= 0:
                raise _Negative
            k2p, k2s = sys(t + _C2 * h, y, psi + h * _A21 * k1s)
            y = phi + h * (_A31 * k1p + _A32 * k2p)
            if y <= 0:
                raise _Negative
            k3p, k3s = sys(t + _C3 * h, y, psi + h * (_A31 * k1s + _A32 * k2s))
            y = phi + h * (_A41 * k1p + _A42 * k2p + _A43 * k3p)
            if y <= 0:
                raise _Negative
            k4p, k4s = sys(t + _C4 * h, y, psi + h * (_A41 * k1s + _A42 * k2s + _A43 * k3s))
            y = phi + h * (_A51 * k1p + _A52 * k2p + _A53 * k3p + _A54 * k4p)
            if y <= 0:
                raise _Negative
            k5p, k5s = sys(
                t + _C5 * h, y, psi + h * (_A51 * k1s + _A52 * k2s + _A53 * k3s + _A54 * k4s)
            )
            y = phi + h * (_A61 * k1p + _A62 * k2p + _A63 * k3p + _A64 * k4p + _A65 * k5p)
            if y <= 0:
                raise _Negative
            k6p, k6s = sys(
                t + h,
                y,
                psi + h * (_A61 * k1s + _A62 * k2s + _A63 * k3s + _A64 * k4s + _A65 * k5s),
            )
            phin = phi + h * (_B1 * k1p + _B3 * k3p + _B4 * k4p + _B5 * k5p + _B6 * k6p)
            psin = psi + h * (_B1 * k1s + _B3 * k3s + _B4 * k4s + _B5 * k5s + _B6 * k6s)
            if phin <= 0:
                raise _Negative
            k7p, k7s = sys(t + h, phin, psin)
        except (_Negative, ZeroDivisionError, OverflowError, ValueError):
            if psi <= 0 and (phi <= floor or h < hmin * 1e3):
                return DECAYED, t, phi, psi, h
            h *= 0.25
            if h < hmin:
                return (DECAYED if psi <= 0 else UNDERFLOW), t, phi, psi, h
            if stats is not None:
                stats.rejected += 1
            continue
        ep = h * (_E1 * k1p + _E3 * k3p + _E4 * k4p + _E5 * k5p + _E6 * k6p + _E7 * k7p)
        es = h * (_E1 * k1s + _E3 * k3s + _E4 * k4s + _E5 * k5s + _E6 * k6s + _E7 * k7s)
        sp = atol + rtol * max(abs(phi), abs(phin))
        ss = atol + rtol * max(abs(psi), abs(psin))
        err = math.sqrt(0.5 * ((ep / sp) ** 2 + (es / ss) ** 2))
        if err > 1.0 or err != err:
            fac = 0.2 if err != err else max(0.2, 0.9 * err**-0.2)
            h *= fac
            if h < hmin:
                return (DECAYED if psi <= 0 else UNDERFLOW), t, phi, psi, h
            if stats is not None:
                stats.rejected += 1
            continue
        hist.append(t, h, phi, k1p, phin, k7p, psi, k1s, psin, k7s)
        if stats is not None:
            stats.accepted += 1
        hprev = h
        t = t_end if last else t + h
        phi, psi = phin, psin
        k1p, k1s = k7p, k7s
        fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err**-0.2))
        h = hprev * fac
        if phi > escape:
            return ESCAPED, t, phi, psi, h
        if phi <= floor and psi <= 0:
            return DECAYED, t, phi, psi, h
    return REACHED, t, phi, psi, h


class _Negative(Exception):
    pass
