"""Model instance, structural checks and derived constants.

A model is the tuple (m, D, r, b, d) of the delayed degenerate equation

    u_t = D (u^m)_xx - d(u) + b(u(t - r)).

Birth and death laws are small frozen dataclasses exposing ``value`` and
``deriv``.  Both accept a Python float (fast ``math`` path used by the
scalar integrator) or a numpy array (used by the PDE solver and the grid
scans below).
"""

from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, ModelError, RangeError

ROOT_XTOL = 1e-12
ROOT_RTOL = 1e-15
SCAN_POINTS = 10_000
# Upper end of the equilibrium search for laws defined on [0, inf).
_SCAN_MAX = 1e6
# Fallback scan range when no equilibrium exists (report-only checks).
_FALLBACK_RANGE = 10.0


def _root(f, a: float, b: float) -> float:
    return brentq(f, a, b, xtol=ROOT_XTOL, rtol=ROOT_RTOL, maxiter=500)


# ---------------------------------------------------------------------------
# birth laws


@dataclass(frozen=True)
class Nicholson:
    """b(u) = p u exp(-a u^q)."""

    p: float
    a: float = 1.0
    q: float = 1.0
    kind = "nicholson"

    def __post_init__(self):
        _positive(self, "p", "a", "q")

    def value(self, u):
        if isinstance(u, np.ndarray):
            return self.p * u * np.exp(-self.a * u**self.q)
        return self.p * u * math.exp(-self.a * u**self.q)

    def deriv(self, u):
        if isinstance(u, np.ndarray):
            uq = u**self.q
            return self.p * np.exp(-self.a * uq) * (1.0 - self.a * self.q * uq)
        uq = u**self.q
        return self.p * math.exp(-self.a * uq) * (1.0 - self.a * self.q * uq)


@dataclass(frozen=True)
class MackeyGlass:
    """b(u) = p u / (1 + a u^q)."""

    p: float
    a: float = 1.0
    q: float = 1.0
    kind = "mackey_glass"

    def __post_init__(self):
        _positive(self, "p", "a", "q")

    def value(self, u):
        return self.p * u / (1.0 + self.a * u**self.q)

    def deriv(self, u):
        uq = self.a * u**self.q
        return self.p * (1.0 + uq - self.q * uq) / (1.0 + uq) ** 2


@dataclass(frozen=True)
class AgeStructured:
    """b(u) = p exp(-gamma r) u, with its own maturation delay r."""

    p: float
    gamma: float
    r: float
    kind = "age_structured"

    def __post_init__(self):
        _positive(self, "p")
        if self.gamma < 0 or self.r < 0:
            raise ModelError("age-structured birth needs gamma >= 0 and r >= 0")

    @property
    def slope(self) -> float:
        return self.p * math.exp(-self.gamma * self.r)

    def value(self, u):
        return self.slope * u

    def deriv(self, u):
        if isinstance(u, np.ndarray):
            return np.full_like(u, self.slope, dtype=float)
        return self.slope


@dataclass(frozen=True)
class LinearBirth:
    """b(u) = p u."""

    p: float
    kind = "linear"

    def __post_init__(self):
        _positive(self, "p")

    def value(self, u):
        return self.p * u

    def deriv(self, u):
        if isinstance(u, np.ndarray):
            return np.full_like(u, self.p, dtype=float)
        return self.p


# ---------------------------------------------------------------------------
# death laws


@dataclass(frozen=True)
class LinearDeath:
    """d(u) = delta u."""

    delta: float
    kind = "linear"

    def __post_init__(self):
        _positive(self, "delta", clause="death-increasing")

    def value(self, u):
        return self.delta * u

    def deriv(self, u):
        if isinstance(u, np.ndarray):
            return np.full_like(u, self.delta, dtype=float)
        return self.delta

    def inverse(self, y: float) -> float:
        return y / self.delta


@dataclass(frozen=True)
class QuadraticDeath:
    """d(u) = delta u^2."""

    delta: float
    kind = "quadratic"

    def __post_init__(self):
        _positive(self, "delta", clause="death-increasing")

    def value(self, u):
        return self.delta * u * u

    def deriv(self, u):
        return 2.0 * self.delta * u

    def inverse(self, y: float) -> float:
        return math.sqrt(y / self.delta)


@dataclass(frozen=True)
class PowerDeath:
    """d(u) = delta u^k with k >= 1."""

    delta: float
    k: float
    kind = "power"

    def __post_init__(self):
        _positive(self, "delta", clause="death-increasing")
        if not self.k >= 1:
            raise ModelError("power death needs k >= 1 (d'' >= 0)", clause="death-convex")

    def value(self, u):
        return self.delta * u**self.k

    def deriv(self, u):
        return self.delta * self.k * u ** (self.k - 1.0)

    def inverse(self, y: float) -> float:
        return (y / self.delta) ** (1.0 / self.k)


# ---------------------------------------------------------------------------
# tabulated law (usable for either role)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear law through the points (u_i, v_i).

    Derivatives use central differences with h = max(1e-6, 1e-6 u), one-sided
    at the ends of the grid.  Evaluation outside the grid raises RangeError.
    """

    u: tuple[float, ...]
    v: tuple[float, ...]
    kind = "tabulated"

    def __post_init__(self):
        u = tuple(float(x) for x in self.u)
        v = tuple(float(x) for x in self.v)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        if len(u) != len(v) or len(u) < 2:
            raise ModelError("tabulated law needs at least two (u, value) pairs of equal length")
        if any(b <= a for a, b in zip(u, u[1:])):
            raise ModelError("tabulated grid must be strictly increasing", clause="tabulated-grid")
        if u[0] < 0:
            raise ModelError("tabulated grid must start at u >= 0", clause="tabulated-grid")

    @property
    def lo(self) -> float:
        return self.u[0]

    @property
    def hi(self) -> float:
        return self.u[-1]

    def _check(self, u):
        lo, hi = self.u[0], self.u[-1]
        tol = 1e-12 * max(1.0, abs(hi))
        if isinstance(u, np.ndarray):
            if u.size and (u.min() < lo - tol or u.max() > hi + tol):
                raise RangeError(f"tabulated law evaluated outside [{lo}, {hi}]")
        elif u < lo - tol or u > hi + tol:
            raise RangeError(f"tabulated law evaluated at {u} outside [{lo}, {hi}]")

    def value(self, u):
        self._check(u)
        if isinstance(u, np.ndarray):
            return np.interp(u, self.u, self.v)
        i = min(max(bisect.bisect_right(self.u, u) - 1, 0), len(self.u) - 2)
        u0, u1 = self.u[i], self.u[i + 1]
        w = (u - u0) / (u1 - u0)
        return self.v[i] + w * (self.v[i + 1] - self.v[i])

    def deriv(self, u):
        if isinstance(u, np.ndarray):
            return np.array([self.deriv(float(x)) for x in u])
        self._check(u)
        h = max(1e-6, 1e-6 * abs(u))
        a, b = max(u - h, self.lo), min(u + h, self.hi)
        return (self.value(b) - self.value(a)) / (b - a)

    def inverse(self, y: float) -> float:
        """Inverse of an increasing table (death role)."""
        if y < self.v[0] or y > self.v[-1]:
            raise RangeError(f"value {y} outside the tabulated range")
        return float(np.interp(y, self.v, self.u))


BirthLaw = Nicholson | MackeyGlass | AgeStructured | LinearBirth | Tabulated
DeathLaw = LinearDeath | QuadraticDeath | PowerDeath | Tabulated


def _positive(obj, *names, clause: str = "positive-parameter"):
    for name in names:
        val = getattr(obj, name)
        if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
            raise ModelError(f"{type(obj).__name__}.{name} must be a positive real, got {val!r}", clause=clause)


def _check_death(death) -> None:
    if isinstance(death, Tabulated):
        if abs(death.u[0]) > 0 or abs(death.v[0]) > 0:
            raise ModelError("tabulated death must pass through (0, 0)", clause="death-zero")
        s = np.linspace(death.lo, death.hi, 2001)
        vals = death.value(s)
        if np.any(np.diff(vals) <= 0):
            raise ModelError("tabulated death must be strictly increasing", clause="death-increasing")
        slopes = np.diff(np.asarray(death.v)) / np.diff(np.asarray(death.u))
        if np.any(np.diff(slopes) < -1e-12 * max(1.0, float(np.max(np.abs(slopes))))):
            raise ModelError("tabulated death must be convex", clause="death-convex")


# ---------------------------------------------------------------------------
# model instance


@dataclass(frozen=True)
class KineticsSpec:
    """Model instance (m, D, r, b, d)."""

    m: float
    diffusivity: float
    delay: float
    birth: BirthLaw
    death: DeathLaw

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m > 1):
            raise ModelError(f"degeneracy exponent m must exceed 1, got {self.m}", clause="m")
        if not (math.isfinite(self.diffusivity) and self.diffusivity > 0):
            raise ModelError(f"diffusivity must be positive, got {self.diffusivity}", clause="D")
        if not (math.isfinite(self.delay) and self.delay >= 0):
            raise ModelError(f"delay must be non-negative, got {self.delay}", clause="r")
        _check_death(self.death)

    def with_delay(self, r: float) -> KineticsSpec:
        return KineticsSpec(self.m, self.diffusivity, r, self.birth, self.death)

    def b(self, u):
        return self.birth.value(u)

    def d(self, u):
        return self.death.value(u)

    def db(self, u):
        return self.birth.deriv(u)

    def dd(self, u):
        return self.death.deriv(u)

    def d_inverse(self, y: float) -> float:
        """Inverse of the (strictly increasing) death law."""
        if y < 0:
            raise DomainError("d^-1 is defined on [0, inf)")
        return float(self.death.inverse(y))

    def domain_max(self) -> float:
        """Largest u at which both laws can be evaluated."""
        hi = _SCAN_MAX
        for law in (self.birth, self.death):
            if isinstance(law, Tabulated):
                hi = min(hi, law.hi)
        return hi


_WHICH = {
    "birth": "b",
    "death": "d",
    "birth'": "db",
    "death'": "dd",
}


def evaluate(spec: KineticsSpec, which: str, u):
    """Evaluate b, d, b' or d' at u >= 0."""
    try:
        attr = _WHICH[which]
    except KeyError:
        raise DomainError(f"unknown function {which!r}; expected one of {sorted(_WHICH)}") from None
    if isinstance(u, np.ndarray):
        if np.any(u < 0):
            raise DomainError("laws are defined on u >= 0")
    elif u < 0:
        raise DomainError(f"laws are defined on u >= 0, got {u}")
    return getattr(spec, attr)(u)


# ---------------------------------------------------------------------------
# derived constants


@dataclass(frozen=True)
class DerivedConstants:
    kappa: float
    s_M: float
    M: float
    zeta2: float
    theta: float
    zeta1: float
    bp0: float
    dp0: float
    bpk: float
    dpk: float
    unimodal: bool
    feedback: bool
    feedback_alt: bool
    monotone: bool = False
    eps0: float = field(default=float("nan"))

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _scan_grid(hi: float, lo: float = 0.0, n: int = SCAN_POINTS) -> np.ndarray:
    """Grid mixing linear and logarithmic spacing on (lo, hi]."""
    lin = np.linspace(lo, hi, n + 1)[1:]
    a = max(lo, 1e-9 * hi, 1e-12)
    logg = np.geomspace(a, hi, n)
    return np.unique(np.concatenate([lin, logg]))


def _find_kappa(spec: KineticsSpec) -> tuple[float, np.ndarray]:
    """First positive zero of b - d.  Returns (kappa, all sign-change brackets)."""
    hi = spec.domain_max()
    s = _scan_grid(hi)
    g = spec.b(s) - spec.d(s)
    idx = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) <= 0)[0]
    # exact zeros on the grid appear twice; keep distinct brackets
    brackets = []
    for i in idx:
        if g[i] == 0.0 and brackets and brackets[-1][1] == s[i]:
            continue
        brackets.append((s[i], s[i + 1]))
    if not brackets:
        raise ModelError("b - d has no positive zero: no positive equilibrium", clause="positive-equilibrium")
    f = lambda x: spec.b(x) - spec.d(x)
    roots = []
    for a, b in brackets:
        if f(a) == 0.0:
            roots.append(a)
        elif f(b) == 0.0:
            roots.append(b)
        else:
            roots.append(_root(f, a, b))
    return roots[0], np.array(roots)


def _find_sM(spec: KineticsSpec, hi: float) -> float:
    """Maximum point of b on (0, hi]; +inf if b is nondecreasing there."""
    s = _scan_grid(hi)
    bv = spec.b(s)
    i = int(np.argmax(bv))
    if i >= len(s) - 2:
        return math.inf
    a, c = s[max(i - 1, 0)], s[i + 1]
    res = minimize_scalar(lambda x: -spec.b(x), bracket=(a, s[i], c), method="golden",
                          options={"xtol": 1e-12})
    x = float(res.x)
    # polish with the derivative when it changes sign across the bracket
    try:
        if spec.db(a) > 0 > spec.db(c):
            x = _root(spec.db, a, c)
    except (RangeError, ValueError):
        pass
    return x


def _kappa_zeta(spec: KineticsSpec):
    kappa, roots = _find_kappa(spec)
    s_M = _find_sM(spec, spec.domain_max())
    monotone = not math.isfinite(s_M) or s_M >= kappa
    if not math.isfinite(s_M):
        zeta2 = kappa
        M = spec.b(kappa)
    else:
        M = spec.b(s_M)
        zeta2 = spec.d_inverse(M)
        if zeta2 < kappa:
            zeta2 = kappa
    theta = spec.b(zeta2)
    if not math.isfinite(s_M) or zeta2 <= s_M:
        zeta1 = zeta2
    else:
        g = lambda x: spec.b(x) - theta
        zeta1 = _root(g, 0.0, s_M) if g(0.0) < 0 < g(s_M) else s_M
    out = dict(kappa=kappa, s_M=s_M, M=M, zeta2=zeta2, theta=theta, zeta1=zeta1)
    out = {k: float(v) for k, v in out.items()}
    out.update(roots=roots, monotone=monotone)
    return out


@functools.lru_cache(maxsize=256)
def derive_constants(spec: KineticsSpec) -> DerivedConstants:
    """Equilibrium, birth maximum and the threshold constants of the model.

    Raises ModelError when b - d has no positive zero or more than one zero
    in (0, zeta2].
    """
    z = _kappa_zeta(spec)
    kappa, zeta2 = z["kappa"], z["zeta2"]
    extra = [x for x in z["roots"] if x > kappa * (1 + 1e-9) and x <= zeta2 * (1 + 1e-12)]
    if extra:
        raise ModelError(
            f"b - d vanishes at {extra[0]:.12g} besides kappa={kappa:.12g} within (0, zeta2]",
            clause="eq-zeta-4",
        )
    report = _unimodality(spec, z)
    fb = _feedback(spec, z)
    zeta1 = z["zeta1"]
    eps0 = zeta1 / 2.0
    if spec.b(zeta1 - eps0) <= 0:
        # shrink until the birth term is positive at zeta1 - eps0
        while eps0 > 1e-14 * zeta1 and spec.b(zeta1 - eps0) <= 0:
            eps0 /= 2.0
    return DerivedConstants(
        kappa=kappa,
        s_M=z["s_M"],
        M=z["M"],
        zeta2=zeta2,
        theta=z["theta"],
        zeta1=zeta1,
        bp0=float(spec.db(0.0)),
        dp0=float(spec.dd(0.0)),
        bpk=float(spec.db(kappa)),
        dpk=float(spec.dd(kappa)),
        unimodal=report.unimodal,
        feedback=fb.printed,
        feedback_alt=fb.alternative,
        monotone=bool(z["monotone"]),
        eps0=float(eps0),
    )


# ---------------------------------------------------------------------------
# structural checks


@dataclass(frozen=True)
class Violation:
    clause: str
    s: float | None
    detail: str = ""


@dataclass(frozen=True)
class UnimodalityReport:
    unimodal: bool
    violations: tuple[Violation, ...]

    def __bool__(self):
        return self.unimodal


def _unimodality(spec: KineticsSpec, z: dict | None) -> UnimodalityReport:
    v: list[Violation] = []
    if z is None:
        v.append(Violation("positive-equilibrium", None, "b - d has no positive zero"))
        hi = min(_FALLBACK_RANGE, spec.domain_max())
        kappa = None
    else:
        hi = z["zeta2"]
        kappa = z["kappa"]
    s = np.linspace(0.0, hi, SCAN_POINTS + 1)[1:]
    bv = spec.b(s)

    # interior local extrema of b on the grid (plateaus collapsed)
    db = np.diff(bv)
    sgn = np.sign(db)
    sgn = sgn[sgn != 0]
    turns = np.count_nonzero(sgn[1:] != sgn[:-1])
    if turns != 1:
        where = float(s[int(np.argmax(bv))]) if turns else None
        v.append(Violation("single-extremum", where, f"b has {turns} interior local extrema on (0, {hi:.6g}]"))

    b0 = float(spec.b(0.0))
    if b0 != 0.0:
        v.append(Violation("b(0)=0", 0.0, f"b(0) = {b0}"))
    bp0, dp0 = float(spec.db(0.0)), float(spec.dd(0.0))
    if not bp0 > dp0:
        v.append(Violation("b'(0)>d'(0)", 0.0, f"b'(0) = {bp0:.6g}, d'(0) = {dp0:.6g}"))
    if kappa is not None:
        res = spec.b(kappa) - spec.d(kappa)
        if abs(res) > 1e-10 * max(1.0, spec.d(kappa)):
            v.append(Violation("b(kappa)=d(kappa)", kappa, f"residual {res:.3g}"))
        bpk, dpk = float(spec.db(kappa)), float(spec.dd(kappa))
        if not bpk < dpk:
            v.append(Violation("b'(kappa)<d'(kappa)", kappa, f"b'(kappa) = {bpk:.6g}, d'(kappa) = {dpk:.6g}"))
        sk = s[s < kappa * (1 - 1e-9)]
        bk, dk = spec.b(sk), spec.d(sk)
        bad = np.nonzero(~(dk < bk))[0]
        if bad.size:
            v.append(Violation("d<b on (0,kappa)", float(sk[bad[0]]), ""))
        tol = 1e-12 * np.maximum(1.0, np.abs(bp0 * sk))
        bad = np.nonzero(bk > bp0 * sk + tol)[0]
        if bad.size:
            v.append(Violation("b<=b'(0)s on (0,kappa)", float(sk[bad[0]]), ""))
    return UnimodalityReport(not v, tuple(v))


def check_unimodality(spec: KineticsSpec) -> UnimodalityReport:
    """Grid check of the unimodality hypotheses; lists each violated clause."""
    try:
        z = _kappa_zeta(spec)
    except ModelError:
        z = None
    return _unimodality(spec, z)


@dataclass(frozen=True)
class FeedbackReport:
    """Feedback condition evaluated as printed and under the alternative reading.

    printed:      (b(s) - kappa)(s - kappa) < 0
    alternative:  (d^-1(b(s)) - kappa)(s - kappa) < 0
    """

    printed: bool
    alternative: bool
    interval: tuple[float, float]

    def __bool__(self):
        return self.printed


def _feedback_scan(spec: KineticsSpec, kappa: float, lo: float, hi: float) -> FeedbackReport:
    s = np.linspace(lo, hi, SCAN_POINTS)
    s = s[np.abs(s - kappa) > 1e-12 * max(1.0, kappa)]
    bs = spec.b(s)
    printed = bool(np.all((bs - kappa) * (s - kappa) < 0))
    dinv = np.array([spec.d_inverse(float(y)) if y >= 0 else -math.inf for y in bs])
    alternative = bool(np.all((dinv - kappa) * (s - kappa) < 0))
    return FeedbackReport(printed, alternative, (float(lo), float(hi)))


def _feedback(spec: KineticsSpec, z: dict) -> FeedbackReport:
    lo = spec.d_inverse(z["theta"])
    hi = spec.d_inverse(z["M"])
    return _feedback_scan(spec, z["kappa"], lo, hi)


def check_feedback(spec: KineticsSpec) -> FeedbackReport:
    """Feedback condition on [d^-1(theta), d^-1(M)] excluding kappa."""
    return _feedback(spec, _kappa_zeta(spec))


# ---------------------------------------------------------------------------
# monotone envelopes


def envelope_bstar(spec: KineticsSpec, u):
    """Upper envelope b*(u) = min(b'(0) u, M)."""
    c = derive_constants(spec)
    _require_unimodal(c)
    _nonneg(u)
    if isinstance(u, np.ndarray):
        return np.minimum(c.bp0 * u, c.M)
    return min(c.bp0 * u, c.M)


def envelope_beps(spec: KineticsSpec, eps: float, u):
    """Lower envelope b_eps(u) = min(b(u), d(zeta1 - eps)) for 0 < eps < eps0."""
    c = derive_constants(spec)
    _require_unimodal(c)
    if not (0.0 < eps < c.eps0):
        raise DomainError(f"eps must lie in (0, {c.eps0:.6g}), got {eps}")
    _nonneg(u)
    cap = spec.d(c.zeta1 - eps)
    if isinstance(u, np.ndarray):
        return np.minimum(spec.b(u), cap)
    return min(spec.b(u), cap)


def _require_unimodal(c: DerivedConstants):
    if not c.unimodal:
        raise ModelError("envelopes need a unimodal birth law", clause="unimodal")


def _nonneg(u):
    if np.any(np.asarray(u) < 0):
        raise DomainError("envelopes are defined on u >= 0")


# ---------------------------------------------------------------------------
# reference instance


def nicholson_reference(delay: float = 1.0, m: float = 2.0, diffusivity: float = 1.0) -> KineticsSpec:
    """b(u) = 4 u exp(-u/2), d(u) = u/2."""
    return KineticsSpec(m, diffusivity, delay, Nicholson(4.0, 0.5, 1.0), LinearDeath(0.5))
