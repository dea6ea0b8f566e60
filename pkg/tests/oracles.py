"""Independent reference computations used to freeze expected values.

Nothing here imports sharpwaves: every oracle is plain bisection on the
closed-form reference model or a scipy phase-plane integration.
"""

from __future__ import annotations

import math

from scipy.integrate import solve_ivp


def bisect(f, lo, hi, tol=1e-14, max_iter=400):
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


# reference model b(s) = 4 s exp(-s/2), d(s) = s/2
def b(s):
    return 4.0 * s * math.exp(-s / 2)


def db(s):
    return 4.0 * math.exp(-s / 2) * (1 - s / 2)


def reference_kappa():
    return bisect(lambda s: b(s) - s / 2, 1.0, 10.0)


def reference_zeta():
    """(M, zeta2, theta, zeta1) from the peak value b(2) = 8/e."""
    M = b(2.0)
    zeta2 = 2 * M  # d(zeta2) = M
    theta = b(zeta2)
    zeta1 = bisect(lambda s: b(s) - theta, 1e-12, 2.0)
    return M, zeta2, theta, zeta1


def omega_r(r, bp0=4.0, dp0=0.5):
    """Root of bp0 exp(-r w) = w + dp0 (c = 1 scaling: lambda0 = omega/c)."""
    return bisect(lambda w: bp0 * math.exp(-r * w) - w - dp0, 0.0, bp0)


def omega_kappa(bpk, dpk):
    """Root of 2 d'(kappa) = b'(kappa) e^{-w} (2 + w) on (-40, -2)."""
    return bisect(lambda w: 2 * dpk - bpk * math.exp(-w) * (2 + w), -40.0, -2.0)


def mu_kappa(omega, bpk, dpk, m, D, kappa):
    A = D * m * kappa ** (m - 1)
    return math.sqrt(A * omega * omega / (bpk * math.exp(-omega) * (1 + omega) - dpk))


def logistic_sharp_speed(D=1.0, tol=1e-10):
    """Sharp speed of c phi' = D (phi^2)'' + phi (1 - phi).

    Time-domain shooting of phi' = psi/(2 D phi), psi' = c phi' + phi^2 - phi
    from the edge relation psi ~ c phi: too slow turns back (psi = 0 below
    phi = 1), too fast overshoots phi = 1 with psi > 0.
    """

    def overshoots(c):
        def rhs(t, y):
            phi, psi = y
            dphi = psi / (2 * D * phi)
            return [dphi, c * dphi + phi * phi - phi]

        def over(t, y):
            return y[0] - 1.0

        def back(t, y):
            return y[1]

        over.terminal = back.terminal = True
        p0 = 1e-9
        sol = solve_ivp(rhs, (0.0, 1e4), [p0, c * p0], events=(over, back), rtol=1e-12, atol=1e-15,
                        method="DOP853")
        return len(sol.t_events[0]) > 0

    lo, hi = 0.05, 5.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if overshoots(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
