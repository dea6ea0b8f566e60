from __future__ import annotations

import cmath
import math
import random

import numpy as np
import pytest

from sharpwaves.charspec import (
    chi0,
    chik,
    dchik,
    find_c_kappa,
    find_c_kappa_detail,
    find_c_star,
    lambda0,
    lower_bound_speed,
    make_context,
    mu_kappa,
    mu_star,
    negative_real_roots,
    omega_r,
    speed_thresholds,
)
from sharpwaves.kinetics import KineticsSpec, LinearBirth, LinearDeath, Nicholson, QuadraticDeath, nicholson_reference


def ctx_for(r=1.0, m=2.0, D=1.0):
    return make_context(nicholson_reference(r, m=m, diffusivity=D))


def test_chi0_delay_free_linear_root():
    ctx = ctx_for(0.0)
    assert chi0(ctx, 2.0, 1.75) == pytest.approx(0.0, abs=1e-15)
    assert lambda0(ctx, 2.0) == pytest.approx((4.0 - 0.5) / 2.0, rel=1e-15)


def test_chi0_at_zero_is_net_growth():
    assert chi0(ctx_for(1.0), 1.3, 0.0) == pytest.approx(3.5)


def test_lambda0_matches_bisection_oracle(oracle):
    ctx = ctx_for(1.0)
    assert lambda0(ctx, 1.0) == pytest.approx(oracle["omega_r"]["1"], abs=1e-12)
    assert abs(chi0(ctx, 1.0, 0.9885)) < 1e-3


def test_omega_r_decreasing_in_delay(oracle):
    w05, w2 = omega_r(ctx_for(0.5)), omega_r(ctx_for(2.0))
    assert w05 == pytest.approx(oracle["omega_r"]["0.5"], abs=1e-12)
    assert w2 == pytest.approx(oracle["omega_r"]["2"], abs=1e-12)
    assert w05 > w2


def test_lambda0_residuals_random():
    rng = random.Random(7)
    for _ in range(100):
        c, r = rng.uniform(0.1, 10), rng.uniform(0, 5)
        ctx = ctx_for(r)
        lam = lambda0(ctx, c)
        assert abs(chi0(ctx, c, lam)) < 1e-10
        hi = 2 * ctx.consts.bp0 / c
        grid = np.linspace(0, hi, 2001)
        vals = [chi0(ctx, c, x) for x in grid]
        assert int(np.sum(np.diff(np.sign(vals)) != 0)) == 1


def test_chik_at_zero():
    ctx = ctx_for(1.0)
    k = ctx.consts
    assert chik(ctx, 1.0, 0.0) == pytest.approx(k.bpk - k.dpk)
    assert chik(ctx, 1.0, 0.0) < 0


def test_chik_delay_free_quadratic_roots():
    ctx = ctx_for(0.0)
    k = ctx.consts
    c = 1.7
    disc = c * c - 4 * ctx.A * (k.bpk - k.dpk)
    roots = [(c - math.sqrt(disc)) / (2 * ctx.A), (c + math.sqrt(disc)) / (2 * ctx.A)]
    for lam in roots:
        assert abs(chik(ctx, c, lam)) < 1e-12


def test_chik_complex_consistent_with_real():
    ctx = ctx_for(2.0)
    assert chik(ctx, 0.7, complex(-0.3, 0.0)).real == pytest.approx(chik(ctx, 0.7, -0.3), rel=1e-14)
    h = 1e-6
    z = complex(-0.2, 0.4)
    fd = (chik(ctx, 0.7, z + h) - chik(ctx, 0.7, z - h)) / (2 * h)
    assert abs(fd - dchik(ctx, 0.7, z)) < 1e-6


@pytest.mark.parametrize("r", [1.0, 5.0, 20.0])
def test_c_kappa_double_root_certificate(r):
    ctx = ctx_for(r)
    res = find_c_kappa_detail(ctx)
    c, lam = res.c_kappa, res.lam
    assert math.isfinite(c) and lam < 0
    assert abs(chik(ctx, c, lam)) < 1e-8
    assert abs(dchik(ctx, c, lam)) < 1e-8
    assert len(negative_real_roots(ctx, 0.99 * c)) >= 2
    assert len(negative_real_roots(ctx, 1.01 * c)) == 0


def test_c_kappa_reference_value_r1():
    assert find_c_kappa(ctx_for(1.0)) == pytest.approx(3.7049, rel=1e-4)


def test_c_kappa_infinite_without_delay():
    assert math.isinf(find_c_kappa(ctx_for(0.0)))


def test_c_kappa_infinite_for_monotone_birth():
    ctx = make_context(KineticsSpec(2, 1, 1, LinearBirth(1.0), QuadraticDeath(1.0)))
    assert math.isinf(find_c_kappa(ctx))


def test_mu_kappa_matches_oracle(oracle):
    om = mu_kappa(ctx_for(1.0))
    assert om.in_theorem_bracket
    assert om.omega == pytest.approx(oracle["omega_kappa"], abs=1e-10)
    assert om.omega == pytest.approx(-2.2044, abs=1e-3)
    assert om.mu == pytest.approx(oracle["mu_kappa"], rel=1e-10)
    assert om.mu == pytest.approx(2.74, abs=5e-3)


def test_mu_star_matches_oracle(oracle):
    assert mu_star(ctx_for(1.0)) == pytest.approx(oracle["mu_star"], rel=1e-10)
    assert mu_star(ctx_for(1.0)) == pytest.approx(45.5, abs=0.1)


def test_c_star_infinite_when_feedback_weak():
    # b'(kappa) ~ -0.386 >= -d'(kappa) = -1
    ctx = make_context(KineticsSpec(2, 1, 5, Nicholson(4, 0.5), LinearDeath(1.0)))
    assert ctx.consts.bpk >= -ctx.consts.dpk
    assert math.isinf(find_c_star(ctx))
    assert mu_star(ctx) is None


@pytest.mark.parametrize("r", [1.0, 5.0, 20.0])
@pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
def test_c_star_dominates_c_kappa(m, r):
    ctx = ctx_for(r, m=m)
    assert find_c_star(ctx) >= find_c_kappa(ctx)


def test_large_delay_asymptotics():
    ctx = ctx_for(100.0)
    assert 0.95 <= 100 * find_c_kappa(ctx) / mu_kappa(ctx).mu <= 1.05
    assert 0.95 <= 100 * find_c_star(ctx) / mu_star(ctx) <= 1.05


def test_c_star_root_solves_characteristic_equation():
    ctx = ctx_for(20.0)
    c = find_c_star(ctx)
    assert c == pytest.approx(2.9097, rel=1e-4)


def test_lower_bound_positive():
    lb = lower_bound_speed(ctx_for(1.0))
    assert lb.cdot > 0
    assert 0 < lb.eps <= lb.eps_max


def test_lower_bound_scales_like_inverse_delay():
    a = lower_bound_speed(ctx_for(10.0)).cdot * 10.0
    b = lower_bound_speed(ctx_for(100.0)).cdot * 100.0
    assert abs(a / b - 1) < 0.10


def test_speed_thresholds_summary():
    th = speed_thresholds(ctx_for(1.0))
    assert math.isfinite(th.c_kappa) and math.isinf(th.c_star)
    assert th.cdot <= th.c_kappa
