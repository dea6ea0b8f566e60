from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from sharpwaves.charspec import lambda0, lower_bound_speed, make_context, upper_guard_estimate
from sharpwaves.errors import DomainError, ParameterError
from sharpwaves.kinetics import nicholson_reference
from sharpwaves.profile import (
    MONOTONE,
    NONDECAYING,
    OSCILLATORY,
    Blowup,
    DecayedToZero,
    Persistent,
    Segment,
    SharpEdge,
    SmoothTail,
    advance_segment,
    classify_series,
    classify_tail,
    edge_fit,
    edge_regularity,
    first_segment,
    integrate,
    left_tail_fit,
    phase_delay_functional,
)
from sharpwaves.shooting import find_sharp_speed


@pytest.fixture(scope="module")
def ref_c0():
    ctx = make_context(nicholson_reference(1.0))
    res = find_sharp_speed(ctx)
    return ctx, res


def test_first_segment_leading_coefficient():
    ctx = make_context(nicholson_reference(1.0))
    prof = first_segment(ctx, 1.0)
    t = np.array([1e-6, 1e-5, 1e-4])
    phi, _ = prof.sample(t)
    assert np.allclose(phi / (t / 2), 1.0, rtol=1e-3)


def test_first_segment_edge_exponent_m3():
    ctx = make_context(nicholson_reference(1.0, m=3.0))
    fit = edge_fit(ctx, first_segment(ctx, 2.0), 1e-6, 1e-3)
    assert fit.fitted_exponent == pytest.approx(0.5, rel=0.02)


def test_flux_matches_edge_relation():
    ctx = make_context(nicholson_reference(1.0))
    prof = first_segment(ctx, 1.3)
    t, phi, psi = prof.nodes()
    assert psi[0] / (1.3 * phi[0]) == pytest.approx(1.0, abs=1e-6)


def test_segments_abut_and_flux_is_continuous():
    ctx = make_context(nicholson_reference(1.0))
    c = 1.5
    prof = first_segment(ctx, c)
    for k in range(1, 4):
        seg = advance_segment(ctx, prof, k)
        assert isinstance(seg, Segment)
    segs = prof.segments
    for a, b in zip(segs, segs[1:]):
        assert a.t_hi == pytest.approx(b.t_lo, abs=1e-12)
    T0 = np.asarray(prof.history.t0)
    for k in range(1, 4):
        t_join = k * c
        i = int(np.searchsorted(T0, t_join - 1e-12))
        assert T0[i] == pytest.approx(t_join, rel=1e-12)
        _, _, CP, CS = prof.arrays()
        left_psi = float(CS[i - 1].sum())
        right_psi = float(CS[i][0])
        assert abs(left_psi - right_psi) < 1e-10 * max(1.0, abs(left_psi))
        assert float(CP[i - 1].sum()) == pytest.approx(float(CP[i][0]), abs=1e-14)


def test_advance_segment_wrong_index():
    ctx = make_context(nicholson_reference(1.0))
    prof = first_segment(ctx, 1.5)
    with pytest.raises(ParameterError):
        advance_segment(ctx, prof, 2)


def test_delay_free_is_single_segment():
    ctx = make_context(nicholson_reference(0.0))
    prof = first_segment(ctx, 2.0, 5.0)
    assert len(prof.segments) == 1
    with pytest.raises(ParameterError):
        advance_segment(ctx, prof, 1)


def test_blowup_above_upper_guard():
    ctx = make_context(nicholson_reference(1.0))
    out = integrate(ctx, 2 * upper_guard_estimate(ctx.spec))
    assert isinstance(out, Blowup)
    assert out.profile.history.cphi[-1][0] > ctx.consts.zeta2


def test_decay_below_lower_bound():
    ctx = make_context(nicholson_reference(1.0))
    out = integrate(ctx, 0.5 * lower_bound_speed(ctx).cdot)
    assert isinstance(out, DecayedToZero)


def test_persistent_at_c0_with_permanence(ref_c0):
    ctx, res = ref_c0
    out = res.outcome_at_c0
    assert isinstance(out, Persistent)
    k = ctx.consts
    assert out.tail.tail_min >= 0.95 * k.zeta1
    assert out.tail.tail_max <= 1.05 * k.zeta2


def test_positivity_and_leading_edge_flux(ref_c0):
    _, res = ref_c0
    t, phi, psi = res.outcome_at_c0.profile.nodes()
    assert phi.min() >= 0
    peak = int(np.argmax(np.diff(phi) < 0)) or len(phi)
    assert psi[:peak].min() >= 0


def test_tolerance_halving(ref_c0):
    ctx, res = ref_c0
    H = res.outcome_at_c0.profile.t_end
    a = integrate(ctx, res.c0, shadow=True, speed_bracket=res.bracket, horizon=H)
    b = integrate(ctx, res.c0, shadow=True, speed_bracket=res.bracket, horizon=H, rtol=5e-11, atol=5e-13)
    pa = a.profile.sample([0.9 * H])[0][0]
    pb = b.profile.sample([0.9 * H])[0][0]
    assert abs(pa - pb) < 1e-6 * abs(pa)


def test_horizon_too_short():
    ctx = make_context(nicholson_reference(1.0))
    with pytest.raises(ParameterError):
        integrate(ctx, 1.5, horizon=10.0)


def test_edge_regularity_tags():
    for m, tag in ((1.5, "C1"), (2.0, "NonC1"), (3.0, "NonC1")):
        ctx = make_context(nicholson_reference(1.0, m=m))
        assert edge_regularity(ctx, 1.0).regularity == tag
    r2 = edge_regularity(make_context(nicholson_reference(1.0)), 1.0)
    assert r2.measured_derivative == pytest.approx(0.5, rel=1e-3)
    r15 = edge_regularity(make_context(nicholson_reference(1.0, m=1.5)), 1.0)
    assert r15.measured_derivative < 1e-5
    a = edge_regularity(make_context(nicholson_reference(1.0, m=3.0)), 1.0, 1e-6).measured_derivative
    b = edge_regularity(make_context(nicholson_reference(1.0, m=3.0)), 1.0, 1e-4).measured_derivative
    # phi' ~ t^(-1/2): a hundredfold smaller t gives a tenfold larger slope
    assert a / b == pytest.approx(10.0, rel=1e-2)


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
def test_edge_fit_at_c0(m):
    ctx = make_context(nicholson_reference(1.0, m=m))
    res = find_sharp_speed(ctx)
    e = res.outcome_at_c0.profile.edge
    assert e.fitted_exponent == pytest.approx(1 / (m - 1), rel=0.02)
    assert e.fitted_coefficient == pytest.approx(((m - 1) * res.c0 / m) ** (1 / (m - 1)), rel=0.05)


def test_smooth_tail_rate(ref_c0):
    ctx, res = ref_c0
    c = 2 * res.c0
    out = integrate(ctx, c, SmoothTail(), shadow=True)
    assert isinstance(out, Persistent)
    assert left_tail_fit(ctx, out.profile).rate == pytest.approx(lambda0(ctx, c), rel=0.02)


def test_smooth_amplitude_validated():
    ctx = make_context(nicholson_reference(1.0))
    with pytest.raises(ParameterError):
        integrate(ctx, 3.0, SmoothTail(amplitude=ctx.consts.zeta1))


def test_edge_fit_needs_sharp_profile(ref_c0):
    ctx, res = ref_c0
    out = integrate(ctx, 3.0, SmoothTail(), shadow=True)
    with pytest.raises(DomainError):
        edge_fit(ctx, out.profile)


def test_classify_monotone_synthetic():
    t = np.linspace(0, 60, 6001)
    rep = classify_series(t, 4.0 * (1 - np.exp(-t)), 4.0, 6.0)
    assert rep.classification == MONOTONE and rep.sign_changes == 0


def test_classify_decaying_oscillation_synthetic():
    t = np.linspace(0, 60, 6001)
    rep = classify_series(t, 4.0 + np.exp(-0.05 * t) * np.sin(t), 4.0, 3 * math.pi)
    assert rep.classification == OSCILLATORY
    assert rep.sign_changes > 0 and rep.envelope_ratio < 1


def test_classify_sustained_oscillation_synthetic():
    t = np.linspace(0, 100, 10001)
    rep = classify_series(t, 4.0 + 0.5 * np.sin(t), 4.0, 3 * math.pi)
    assert rep.classification == NONDECAYING


def test_classify_constant_series():
    t = np.linspace(0, 50, 501)
    rep = classify_series(t, np.full_like(t, 4.0), 4.0, 5.0)
    assert rep.classification == MONOTONE and rep.sign_changes == 0


def test_classify_tail_window_guard(ref_c0):
    _, res = ref_c0
    prof = res.outcome_at_c0.profile
    with pytest.raises(ParameterError):
        classify_tail(prof, prof.lag)


def test_phase_delay_functional_trivial_cases(ref_c0):
    _, res = ref_c0
    prof = res.outcome_at_c0.profile
    # below phi(c r) the whole delay reaches past the edge
    level = prof.sample([0.5 * prof.lag])[0][0]
    assert phase_delay_functional(prof, level, 1.0, 2.0) == 0.0
    ctx0 = make_context(nicholson_reference(0.0))
    p0 = first_segment(ctx0, 2.0, 5.0)
    assert phase_delay_functional(p0, 0.3, 1.0, 2.0) == 0.3


def test_phase_delay_functional_matches_time_lookup(ref_c0):
    _, res = ref_c0
    prof = res.outcome_at_c0.profile
    t, phi, _ = prof.nodes()
    for v in (2.0, 3.0):
        i = int(np.nonzero(phi >= v)[0][0])
        tv = brentq(lambda s: prof.sample([s])[0][0] - v, t[i - 1], t[i], xtol=1e-14)
        ref = prof.sample([tv - prof.lag])[0][0]
        assert phase_delay_functional(prof, v, 1.0, 2.0) == pytest.approx(ref, abs=1e-6)
