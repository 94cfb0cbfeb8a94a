import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from padicstable.analytic import (
    RadialLevySpec,
    ball_probability,
    ball_tail_probability,
    check_conditions,
    condition_h_check,
    density_at_origin,
    derive_levy_constant,
    green_function,
    h_function,
    h_ratio_limit,
    h_ratio_series,
    integrated_ball_probability,
    integrated_shell_probability,
    local_integrability,
    prop3_sufficiency,
    shell_density,
    shell_probability,
    total_mass,
)
from padicstable.coefficients import LocallyConstant, NormPower, RadialPower, StepFunction
from padicstable.padic import Ball, PAdicNumber, Window
from oracles import (
    ball_probability_fourier,
    braces_closed_form,
    density_fourier,
    density_origin_fourier,
    green_quadrature,
    printed_braces,
    psi_oracle,
)

SPECS = st.builds(RadialLevySpec.stable, st.sampled_from([2, 3, 5]), st.sampled_from([0.7, 1.2, 1.5, 2.0, 3.0]))
TIMES = st.floats(1e-3, 1e3)


def test_levy_constant_closed_form():
    assert derive_levy_constant(2, 2.0) == pytest.approx(3 / (1 - 1 / 8))


@pytest.mark.parametrize("p,alpha", [(2, 1.5), (3, 2.0)])
def test_levy_constant_matches_exponent(p, alpha):
    K = derive_levy_constant(p, alpha)
    for k in (-2, 0, 3):
        xi_norm = float(p) ** k
        assert psi_oracle(p, alpha, K, k) / xi_norm**alpha == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize("p,alpha,t", [(2, 2.0, 0.1), (3, 1.5, 1.0), (5, 0.8, 7.0)])
def test_ball_probability_fourier(p, alpha, t):
    spec = RadialLevySpec.stable(p, alpha)
    for m in range(-4, 5):
        assert ball_probability(spec, m, t) == pytest.approx(ball_probability_fourier(p, alpha, m, t), abs=1e-13)


@pytest.mark.parametrize("p,alpha,t", [(2, 2.0, 0.1), (3, 1.5, 1.0)])
def test_density_fourier(p, alpha, t):
    spec = RadialLevySpec.stable(p, alpha)
    for m in range(-4, 5):
        assert shell_density(spec, m, t) == pytest.approx(density_fourier(p, alpha, m, t), rel=1e-9, abs=1e-300)
    assert density_at_origin(spec, t) == pytest.approx(density_origin_fourier(p, alpha, t), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(SPECS, TIMES, st.integers(-8, 8))
def test_ball_probability_is_a_distribution_function(spec, t, m):
    lo, hi = ball_probability(spec, m, t), ball_probability(spec, m + 1, t)
    assert 0 <= lo <= hi <= 1
    assert lo + ball_tail_probability(spec, m, t) == pytest.approx(1, abs=1e-14)
    assert hi - lo == pytest.approx(shell_probability(spec, m + 1, t), abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(SPECS, TIMES)
def test_total_mass_is_one(spec, t):
    assert total_mass(spec, t) == pytest.approx(1, abs=1e-12)


def test_density_decreases_with_norm():
    spec = RadialLevySpec.stable(3, 1.5)
    vals = [density_at_origin(spec, 0.5)] + [shell_density(spec, m, 0.5) for m in range(-5, 6)]
    assert all(a >= b - 1e-14 for a, b in zip(vals, vals[1:]))


def test_small_time_tail_is_levy_measure():
    # P(||Z(t)|| > p^m) ~ t * K * int_{||y|| > p^m} ||y||^(-1-alpha) dy as t -> 0
    p, al = 2, 1.5
    spec = RadialLevySpec.stable(p, al)
    K = spec.K
    q = 1 - 1 / p
    m = 1
    levy_tail = sum(K * q * p ** (j * -al) for j in range(m + 1, 400))
    t = 1e-9
    assert ball_tail_probability(spec, m, t) / t == pytest.approx(levy_tail, rel=1e-6)


@pytest.mark.parametrize("m,T", [(-2, 0.5), (0, 1.0), (3, 4.0)])
def test_time_integrals_match_quadrature(m, T):
    spec = RadialLevySpec.stable(2, 1.5)
    want, _ = quad(lambda s: shell_probability(spec, m, s), 0, T, epsabs=1e-14, limit=200)
    assert integrated_shell_probability(spec, m, T) == pytest.approx(want, rel=1e-8, abs=1e-14)
    want, _ = quad(lambda s: ball_probability(spec, m, s), 0, T, epsabs=1e-14, limit=200)
    assert integrated_ball_probability(spec, m, T) == pytest.approx(want, rel=1e-8)


@pytest.mark.parametrize("n", [None, -3, 0, 2])
def test_green_function_quadrature(n):
    spec = RadialLevySpec.stable(2, 2.0)
    assert green_function(spec, 1.0, n) == pytest.approx(green_quadrature(2, 2.0, 1.0, n), rel=1e-8)


def test_green_function_needs_alpha_above_one():
    with pytest.raises(ValueError):
        green_function(RadialLevySpec.stable(2, 0.9), 1.0, None)


def test_h_function_range_and_monotonicity():
    spec = RadialLevySpec.stable(3, 1.7)
    hs = [h_function(spec, n) for n in range(-8, 9)]
    assert h_function(spec, None) == 0
    assert all(0 < h <= 1 for h in hs)
    assert all(a <= b for a, b in zip(hs, hs[1:]))


def test_h_ratio_series_equals_direct_ratio():
    spec = RadialLevySpec.stable(2, 2.0)
    g0 = green_function(spec, 1.0, None)
    for n in range(-6, 7):
        direct = (g0 - green_function(spec, 1.0, n)) / 2.0 ** (n * (spec.alpha - 1))
        assert h_ratio_series(spec, n) == pytest.approx(direct, rel=1e-10)


@pytest.mark.parametrize("p,alpha", [(2, 2.0), (3, 1.5), (5, 2.5)])
def test_h_ratio_small_norm_limit(p, alpha):
    spec = RadialLevySpec.stable(p, alpha)
    assert h_ratio_series(spec, -60) == pytest.approx(h_ratio_limit(p, alpha), abs=1e-10)
    assert h_ratio_limit(p, alpha) == pytest.approx(braces_closed_form(p, alpha))


def test_typeset_braces_large_norm_limit_differs():
    # documents the discrepancy between the typeset series and its stated limit
    assert printed_braces(2, 2.0, 2.0**40) == pytest.approx(0.25, abs=1e-10)
    assert braces_closed_form(2, 2.0) == pytest.approx(0.75)


def test_conditions_stable_closed_form():
    spec = RadialLevySpec.stable(2, 1.5)
    assert not check_conditions(spec, 2.0).cond3
    assert check_conditions(spec.truncated(2), 2.0).cond3
    assert check_conditions(spec.truncated(2), 2.0).cond4
    assert not check_conditions(spec.truncated(2), 1.2).cond3


def test_conditions_general_sequence():
    good = RadialLevySpec.general(2, lambda m: 0.0 if m >= 3 else 2.0 ** (-1.5 * m))
    rep = check_conditions(good, 2.0)
    assert rep.cond1 and rep.cond2 and rep.cond3
    increasing = RadialLevySpec.general(2, lambda m: 2.0 ** (0.1 * m))
    assert not check_conditions(increasing, 2.0).cond1


def _radial(p, delta, scale_exp=0, centre=0):
    w = Window(p, -30, 30)
    return RadialPower(PAdicNumber.p_power(scale_exp, window=w), PAdicNumber.from_int(centre, window=w), delta), w


@pytest.mark.parametrize("delta", [0.2, 0.45, 0.55, 1.0])
def test_condition_h_radial_power_threshold(delta):
    spec = RadialLevySpec.stable(2, 2.0)
    b, w = _radial(2, delta)
    res = condition_h_check(spec, b, PAdicNumber.zero(2, w), L=0, T=1.0)
    assert res.finite == (delta * spec.alpha < 1)


def test_condition_h_away_from_centre_is_finite():
    spec = RadialLevySpec.stable(2, 2.0)
    b, w = _radial(2, 1.0, centre=4)
    x = PAdicNumber.zero(2, w)
    # centre at distance 1/4 lies outside B(0, 1/8) but inside B(0, 1)
    assert condition_h_check(spec, b, x, L=-3, T=1.0).finite
    assert not condition_h_check(spec, b, x, L=0, T=1.0).finite


def test_condition_h_constant_coefficient():
    # b constant outside a ball: the check reduces to an integrated ball probability
    spec = RadialLevySpec.stable(3, 1.5)
    w = Window(3, -20, 20)
    c = PAdicNumber.p_power(1, window=w)
    b = LocallyConstant.constant(c)
    res = condition_h_check(spec, b, PAdicNumber.zero(3, w), L=2, T=2.0)
    want = 3.0**1.5 * integrated_ball_probability(spec, 2, 2.0)
    assert res.finite and res.value == pytest.approx(want, rel=1e-12)


def test_condition_h_zero_on_ball():
    spec = RadialLevySpec.stable(2, 1.5)
    w = Window(2, -20, 20)
    zero = PAdicNumber.zero(2, w)
    b = LocallyConstant(((Ball(PAdicNumber.from_int(1, window=w), -2), zero),), PAdicNumber.from_int(1, window=w))
    res = condition_h_check(spec, b, zero, L=0, T=1.0)
    assert not res.finite and res.witness is not None


def test_prop3_implies_finite():
    spec = RadialLevySpec.stable(2, 1.5)
    b, w = _radial(2, 0.1)
    res = prop3_sufficiency(spec, b, PAdicNumber.zero(2, w), lam=4.0)
    assert res.applies and res.implied
    assert condition_h_check(spec, b, PAdicNumber.zero(2, w), L=0, T=1.0).finite
    assert not prop3_sufficiency(spec, b, PAdicNumber.zero(2, w), lam=3.0).applies


def test_local_integrability():
    w = Window(2, -10, 10)
    z = PAdicNumber.zero(2, w)
    assert local_integrability(NormPower(-0.5, z))
    assert not local_integrability(NormPower(-1.0, z))
    assert not local_integrability(NormPower(-2.0, z))
    assert local_integrability(StepFunction(((Ball(z, -1), 5.0),), 1.0))
    assert not local_integrability(StepFunction(((Ball(z, -1), math.inf),), 1.0))
