import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padicstable.analytic import RadialLevySpec
from padicstable.coefficients import LocallyConstant, RadialPower, constant
from padicstable.driver import JumpPath, sample_path
from padicstable.padic import Ball, PAdicNumber, Window
from padicstable.sde import (
    ball_frequency_pvalue,
    build_time_change,
    characteristic_estimate,
    default_radii,
    reconstruct_driver,
    rewindow,
    solve_direct,
    solve_time_change,
    time_change_solution,
    triviality_check,
    weak_equivalence_test,
)

W = Window(2, -20, 20)
SPEC = RadialLevySpec.stable(2, 2.0)
ONE = PAdicNumber.from_int(1, window=W)
ZERO = PAdicNumber.zero(2, W)


def test_unit_coefficient_reproduces_driver():
    path = sample_path(SPEC, 1.0, 3, 4, W)
    x = PAdicNumber.from_int(5, window=W)
    sd = solve_direct(constant(ONE), x, path)
    st_, tc = solve_time_change(constant(ONE), x, path, 1.0)
    for t in np.linspace(0, 1, 17):
        assert sd.value_at(t) == x + path.value_at(t)
        assert st_.value_at(t) == x + path.value_at(t)
        assert tc.tau(t) == pytest.approx(t)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.0, 0.99))
def test_tau_inverts_C(seed, frac):
    b = RadialPower(ONE, PAdicNumber.from_fraction(1, window=W), 0.5)
    path = sample_path(SPEC, 2.0, 3, seed, W)
    tc = build_time_change(b, ZERO, path)
    t = frac * tc.horizon
    assert tc.C(tc.tau(t)) == pytest.approx(t, rel=1e-9, abs=1e-12)


def test_constant_coefficient_speeds_up_clock():
    c = PAdicNumber.p_power(1, window=W)  # ||c|| = 1/2, so C(s) = 4 s
    path = sample_path(SPEC, 1.0, 3, 9, W)
    tc = build_time_change(constant(c), ZERO, path)
    for s in (0.1, 0.5, 1.0):
        assert tc.C(s) == pytest.approx(4 * s)
        assert tc.tau_integral(4 * s) == pytest.approx(s)


def test_vanishing_coefficient_absorbs():
    b = LocallyConstant(((Ball(ZERO, -1), ZERO),), ONE)
    path = sample_path(SPEC, 1.0, 3, 2, W)
    sol, tc = solve_time_change(b, ZERO, path, 5.0)
    assert tc.absorption_index == 0
    assert triviality_check(sol)
    assert triviality_check(solve_direct(b, ZERO, path))


def test_short_base_path_is_rejected():
    path = sample_path(SPEC, 0.5, 3, 2, W)
    with pytest.raises(ValueError):
        solve_time_change(constant(ONE), ZERO, path, 1.0)


def test_time_change_solution_independent_of_initial_horizon():
    b = constant(PAdicNumber.p_power(-1, window=W))  # ||b|| = 2 slows the clock
    a, _ = time_change_solution(b, ZERO, SPEC, 1.0, 3, 7, W, S0=0.1)
    c, _ = time_change_solution(b, ZERO, SPEC, 1.0, 3, 7, W, S0=3.0)
    assert np.array_equal(a.times, c.times) and a.values == c.values


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(-3, 3))
def test_reconstructed_driver_has_zero_residual(seed, k):
    b = LocallyConstant(((Ball(ONE, -1), PAdicNumber.p_power(k, window=W)),), PAdicNumber.from_int(3, window=W))
    sol, _ = time_change_solution(b, ZERO, SPEC, 1.0, 3, seed, W)
    rec = reconstruct_driver(b, sol, 2.0)
    assert rec.residual_exp is None and rec.residual == 0
    assert not rec.violations
    # re-integrating b(X-) against Z* rebuilds X exactly
    X = ZERO
    for (t, dz), left in zip(rec.zstar.events, sol.left_values()):
        X = X + rewindow(rewindow(b(left), rec.zstar.window) * dz, W)
        assert X == sol.value_at(t)


def test_rewindow_round_trip():
    x = PAdicNumber.from_fraction(7, window=W)
    wide = Window(2, -25, 25)
    assert rewindow(rewindow(x, wide), W) == x


def test_ball_frequency_pvalue_extremes():
    rng = np.random.default_rng(0)
    a = [PAdicNumber.from_int(int(k), window=W) for k in rng.integers(0, 8, 400)]
    assert ball_frequency_pvalue(a, a, ZERO, -1) == pytest.approx(1.0)
    b = [PAdicNumber.from_int(2 * int(k), window=W) for k in rng.integers(0, 8, 400)]
    assert ball_frequency_pvalue(a, b, ZERO, -1) < 1e-6


def test_default_radii_clear_both_resolutions():
    b = constant(PAdicNumber.p_power(-2, window=W))  # ||b|| = 4
    assert default_radii(b, 3) == (0, 1, 2)
    assert default_radii(constant(ONE), 3) == (-2, -1, 0)


def test_weak_equivalence_small_run():
    b = constant(PAdicNumber.p_power(1, window=W))
    rep = weak_equivalence_test(b, ZERO, SPEC, 1.0, 3, 300, 5, window=W)
    assert rep.passed()
    assert rep.h_finite and not rep.degenerate
    assert set(rep.to_dict()) >= {"pvalue", "radii", "passed"}
    assert math.isclose(rep.pvalue, min(1.0, 3 * min(rep.pvalues)))


def test_characteristic_estimate_reads_each_window():
    # Z(1) = 1 in two different windows; chi(1/2 * 1) = -1 on both
    wide = Window(2, -21, 21)
    zs = [JumpPath(SPEC, 1.0, 3, w, np.array([0.5]), np.array([ONE.n if w == W else 2**21], dtype=np.int64))
          for w in (W, wide)]
    est, _ = characteristic_estimate(zs, 1.0, PAdicNumber.p_power(-1, window=W))
    assert est.real == pytest.approx(-1.0)
