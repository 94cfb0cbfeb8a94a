import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padicstable.analytic import RadialLevySpec, ball_probability
from padicstable.driver import (
    characteristic_exponent,
    WindowTooSmall,
    format_path,
    increment_tail_bound,
    jump_intensities,
    omega_event,
    omega_probability_bound,
    parse_path,
    read_path,
    sample_increments,
    sample_path,
    truncate_large_jumps,
    write_path,
)
from padicstable.padic import PAdicNumber, Window, valuations

W2 = Window(2, -20, 20)
W3 = Window(3, -14, 14)


def _same(a, b):
    return np.array_equal(a.times, b.times) and np.array_equal(a.jumps, b.jumps)


def test_same_seed_same_path():
    spec = RadialLevySpec.stable(3, 1.5)
    assert _same(sample_path(spec, 2.0, 3, 42, W3), sample_path(spec, 2.0, 3, 42, W3))
    assert not _same(sample_path(spec, 2.0, 3, 42, W3), sample_path(spec, 2.0, 3, 43, W3))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_paths_are_prefix_consistent_in_time(seed, t1, t2):
    spec = RadialLevySpec.stable(2, 1.5)
    lo, hi = sorted((t1, t2))
    short = sample_path(spec, lo, 3, seed, W2)
    long = sample_path(spec, hi, 3, seed, W2)
    assert _same(long.restrict(lo), short)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.integers(-2, 4), st.integers(1, 3))
def test_paths_are_nested_in_resolution(seed, M, k):
    spec = RadialLevySpec.stable(2, 2.0)
    coarse = sample_path(spec, 1.0, M, seed, W2)
    fine = sample_path(spec, 1.0, M + k, seed, W2)
    assert _same(fine.coarsen(M), coarse)
    # the two paths differ by a sum of jumps of norm <= p^-M
    diff = (fine.values_at(fine.times) - coarse.values_at(fine.times)) % W2.modulus
    assert np.all(valuations(diff, W2) >= M)


def test_jumps_exceed_resolution():
    spec = RadialLevySpec.stable(3, 2.0)
    path = sample_path(spec, 2.0, 2, 5, W3)
    assert len(path) > 0
    assert np.all(path.jump_norm_exps() > -2)


def test_shell_counts_match_intensities():
    spec = RadialLevySpec.stable(2, 1.5)
    inten = jump_intensities(spec, 3)
    T = 200.0
    counts = {}
    for i in range(5):
        ne = sample_path(spec, T, 3, (9, i), W2).jump_norm_exps()
        for m in range(-2, 3):
            counts[m] = counts.get(m, 0) + int(np.sum(ne == m))
    for m, c in counts.items():
        mean = 5 * T * inten.rate(m)
        assert abs(c - mean) < 4 * math.sqrt(mean)


def test_total_rate_is_geometric_sum():
    inten = jump_intensities(RadialLevySpec.stable(3, 1.2), 4)
    assert inten.total == pytest.approx(sum(inten.rate(m) for m in range(-3, 400)))


def test_window_checks():
    spec = RadialLevySpec.stable(2, 1.5)
    with pytest.raises(WindowTooSmall):
        sample_path(spec, 1.0, 6, 0, Window(2, -4, 5))
    with pytest.raises(WindowTooSmall):
        sample_path(spec, 1.0, 1, 0, Window(2, 1, 6))


def test_truncation_bounds_jumps_and_omega():
    spec = RadialLevySpec.stable(2, 1.0)
    hits = 0
    n = 400
    for i in range(n):
        path = sample_path(spec, 1.0, 1, (3, i), W2)
        cut = truncate_large_jumps(path, 2)
        assert np.all(cut.jump_norm_exps() <= 2)
        assert omega_event(cut, 2)
        if omega_event(path, 2):
            hits += 1
            assert _same(cut, path)
    prob = omega_probability_bound(spec, 1.0, 2)
    assert abs(hits / n - prob) < 4 * math.sqrt(prob * (1 - prob) / n)


def test_truncated_spec_caps_jump_norms():
    spec = RadialLevySpec.stable(5, 1.5).truncated(1)
    path = sample_path(spec, 5.0, 1, 0, Window(5, -8, 8))
    assert np.all(path.jump_norm_exps() <= 1)


@pytest.mark.parametrize("p,alpha,t", [(2, 1.5, 0.1), (3, 2.0, 1.0)])
def test_increment_ball_frequencies(p, alpha, t):
    spec = RadialLevySpec.stable(p, alpha)
    w = Window(p, -16, 16)
    rng = np.random.default_rng(11)
    n = 20000
    ne = -valuations(sample_increments(spec, t, rng, n, w), w)
    for m in range(-3, 4):
        prob = ball_probability(spec, m, t)
        freq = np.mean(ne <= m)
        assert abs(freq - prob) <= 4 * math.sqrt(prob * (1 - prob) / n) + 1e-12


def test_increment_tail_bound_small():
    spec = RadialLevySpec.stable(2, 1.5)
    under = ball_probability(spec, W2.min_norm_exp() - 1, 1.0)
    over = 1 - ball_probability(spec, W2.max_norm_exp(), 1.0)
    assert increment_tail_bound(spec, 1.0, W2) == pytest.approx(under + over, rel=1e-6)
    assert under < 1e-5 and over < 1e-8


def test_path_file_round_trip(tmp_path):
    spec = RadialLevySpec.stable(3, 1.5)
    path = sample_path(spec, 1.5, 2, (7, 1), W3)
    text = format_path(path)
    again = parse_path(text)
    assert _same(again, path)
    assert format_path(again) == text
    fname = tmp_path / "path.txt"
    write_path(path, fname)
    assert fname.read_text() == text
    assert _same(read_path(fname), path)


def test_value_lookup_is_right_continuous():
    spec = RadialLevySpec.stable(2, 1.5)
    path = sample_path(spec, 1.0, 2, 3, W2)
    t0 = float(path.times[0])
    assert path.value_at(t0 - 1e-12).is_zero
    assert path.value_at(t0) == PAdicNumber._raw(W2, int(path.jumps[0]))


@pytest.mark.parametrize("p,alpha,M", [(2, 2.0, 2), (3, 1.5, 0), (5, 1.2, -1)])
def test_resolution_exponent(p, alpha, M):
    spec = RadialLevySpec.stable(p, alpha)
    total = jump_intensities(spec, M).total
    for k in range(M - 4, M + 4):
        psi = characteristic_exponent(spec, M, k)
        if k <= M:
            # no correction while chi(xi y) = 1 on every omitted jump
            assert psi == pytest.approx(float(p) ** (alpha * k), rel=1e-12)
        else:
            assert psi == pytest.approx(total, rel=1e-12)
        # omitting jumps drops nonnegative terms 1 - Re chi
        assert psi <= float(p) ** (alpha * k) * (1 + 1e-12)
