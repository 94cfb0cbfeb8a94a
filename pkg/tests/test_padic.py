from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padicstable.padic import (
    Ball,
    PAdicNumber,
    PAdicZeroDivision,
    Window,
    WindowMismatch,
    character,
    characters,
    format_literal,
    parse_literal,
    sample_uniform,
    shell_ints,
    valuations,
)
from oracles import digit_add, digit_mul, digits_of, digits_value

PRIMES = st.sampled_from([2, 3, 5, 7])


@st.composite
def window_and_ints(draw, count=2):
    p = draw(PRIMES)
    lo = draw(st.integers(-6, 0))
    # hi >= 1 keeps units and the whole fractional part representable
    hi = draw(st.integers(max(lo + 1, 1), lo + 10))
    w = Window(p, lo, hi)
    ns = [draw(st.integers(0, w.modulus - 1)) for _ in range(count)]
    return w, ns


def test_window_rejects_composite_and_empty():
    with pytest.raises(ValueError):
        Window(6, -2, 2)
    with pytest.raises(ValueError):
        Window(3, 2, 2)


def test_from_fraction_digits():
    w = Window(3, -2, 4)
    x = PAdicNumber.from_fraction(Fraction(5, 9), window=w)
    # 5/9 = 3^-2 (2 + 1*3)
    assert x.valuation == -2
    assert x.digits[:2] == (2, 1)
    assert x.norm == 9


def test_minus_one_is_all_top_digits():
    w = Window(5, 0, 6)
    assert PAdicNumber.from_int(-1, window=w).digits == (4,) * 6


def test_inverse_of_unit():
    w = Window(7, -3, 5)
    two = PAdicNumber.from_int(2, window=w)
    half = PAdicNumber.from_int(1, window=w) / two
    assert half * two == PAdicNumber.from_int(1, window=w)
    assert half.norm == 1


def test_divide_by_zero_raises():
    w = Window(2, -3, 3)
    with pytest.raises(PAdicZeroDivision):
        PAdicNumber.from_int(1, window=w) / PAdicNumber.zero(2, w)


def test_window_mismatch():
    a = PAdicNumber.from_int(1, window=Window(2, -2, 2))
    b = PAdicNumber.from_int(1, window=Window(2, -3, 2))
    with pytest.raises(WindowMismatch):
        a + b


@settings(max_examples=200, deadline=None)
@given(window_and_ints())
def test_addition_matches_schoolbook(wn):
    w, (a, b) = wn
    x, y = PAdicNumber(w, a), PAdicNumber(w, b)
    want = digit_add(digits_of(a, w.p, w.width), digits_of(b, w.p, w.width), w.p)
    assert list((x + y).digits) == want


@settings(max_examples=200, deadline=None)
@given(window_and_ints())
def test_multiplication_matches_schoolbook(wn):
    w, (a, b) = wn
    x, y = PAdicNumber(w, a), PAdicNumber(w, b)
    want = digit_mul(digits_of(a, w.p, w.width), digits_of(b, w.p, w.width), w.p, w.lo)
    assert list((x * y).digits) == want


@settings(max_examples=200, deadline=None)
@given(window_and_ints(count=3))
def test_ring_laws(wn):
    w, (a, b, c) = wn
    x, y, z = (PAdicNumber(w, v) for v in (a, b, c))
    assert x + y == y + x
    assert (x + y) + z == x + (y + z)
    assert x - x == PAdicNumber.zero(w.p, w)
    assert x * y == y * x


@settings(max_examples=200, deadline=None)
@given(window_and_ints())
def test_ultrametric_inequality(wn):
    w, (a, b) = wn
    x, y = PAdicNumber(w, a), PAdicNumber(w, b)
    s = x + y
    assert s.norm <= max(x.norm, y.norm)
    if x.norm != y.norm:
        assert s.norm == max(x.norm, y.norm)


@settings(max_examples=200, deadline=None)
@given(window_and_ints())
def test_norm_multiplicative_for_units(wn):
    w, (a, _) = wn
    x = PAdicNumber(w, a)
    u = PAdicNumber.from_int(w.p + 1 if w.p > 2 else 3, window=w)
    assert (x * u).norm == x.norm
    if not x.is_zero:
        assert (x * u) / u == x


@settings(max_examples=100, deadline=None)
@given(window_and_ints())
def test_value_round_trip_through_fraction(wn):
    w, (a, _) = wn
    x = PAdicNumber(w, a)
    assert digits_value(list(x.digits), w.p, w.lo) == x.to_fraction()
    assert PAdicNumber.from_fraction(x.to_fraction(), window=w) == x


@settings(max_examples=100, deadline=None)
@given(window_and_ints())
def test_literal_round_trip(wn):
    w, (a, _) = wn
    x = PAdicNumber(w, a)
    assert parse_literal(format_literal(x), w) == x


def test_literal_rejects_garbage():
    w = Window(3, -2, 2)
    for s in ("3^1 * (0.1)", "5^0 * (1)", "nonsense"):
        with pytest.raises(ValueError):
            parse_literal(s, w)


@settings(max_examples=100, deadline=None)
@given(window_and_ints())
def test_character_is_additive(wn):
    w, (a, b) = wn
    x, y = PAdicNumber(w, a), PAdicNumber(w, b)
    assert abs(character(x + y) - character(x) * character(y)) < 1e-12


def test_character_trivial_on_unit_ball():
    w = Window(3, -4, 4)
    for k in range(0, 4):
        assert character(PAdicNumber.p_power(k, window=w) * 2) == 1
    assert abs(character(PAdicNumber.p_power(-1, window=w)) - np.exp(2j * np.pi / 3)) < 1e-12


def test_vectorised_helpers_agree_with_scalars():
    w = Window(2, -5, 6)
    rng = np.random.default_rng(0)
    ints = rng.integers(0, w.modulus, size=50)
    ints[:3] = 0
    vals = valuations(ints, w)
    for n, v in zip(ints.tolist(), vals.tolist()):
        x = PAdicNumber(w, n)
        assert v == (w.hi if x.is_zero else x.valuation)
    xi = PAdicNumber.p_power(2, window=w)
    chis = characters(ints, w, xi)
    for n, c in zip(ints.tolist(), chis):
        assert abs(c - character(xi * PAdicNumber(w, n))) < 1e-12


def test_shell_ints_land_on_their_shell():
    w = Window(3, -6, 6)
    rng = np.random.default_rng(1)
    shells = np.array([-3, -1, 0, 2, 5] * 20)
    ints = shell_ints(rng, w, shells)
    assert np.all(-valuations(ints, w) == shells)


def test_ball_membership_and_subballs():
    w = Window(2, -4, 4)
    b = Ball(PAdicNumber.from_fraction(Fraction(1, 2), window=w), 0)
    subs = list(b.subballs(-2))
    assert len(subs) == 4
    assert sum(s.measure() for s in subs) == b.measure() == 1
    for i, s in enumerate(subs):
        assert s.nests_in(b)
        for t in subs[i + 1:]:
            assert s.disjoint(t)
    rng = np.random.default_rng(2)
    for _ in range(20):
        assert sample_uniform(b, rng) in b


def test_ball_center_is_canonical():
    w = Window(5, -2, 3)
    c = PAdicNumber.from_fraction(Fraction(26, 25), window=w)
    assert Ball(c, 0) == Ball(PAdicNumber.from_fraction(Fraction(1, 25), window=w), 0)
