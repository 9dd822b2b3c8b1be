"""Exact-arithmetic anchor layer: reductions, sines, continued fractions.

Derived values are checked two ways: frozen high-precision constants
(computed once by naive 300-bit multiplication, an independent route that
never uses the exact reduction under test) and structural identities that
must hold exactly.
"""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp

from heatpoint.anchors import (
    DecimalAnchor,
    LiouvilleAnchor,
    QuadraticIrrational,
    Rational,
    abs_sin_pi_multiple,
    anchor_from_json,
    anchor_to_json,
    as_mpf,
    best_approx_distance,
    best_approx_exact,
    best_approx_table,
    continued_fraction,
    cos_pi_multiple,
    is_resonant,
    liouville_bound_check,
    mirror,
    reduced_multiple,
    sin_pi_multiple,
)
from heatpoint.errors import PrecisionExhaustedError

import oracles

SQRT2M1 = QuadraticIrrational(-1, 1, 2, 1)          # sqrt(2) - 1
GOLDEN = QuadraticIrrational(-1, 1, 5, 2)           # (sqrt(5) - 1)/2
INV_SQRT2 = QuadraticIrrational(0, 1, 2, 2)         # sqrt(2)/2

# frozen: mp.sin(n*pi*x) at 300 bits, naive multiplication
SIN_12_SQRT2M1 = "0.09234808680334707418649942"
THETA_12_SQRT2M1 = "0.002453104293571617864977942"
SIN_5_INV_SQRT2 = "-0.9937754983429825734115079"
SIN_8_GOLDEN = "0.174181950379312674271292"
THETA_7_INV_SQRT2 = "0.007178933099166761313441352"


def test_rational_theta_exact():
    x0 = Rational(1, 3)
    dist, p = best_approx_exact(x0, 2)
    assert dist == Fraction(1, 6)
    assert p == 1  # 2/3 rounds to 1
    assert best_approx_distance(x0, 3) == 0
    assert is_resonant(x0, 3) and is_resonant(x0, 6)
    assert not is_resonant(x0, 2)


def test_rational_sin_exact_values():
    mp.prec = 128
    x0 = Rational(1, 3)
    s1 = sin_pi_multiple(x0, 1)
    s2 = sin_pi_multiple(x0, 2)
    s4 = sin_pi_multiple(x0, 4)
    root3_half = mp.sqrt(3) / 2
    assert abs(s1 - root3_half) < mp.mpf(2) ** -120
    assert abs(s2 - root3_half) < mp.mpf(2) ** -120
    assert abs(s4 + root3_half) < mp.mpf(2) ** -120  # sign flips past pi
    assert sin_pi_multiple(x0, 3) == 0
    assert sin_pi_multiple(Rational(1, 2), 3) == -1  # sin(3 pi/2)


def test_quadratic_frozen_values():
    mp.prec = 200
    assert abs(sin_pi_multiple(SQRT2M1, 12) - mp.mpf(SIN_12_SQRT2M1)) < 1e-24
    assert abs(best_approx_distance(SQRT2M1, 12) - mp.mpf(THETA_12_SQRT2M1)) < 1e-26
    assert abs(sin_pi_multiple(INV_SQRT2, 5) - mp.mpf(SIN_5_INV_SQRT2)) < 1e-23
    assert abs(sin_pi_multiple(GOLDEN, 8) - mp.mpf(SIN_8_GOLDEN)) < 1e-24
    assert abs(best_approx_distance(INV_SQRT2, 7) - mp.mpf(THETA_7_INV_SQRT2)) < 1e-26


def test_quadratic_matches_naive_oracle_at_large_n():
    # exact reduction must agree with brute-force high precision even when
    # n*x0 has shed many leading digits
    mp.prec = 128
    x_hi = oracles.naive_sin_npi((mp.sqrt(2) - 1), 987, bits=400)
    assert abs(sin_pi_multiple(SQRT2M1, 987) - x_hi) < 1e-30


def test_continued_fraction_rational_terminates():
    cf = continued_fraction(Rational(1, 3), 10)
    assert cf.quotients == (0, 3)
    assert cf.terminated
    assert cf.convergents == (Fraction(0), Fraction(1, 3))


def test_continued_fraction_quadratic():
    cf = continued_fraction(SQRT2M1, 6)
    assert cf.quotients == (0, 2, 2, 2, 2, 2)
    assert not cf.terminated
    assert cf.convergents[-1] == Fraction(29, 70)
    golden = continued_fraction(GOLDEN, 8)
    assert golden.quotients == (0,) + (1,) * 7


def test_continued_fraction_decimal_certified():
    x0 = DecimalAnchor("0.707106781186547524400844362105", 256)
    cf = continued_fraction(x0, 8)
    assert cf.quotients == (0, 1, 2, 2, 2, 2, 2, 2)
    with pytest.raises(PrecisionExhaustedError):
        continued_fraction(x0, 60)  # 30 digits cannot decide 60 quotients


def test_decimal_uncertainty_raises():
    x0 = DecimalAnchor("0.333", 128)
    # 3 * x0 could be on either side of 1 within the stored digits
    with pytest.raises(PrecisionExhaustedError):
        reduced_multiple(x0, 3)
    # but n = 2 is certified
    r, f = reduced_multiple(x0, 2)
    assert r == 1 and f == Fraction(-334, 1000)


def test_decimal_sin_matches_oracle():
    mp.prec = 128
    x0 = DecimalAnchor("0.707106781186547524400844362105", 256)
    ref = oracles.naive_sin_npi(mp.mpf("0.707106781186547524400844362105"), 5, bits=300)
    assert abs(sin_pi_multiple(x0, 5) - ref) < 1e-28


def test_liouville_value_and_guard():
    x0 = LiouvilleAnchor((2, 2, 2))
    assert x0.fraction == Fraction(5, 12)
    assert x0.certified_limit == 5  # denominator of [0; 2, 2]
    assert best_approx_distance(x0, 5) > 0
    with pytest.raises(PrecisionExhaustedError):
        best_approx_distance(x0, 6)
    with pytest.raises(PrecisionExhaustedError):
        continued_fraction(x0, 7)


def test_liouville_echoes_quotients():
    x0 = LiouvilleAnchor((3, 1, 4, 1, 5))
    cf = continued_fraction(x0, 4)
    assert cf.quotients == (0, 3, 1, 4)
    full = continued_fraction(x0, 6)
    assert full.terminated


def test_mirror_all_variants():
    mp.prec = 128
    assert mirror(Rational(1, 3)) == Rational(2, 3)
    m = mirror(SQRT2M1)
    assert (m.a, m.b, m.d, m.c) == (2, -1, 2, 1)  # 2 - sqrt(2)
    assert abs(as_mpf(m) + as_mpf(SQRT2M1) - 1) < mp.mpf(2) ** -120
    assert mirror(DecimalAnchor("0.250", 128)).digits == "0.750"
    lv = LiouvilleAnchor((2, 3))           # 3/7
    assert mirror(lv).fraction == Fraction(4, 7)
    lv2 = LiouvilleAnchor((1, 2, 5))       # leading quotient 1 path
    assert mirror(lv2).fraction == 1 - lv2.fraction


def test_mirror_preserves_sin_magnitudes():
    # sin(n pi (1-x)) = (-1)^(n+1) sin(n pi x)
    mp.prec = 128
    for n in (1, 2, 3, 7, 12):
        lhs = sin_pi_multiple(mirror(SQRT2M1), n)
        rhs = sin_pi_multiple(SQRT2M1, n) * (-1) ** (n + 1)
        assert abs(lhs - rhs) < mp.mpf(2) ** -120


def test_liouville_bound_check():
    holds, ratio, argmin = liouville_bound_check(SQRT2M1, 2.0, 0.1, 200)
    assert holds and ratio > 1
    holds_r, ratio_r, argmin_r = liouville_bound_check(Rational(1, 3), 2.0, 0.1, 10)
    assert not holds_r
    assert ratio_r == 0 and argmin_r == 3


def test_minimal_polynomial():
    A, B, C = SQRT2M1.conjugate_pair()
    # x = sqrt(2)-1 satisfies x^2 + 2x - 1 = 0
    assert (A, B, C) == (1, 2, -1)


def test_quadratic_normalization_and_validation():
    q = QuadraticIrrational(-2, 2, 8, 4)   # (-2 + 2*sqrt(8))/4 = (-1 + 2*sqrt(2))/2
    assert (q.a, q.b, q.d, q.c) == (-1, 2, 2, 2)
    with pytest.raises(ValueError):
        QuadraticIrrational(0, 1, 4, 2)    # d is a perfect square
    with pytest.raises(ValueError):
        QuadraticIrrational(1, 0, 2, 3)    # rational in disguise
    with pytest.raises(ValueError):
        QuadraticIrrational(1, 1, 2, 2)    # (1+sqrt(2))/2 > 1
    with pytest.raises(ValueError):
        Rational(3, 3)
    with pytest.raises(ValueError):
        DecimalAnchor("1.25", 128)
    with pytest.raises(ValueError):
        LiouvilleAnchor((1,))


def test_json_round_trip():
    anchors = [
        Rational(2, 7),
        SQRT2M1,
        DecimalAnchor("0.1234567890", 192),
        LiouvilleAnchor((2, 1, 1, 3)),
    ]
    for a in anchors:
        assert anchor_from_json(anchor_to_json(a)) == a


def test_best_approx_table():
    tab = best_approx_table(SQRT2M1, 12)
    assert tab.n_max == 12 and len(tab.values) == 12
    mp.prec = 128
    assert abs(tab.values[11] - mp.mpf(THETA_12_SQRT2M1)) < 1e-20
    # convergent denominators of sqrt(2)-1 are 2, 5, 12: record-small values
    assert tab.values[11] == min(tab.values)


@given(p=st.integers(1, 60), q=st.integers(2, 61), n=st.integers(1, 300))
def test_sin_theta_bracket_rational(p, q, n):
    # 2|t| <= |sin(pi t)| <= pi |t| on |t| <= 1/2 links theta_n to the sine
    if p >= q:
        p = p % q
        if p == 0:
            p = 1
    x0 = Rational(p, q)
    mp.prec = 96
    theta_exact, _ = best_approx_exact(x0, n)
    assert theta_exact <= Fraction(1, 2 * n)
    theta = best_approx_distance(x0, n)
    s = abs_sin_pi_multiple(x0, n)
    if theta == 0:
        assert s == 0
    else:
        slack = mp.mpf(2) ** -80
        assert 2 * n * theta <= s + slack
        assert s <= mp.pi * n * theta + slack


@given(a=st.integers(-40, 40), b=st.integers(-20, 20), d=st.sampled_from([2, 3, 5, 7, 11]),
       c=st.integers(1, 40), n=st.integers(1, 200))
def test_reduction_consistency_quadratic(a, b, d, c, n):
    if b == 0:
        b = 1
    try:
        x0 = QuadraticIrrational(a, b, d, c)
    except ValueError:
        return
    mp.prec = 128
    r, f = reduced_multiple(x0, n)
    # n*x0 - r must equal f, and |f| <= 1/2
    lhs = n * as_mpf(x0) - r
    assert abs(lhs - f.to_mpf()) < mp.mpf(2) ** -100
    assert abs(f.to_mpf()) <= 0.5
    # sin/cos identity at the reduced argument
    s, cth = sin_pi_multiple(x0, n), cos_pi_multiple(x0, n)
    assert abs(s * s + cth * cth - 1) < mp.mpf(2) ** -100
