"""Dolecki series, minimal-time estimator, and the constructed anchor."""

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
    best_approx_exact,
    mirror,
)
from heatpoint.errors import PrecisionExhaustedError
from heatpoint.minimal_time import (
    build_liouville_anchor,
    dolecki_partial_sum,
    estimate_minimal_time,
    per_mode_exponent,
    quadratic_liouville_constant,
)

SQRT2M1 = QuadraticIrrational(-1, 1, 2, 1)


def test_partial_sum_resonance():
    mp.prec = 96
    res = dolecki_partial_sum(Rational(1, 2), 1, 2)
    assert res.divergent_by_resonance
    assert res.resonant_n == 2
    assert res.value == mp.inf
    assert res.terms[1] == mp.inf


def test_partial_sum_quadratic_terms():
    mp.prec = 128
    res = dolecki_partial_sum(SQRT2M1, mp.mpf("0.1"), 50)
    assert not res.divergent_by_resonance
    first = mp.exp(-mp.pi ** 2 * mp.mpf("0.1")) / mp.sin(mp.pi * (mp.sqrt(2) - 1))
    assert abs(res.terms[0] - first) < 1e-30
    # terms decay monotonically beyond small n
    for n in range(5, 50):
        assert res.terms[n] < res.terms[n - 1]
    # tail is negligible at T = 1
    a = dolecki_partial_sum(SQRT2M1, 1, 50).value
    b = dolecki_partial_sum(SQRT2M1, 1, 100).value
    assert abs(a - b) < 1e-30


@given(t1=st.floats(0.05, 2), t2=st.floats(0.05, 2))
def test_partial_sum_monotone_in_horizon(t1, t2):
    mp.prec = 96
    if t2 < t1:
        t1, t2 = t2, t1
    hi = dolecki_partial_sum(SQRT2M1, t1, 30).value
    lo = dolecki_partial_sum(SQRT2M1, t2, 30).value
    assert lo <= hi * (1 + mp.mpf(2) ** -80)


def test_estimate_rational():
    mp.prec = 96
    est = estimate_minimal_time(Rational(1, 3), 12)
    assert est.method == "exact-rational"
    assert est.t0_lower == mp.inf and est.t0_upper == mp.inf
    assert est.resonant_n == 3
    assert est.per_n_exponents[2] == mp.inf  # n = 3 resonates
    assert est.to_json()["t0_upper"] == "inf"


def test_estimate_quadratic_is_zero():
    mp.prec = 128
    est = estimate_minimal_time(SQRT2M1, 1000)
    assert est.method == "series-test"
    assert est.t0_lower == 0 and est.t0_upper == 0
    # the empirical window exponents are tiny by n = 1000
    window_vals = est.per_n_exponents[est.window[0] - 1 :]
    assert max(window_vals) < 1e-3
    # Liouville constant really is a lower bound for theta_n * n^2
    c0 = quadratic_liouville_constant(SQRT2M1)
    for n in (1, 2, 5, 12, 29, 70, 120):
        dist, _ = best_approx_exact(SQRT2M1, n)
        assert dist.to_mpf() * n * n > c0


def test_estimate_mirror_invariance():
    mp.prec = 128
    est = estimate_minimal_time(SQRT2M1, 60)
    est_m = estimate_minimal_time(mirror(SQRT2M1), 60)
    for a, b in zip(est.per_n_exponents, est_m.per_n_exponents):
        assert abs(a - b) < mp.mpf(2) ** -100


def test_estimate_decimal_window():
    mp.prec = 128
    x0 = DecimalAnchor("0.414213562373095048801688724210", 256)
    est = estimate_minimal_time(x0, 40)
    assert est.method == "limsup-window"
    assert est.t0_upper == mp.inf
    assert 0 <= est.t0_lower < 0.01


def test_estimate_decimal_exhaustion():
    x0 = DecimalAnchor("0.50", 128)
    with pytest.raises(PrecisionExhaustedError):
        estimate_minimal_time(x0, 4)


def test_build_liouville_anchor_exponents():
    mp.prec = 192
    x0 = build_liouville_anchor(1, 3)
    q = x0.quotients[0]
    assert q == 2
    # collapse exponents at multiples k*q scale like K^2/k^2
    e1 = per_mode_exponent(x0, 2)
    e2 = per_mode_exponent(x0, 4)
    e3 = per_mode_exponent(x0, 6)
    assert abs(e3 - 1) < 0.02
    assert abs(e2 - mp.mpf(9) / 4) < 0.05
    assert abs(e1 - 9) < 0.1
    # odd multiples are far from resonance
    assert abs_sin_pi_multiple(x0, 3) > 0.5
    est = estimate_minimal_time(x0, 12)
    assert est.method == "limsup-window"
    assert 0.8 <= est.t0_lower <= 1.2


def test_build_liouville_anchor_other_target():
    mp.prec = 192
    x0 = build_liouville_anchor(0.5, 4)
    est = estimate_minimal_time(x0, 16)
    assert 0.4 <= est.t0_lower <= 0.6
    # deepest calibrated scale sits at n = K*q = 8
    assert abs(per_mode_exponent(x0, 8) - 0.5) < 0.02


def test_build_liouville_anchor_guards():
    with pytest.raises(ValueError):
        build_liouville_anchor(0, 3)
    with pytest.raises(ValueError):
        build_liouville_anchor(11, 3)
    with pytest.raises(ValueError):
        build_liouville_anchor(1, 2)
    with pytest.raises(PrecisionExhaustedError):
        build_liouville_anchor(10, 12, base=7)


def test_liouville_anchor_guard_propagates():
    x0 = LiouvilleAnchor((2, 5, 1, 1))
    with pytest.raises(PrecisionExhaustedError):
        # certified range is tiny for this toy anchor
        estimate_minimal_time(x0, 1000)
