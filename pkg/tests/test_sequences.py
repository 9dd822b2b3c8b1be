"""Avoidance-sequence construction and the overlap lower-bound check.

Oracles: direct series summation for the constant C, exact Fraction
arithmetic for lattice distances, and the closed-form n=1 ratio
2 sinc(pi eps) e^{pi^2 delta} for the overlap check.
"""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from mpmath import mp

import heatpoint.sequences as sequences
from heatpoint.anchors import QuadraticIrrational, Rational
from heatpoint.errors import ConstructionFailedError, InvalidIntervalError
from heatpoint.sequences import (
    EpsSequence,
    check_overlap_lower_bound,
    construct_eps_sequence,
    lattice_distance,
    series_constant,
)

SQRT2M1 = QuadraticIrrational(-1, 1, 2, 1)


def test_lattice_distance_exact_values():
    assert lattice_distance(Fraction(3, 8), 2) == Fraction(1, 8)
    assert lattice_distance(Fraction(1, 3), 3) == 0
    assert lattice_distance(Fraction(5, 12), 3) == Fraction(1, 12)
    # distance never exceeds 1/(2n)
    assert lattice_distance(Fraction(17, 64), 5) <= Fraction(1, 10)
    with pytest.raises(ValueError):
        lattice_distance(Fraction(1, 2), 0)


def test_series_constant_against_direct_sum():
    C = series_constant(Fraction(1, 20))
    with mp.workprec(200):
        direct = 1 / (4 * mp.fsum(
            (n + 1) * mp.exp(-(n * n) * mp.pi ** 2 / 20) for n in range(1, 60)
        ))
        assert abs(C - direct) / direct < mp.mpf("1e-30")


def test_series_constant_large_delta_single_term():
    # at delta = 5 only the n=1 term survives: C ~ 1/(8 e^{-5 pi^2})
    C = series_constant(5)
    with mp.workprec(200):
        lead = mp.exp(5 * mp.pi ** 2) / 8
        # next series correction is ~e^{-15 pi^2}; 160-bit rounding dominates
        assert abs(C - lead) / lead < mp.mpf("1e-40")


def test_construct_sequence_chain_and_margins():
    seq = construct_eps_sequence(Fraction(1, 20), 6, 40, seed=0)
    assert len(seq.values) == 6
    for a, b in zip(seq.values, seq.values[1:]):
        # halving chain, exact rational comparison, strict by open sampling
        assert a > b > a / 2
    assert all(m >= 1 for m in seq.margins)
    assert seq.N_checked == 40 and seq.seed == 0
    assert all(0 < v < 1 for v in seq.values)


def test_construct_sequence_reproducible_and_seed_sensitive():
    a = construct_eps_sequence(Fraction(1, 20), 4, 20, seed=7)
    b = construct_eps_sequence(Fraction(1, 20), 4, 20, seed=7)
    assert a.values == b.values
    assert a.margins == b.margins
    c = construct_eps_sequence(Fraction(1, 20), 4, 20, seed=8)
    assert c.values != a.values


def test_stored_margin_matches_direct_recomputation():
    seq = construct_eps_sequence(Fraction(1, 20), 3, 25, seed=3)
    with mp.workprec(160):
        for j, eps in enumerate(seq.values):
            ev = mp.mpf(eps.numerator) / eps.denominator
            direct = min(
                (mp.mpf(lattice_distance(eps, n).numerator)
                 / lattice_distance(eps, n).denominator)
                / (seq.C_const * ev * mp.exp(-(n * n) * mp.pi ** 2 / 20))
                for n in range(1, 26)
            )
            # stored margins are rounded to caller precision on the way out
            assert abs(direct - seq.margins[j]) / direct < mp.mpf("1e-14")


def test_level0_respects_absolute_exclusion_radius():
    # level 0 avoids the unscaled radius C e^{-n^2 pi^2 delta}
    seq = construct_eps_sequence(Fraction(1, 20), 1, 30, seed=11)
    eps0 = seq.values[0]
    with mp.workprec(160):
        for n in range(1, 31):
            d = lattice_distance(eps0, n)
            radius = seq.C_const * mp.exp(-(n * n) * mp.pi ** 2 / 20)
            assert mp.mpf(d.numerator) / d.denominator >= radius


def test_construction_failure_carries_diagnostics(monkeypatch):
    monkeypatch.setattr(sequences, "_LEVEL_BUDGET", 0)
    with pytest.raises(ConstructionFailedError) as info:
        construct_eps_sequence(Fraction(1, 20), 2, 10, seed=0)
    assert info.value.level == 0
    assert info.value.excluded_measure is not None


def test_construct_validation():
    with pytest.raises(ValueError):
        construct_eps_sequence(Fraction(1, 20), 0, 10)
    with pytest.raises(ValueError):
        construct_eps_sequence(Fraction(1, 20), 2, 0)
    with pytest.raises(ValueError):
        series_constant(0)


@given(seed=st.integers(min_value=0, max_value=40))
def test_sequence_invariants_random_seeds(seed):
    seq = construct_eps_sequence(Fraction(1, 10), 3, 10, seed=seed)
    for a, b in zip(seq.values, seq.values[1:]):
        assert a > b > a / 2
    assert all(m >= 1 for m in seq.margins)


def test_overlap_check_minimum_and_closed_form():
    seq = construct_eps_sequence(Fraction(1, 20), 6, 40, seed=0)
    chk = check_overlap_lower_bound(SQRT2M1, seq, range(1, 41))
    assert chk.min_ratio > 0
    assert chk.skipped == ()
    # the n=1 ratio is exactly 2 sinc(pi eps) e^{pi^2 delta}, independent of
    # the anchor; for this seed it is the grid minimum at j=0
    assert (chk.witness_j, chk.witness_n) == (0, 1)
    with mp.workprec(160):
        ev = mp.mpf(seq.values[0].numerator) / seq.values[0].denominator
        expected = 2 * mp.sinpi(ev) / (mp.pi * ev) * mp.exp(mp.pi ** 2 / 20)
        # min_ratio is rounded to caller precision on the way out
        assert abs(chk.min_ratio - expected) / expected < mp.mpf("1e-14")
        assert chk.min_ratio > 4 / mp.pi * mp.exp(mp.pi ** 2 / 20) * (1 - ev ** 2)


def test_overlap_check_skips_resonant_modes():
    seq = construct_eps_sequence(Fraction(1, 20), 2, 10, seed=0)
    # anchor 1/2: even modes are exactly resonant
    chk = check_overlap_lower_bound(Rational(1, 2), seq, range(1, 5))
    assert chk.skipped == (2, 4)
    assert chk.witness_n in (1, 3)
    with pytest.raises(ValueError):
        check_overlap_lower_bound(Rational(1, 2), seq, [2, 4])


def test_overlap_check_validates_windows():
    seq = construct_eps_sequence(Fraction(1, 20), 2, 10, seed=0)
    # eps_0 ~ 0.385 does not fit around x0 = 1/10
    with pytest.raises(InvalidIntervalError):
        check_overlap_lower_bound(Rational(1, 10), seq, range(1, 5))
    with pytest.raises(ValueError):
        check_overlap_lower_bound(SQRT2M1, seq, [])


def test_eps_sequence_json_round_trip():
    seq = construct_eps_sequence(Fraction(1, 20), 3, 15, seed=5)
    doc = seq.to_json()
    back = EpsSequence.from_json(doc)
    assert back.values == seq.values  # exact fractions survive the trip
    assert back.N_checked == seq.N_checked and back.seed == seq.seed
    # margins travel as 20-digit strings and reparse at ambient precision
    assert all(
        abs(a - b) <= mp.mpf("1e-12") * abs(b)
        for a, b in zip(back.margins, seq.margins)
    )
    assert doc["values_decimal"][0].startswith("0.")
