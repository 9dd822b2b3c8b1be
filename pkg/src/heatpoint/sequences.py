"""Constructive toolkit for the Diophantine window sequences.

A window half-width eps that sits close to a lattice point p/n makes the
overlap of sin(n pi x) with the window degenerate even at non-resonant
anchors. The constructive fix is a sequence eps_0 > eps_1 > ... with
eps_{j+1} in [eps_j/2, eps_j] that keeps a verified distance
dist(eps_j, (1/n)Z) >= C eps_j e^{-n^2 pi^2 delta} for all checked n, built
by seeded rejection sampling over exact dyadic candidates. The companion
check turns that distance into a lower bound on the overlap integrals
themselves.

Candidates and lattice distances are exact rationals; only the comparison
against the transcendental exclusion radii rounds, at 160 working bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from random import Random

from mpmath import mp

from .anchors import AnchorPoint, abs_sin_pi_multiple, is_resonant
from .errors import ConstructionFailedError
from .spectral import IntervalIndicator, _num, overlap_interval

__all__ = [
    "EpsSequence",
    "construct_eps_sequence",
    "lattice_distance",
    "OverlapBoundCheck",
    "check_overlap_lower_bound",
]

_WORK_BITS = 160
_DRAW_BITS = 64  # dyadic resolution of one uniform draw
_LEVEL_BUDGET = 10 ** 4


def lattice_distance(eps: Fraction, n: int) -> Fraction:
    """Exact dist(eps, (1/n)Z) = min(frac(n eps), 1 - frac(n eps)) / n."""
    if n < 1:
        raise ValueError("lattice index must be >= 1")
    t = Fraction(eps) * n
    f = t - math.floor(t)
    return min(f, 1 - f) / n


@dataclass(frozen=True)
class EpsSequence:
    """A verified avoidance sequence.

    values are exact fractions with eps_j > eps_{j+1} > eps_j/2. margins[j]
    is the least over n <= N_checked of
    dist(eps_j, (1/n)Z) / (C eps_j e^{-n^2 pi^2 delta}); every entry is >= 1
    by construction. C_const is the series constant
    (4 sum (n+1) e^{-n^2 pi^2 delta})^{-1}.
    """

    delta: object
    C_const: object
    values: tuple  # Fractions
    N_checked: int
    margins: tuple
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))

    def to_json(self) -> dict:
        return {
            "delta": mp.nstr(_num(self.delta), 20),
            "C_const": mp.nstr(self.C_const, 20),
            "seed": self.seed,
            "N_checked": self.N_checked,
            "values": [[v.numerator, v.denominator] for v in self.values],
            "values_decimal": [mp.nstr(_num(v), 20) for v in self.values],
            "margins": [mp.nstr(m, 20) for m in self.margins],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EpsSequence":
        return cls(
            mp.mpf(obj["delta"]),
            mp.mpf(obj["C_const"]),
            tuple(Fraction(a, b) for a, b in obj["values"]),
            int(obj["N_checked"]),
            tuple(mp.mpf(m) for m in obj["margins"]),
            int(obj["seed"]),
        )


def series_constant(delta):
    """C = (4 sum_{n>=1} (n+1) e^{-n^2 pi^2 delta})^{-1}.

    The terms decay like e^{-n^2}; summation stops once a term no longer
    moves the working-precision total.
    """
    with mp.workprec(_WORK_BITS):
        dv = _num(delta)
        if dv <= 0:
            raise ValueError("delta must be positive")
        total = mp.mpf(0)
        n = 1
        while True:
            term = (n + 1) * mp.exp(-(n * n) * mp.pi ** 2 * dv)
            if total > 0 and term < mp.eps * total:
                break
            total += term
            n += 1
            if n > 10 ** 6:  # delta so small the series is astronomically long
                raise ConstructionFailedError(
                    "series for C did not converge by n = 10^6; delta too small"
                )
        return +(1 / (4 * total))


def _dyadic_unit(rng: Random) -> Fraction:
    # uniform dyadic in the open interval (0,1)
    while True:
        k = rng.getrandbits(_DRAW_BITS)
        if k != 0:
            return Fraction(k, 2 ** _DRAW_BITS)


def construct_eps_sequence(delta, J: int, N_check: int, seed: int = 0) -> EpsSequence:
    """Rejection-sample the avoidance sequence; exact candidates, fixed seed.

    Level 0 draws eps_0 uniformly from (0,1) avoiding radius
    C e^{-n^2 pi^2 delta} around every p/n with n <= N_check; level j+1
    draws from (eps_j/2, eps_j) avoiding radius C eps_j e^{-n^2 pi^2 delta}.
    The proof-side measure of the excluded set is at most half the sampling
    window, so 10^4 draws per level fail with probability < 2^-10000 --
    exhaustion therefore signals a bug or an over-exclusion and raises with
    the measure diagnostics.

    The lemma quantifies over all n; a finite check cannot certify that for
    any representable eps (each rational fails at multiples of its own
    denominator), so the guarantee is scoped to n <= N_check and downstream
    truncations must stay within it.
    """
    if J < 1:
        raise ValueError("need at least one level")
    if N_check < 1:
        raise ValueError("need at least one checked mode")
    C = series_constant(delta)
    rng = Random(seed)
    with mp.workprec(_WORK_BITS):
        dv = _num(delta)
        decay = [mp.exp(-(n * n) * mp.pi ** 2 * dv) for n in range(1, N_check + 1)]
    values = []
    margins = []
    prev = None
    for level in range(J):
        if prev is None:
            radii = [C * d for d in decay]
            window = mp.mpf(1)
        else:
            scale = _num(prev)
            radii = [C * scale * d for d in decay]
            window = _num(prev) / 2
        accepted = None
        for _ in range(_LEVEL_BUDGET):
            u = _dyadic_unit(rng)
            cand = u if prev is None else prev * (1 + u) / 2
            ok = True
            with mp.workprec(_WORK_BITS):
                for idx in range(N_check):
                    # exact lattice distance vs transcendental radius
                    d = lattice_distance(cand, idx + 1)
                    if mp.mpf(d.numerator) / d.denominator < radii[idx]:
                        ok = False
                        break
            if ok:
                accepted = cand
                break
        if accepted is None:
            with mp.workprec(_WORK_BITS):
                # proof-side measure bounds: 2(n+1)r_n on (0,1) at level 0,
                # (n+1) eps_j r_n inside the halving window afterwards
                if prev is None:
                    excluded = mp.fsum(
                        2 * (n + 1) * radii[n - 1] for n in range(1, N_check + 1)
                    )
                else:
                    excluded = mp.fsum(
                        (n + 1) * _num(prev) * radii[n - 1]
                        for n in range(1, N_check + 1)
                    )
            raise ConstructionFailedError(
                "rejection budget %d exhausted at level %d; excluded measure "
                "bound %s versus window %s" % (
                    _LEVEL_BUDGET, level, mp.nstr(excluded, 8), mp.nstr(window, 8)),
                level=level,
                excluded_measure=excluded,
            )
        with mp.workprec(_WORK_BITS):
            ev = _num(accepted)
            dists = [lattice_distance(accepted, n) for n in range(1, N_check + 1)]
            level_margin = min(
                (mp.mpf(d.numerator) / d.denominator) / (C * ev * decay[n - 1])
                for n, d in zip(range(1, N_check + 1), dists)
            )
        values.append(accepted)
        margins.append(+level_margin)
        prev = accepted
    return EpsSequence(delta, C, tuple(values), N_check, tuple(margins), seed)


@dataclass(frozen=True)
class OverlapBoundCheck:
    """Empirical constant for the window-overlap lower bound.

    min_ratio = min over the (j, n) grid of
    |overlap(n, x0, eps_j)| / (eps_j |sin(n pi x0)| e^{-n^2 pi^2 delta}),
    witnessed at (witness_j, witness_n); resonant n (sin exactly zero) are
    excluded from the grid and listed in `skipped`.
    """

    min_ratio: object
    witness_j: int
    witness_n: int
    skipped: tuple
    n_max: int

    def to_json(self) -> dict:
        return {
            "min_ratio": mp.nstr(self.min_ratio, 20),
            "witness_j": self.witness_j,
            "witness_n": self.witness_n,
            "skipped": list(self.skipped),
            "n_max": self.n_max,
        }


def check_overlap_lower_bound(x0: AnchorPoint, seq: EpsSequence, n_range) -> OverlapBoundCheck:
    """Evaluate the overlap lower-bound ratios of the sequence at an anchor.

    Every window (x0 - eps_j, x0 + eps_j) must lie inside (0,1); the
    IntervalIndicator constructor enforces that. Raises ValueError when the
    whole range is resonant (no ratio to take).
    """
    ns = sorted(set(int(n) for n in n_range))
    if not ns or ns[0] < 1:
        raise ValueError("mode range must contain positive integers")
    for eps in seq.values:
        IntervalIndicator(x0, eps)  # domain validation only
    skipped = tuple(n for n in ns if is_resonant(x0, n))
    live = [n for n in ns if not is_resonant(x0, n)]
    if not live:
        raise ValueError(
            "every mode in the range is resonant at the anchor; empty grid"
        )
    best = None
    with mp.workprec(_WORK_BITS):
        dv = _num(seq.delta)
        for n in live:
            s = abs_sin_pi_multiple(x0, n)
            decay = mp.exp(-(n * n) * mp.pi ** 2 * dv)
            for j, eps in enumerate(seq.values):
                ev = _num(eps)
                ratio = abs(overlap_interval(n, x0, eps)) / (ev * s * decay)
                if best is None or ratio < best[0]:
                    best = (ratio, j, n)
    ratio, j, n = best
    return OverlapBoundCheck(+ratio, j, n, skipped, ns[-1])
