"""Dolecki's minimal-time dichotomy for pointwise observation.

The series sum_n e^{-n^2 pi^2 T} / |sin(n pi x0)| converges exactly when
T exceeds a threshold T0(x0) in [0, +inf]. A finite machine cannot decide
convergence, so the estimator reports per-mode exponents

    e_n = log(1 / |sin(n pi x0)|) / (n^2 pi^2)

whose tail limsup is T0, together with method-tagged lower/upper bounds:

* exact-rational:  resonance makes terms infinite; T0 = +inf rigorously.
* series-test:     quadratic irrationals admit an explicit Liouville
                   constant from their minimal polynomial, which bounds the
                   series by a convergent one for every T > 0; T0 = 0
                   rigorously.
* limsup-window:   everything else gets the empirical window maximum as
                   t0_lower and +inf as t0_upper (finitely many digits or
                   quotients never certify an upper bound).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from mpmath import mp

from .anchors import (
    AnchorPoint,
    LiouvilleAnchor,
    QuadraticIrrational,
    Rational,
    abs_sin_pi_multiple,
)
from .errors import PrecisionExhaustedError

__all__ = [
    "DoleckiSum",
    "MinimalTimeEstimate",
    "dolecki_partial_sum",
    "estimate_minimal_time",
    "build_liouville_anchor",
    "quadratic_liouville_constant",
]


@dataclass(frozen=True)
class DoleckiSum:
    """Partial sum of the observability series with its term list.

    A resonant mode (sin(n pi x0) = 0) makes the series divergent for every
    horizon; this is reported as value = +inf with resonant_n set, not as an
    exception, because it is the classification itself.
    """

    value: object
    terms: tuple
    horizon: object
    n_terms: int
    resonant_n: Optional[int] = None

    @property
    def divergent_by_resonance(self) -> bool:
        return self.resonant_n is not None


def dolecki_partial_sum(x0: AnchorPoint, T, N: int) -> DoleckiSum:
    """sum_{n<=N} e^{-n^2 pi^2 T} / |sin(n pi x0)| in fixed summation order."""
    Tv = mp.mpf(T)
    if Tv <= 0:
        raise ValueError("horizon must be positive")
    if N < 1:
        raise ValueError("need at least one term")
    terms = []
    resonant = None
    for n in range(1, N + 1):
        s = abs_sin_pi_multiple(x0, n)
        if s == 0:
            terms.append(mp.inf)
            if resonant is None:
                resonant = n
            continue
        terms.append(mp.exp(-(n * n) * mp.pi ** 2 * Tv) / s)
    value = mp.inf if resonant is not None else mp.fsum(terms)
    return DoleckiSum(value, tuple(terms), Tv, N, resonant)


@dataclass(frozen=True)
class MinimalTimeEstimate:
    t0_lower: object
    t0_upper: object
    method: str  # exact-rational | series-test | limsup-window
    window: tuple
    per_n_exponents: tuple
    resonant_n: Optional[int] = None
    notes: tuple = ()

    def to_json(self) -> dict:
        return {
            "t0_lower": _json_extended(self.t0_lower),
            "t0_upper": _json_extended(self.t0_upper),
            "method": self.method,
            "window": list(self.window),
            "exponents": [_json_extended(e) for e in self.per_n_exponents],
            "resonant_n": self.resonant_n,
            "notes": list(self.notes),
        }


def _json_extended(v):
    if v == mp.inf:
        return "inf"
    return float(v)


def per_mode_exponent(x0: AnchorPoint, n: int):
    """log(1/|sin(n pi x0)|)/(n^2 pi^2); +inf on resonance."""
    s = abs_sin_pi_multiple(x0, n)
    if s == 0:
        return mp.inf
    return -mp.log(s) / ((n * n) * mp.pi ** 2)


def quadratic_liouville_constant(x0: QuadraticIrrational):
    """Explicit c0 with |x0 - p/n| > c0/n^2 for all rationals p/n.

    From the minimal polynomial A x^2 + B x + C: the integer A p^2 + B p n
    + C n^2 is nonzero, and factoring through the conjugate root gives
    |x0 - p/n| >= 1 / (A n^2 (|x0 - x0'| + 1)) whenever |x0 - p/n| <= 1.
    """
    A, B, C = x0.conjugate_pair()
    A = abs(A)
    with mp.extraprec(16):
        conj_gap = 2 * abs(mp.mpf(x0.b)) * mp.sqrt(x0.d) / abs(x0.c)
        return 1 / (A * (conj_gap + 1))


def estimate_minimal_time(x0: AnchorPoint, N_max: int) -> MinimalTimeEstimate:
    """Classify the minimal observation time from modes n <= N_max.

    The window maximum of the per-mode exponents over [N_max/2, N_max] is
    the empirical surrogate for the tail limsup; rigorous method tags
    override it where exact arithmetic settles the classification.
    """
    if N_max < 2:
        raise ValueError("N_max must be >= 2")
    lo = max(1, N_max // 2)
    window = (lo, N_max)
    exps = tuple(per_mode_exponent(x0, n) for n in range(1, N_max + 1))
    window_max = max(exps[lo - 1 : N_max])

    if isinstance(x0, Rational):
        return MinimalTimeEstimate(
            t0_lower=mp.inf,
            t0_upper=mp.inf,
            method="exact-rational",
            window=window,
            per_n_exponents=exps,
            resonant_n=x0.q,
            notes=("resonant multiples of %d make every horizon unobservable" % x0.q,),
        )
    if isinstance(x0, QuadraticIrrational):
        c0 = quadratic_liouville_constant(x0)
        note = (
            "theta_n > %s/n^2 from the minimal polynomial, so the series "
            "converges for every T > 0" % mp.nstr(c0, 8)
        )
        return MinimalTimeEstimate(
            t0_lower=mp.mpf(0),
            t0_upper=mp.mpf(0),
            method="series-test",
            window=window,
            per_n_exponents=exps,
            notes=(note, "window max exponent %s" % mp.nstr(window_max, 8)),
        )
    # decimal and constructed anchors: empirical lower bound only
    return MinimalTimeEstimate(
        t0_lower=window_max,
        t0_upper=mp.inf,
        method="limsup-window",
        window=window,
        per_n_exponents=exps,
        notes=("finite data cannot certify an upper bound",),
    )


def build_liouville_anchor(target_T0, K: int, base: int = 2, tail_ones: int = 8) -> LiouvilleAnchor:
    """Construct an anchor whose estimated minimal time is target_T0.

    Continued fraction [0; q, a, 1, ..., 1] with q = base and a huge: the
    anchor sits at distance delta ~ 1/(q*(a*q+1)) from 1/q, so every
    multiple n = k*q has |sin(n pi x0)| ~ pi*k*q*delta and per-mode exponent
    ~ target_T0 * K^2 / k^2. Choosing a so the k = K exponent equals
    target_T0 puts exactly the multiples k <= K above any threshold between
    target_T0 and target_T0*K^2/(K+1)^2; the witness sequence lives there.

    A genuinely nested multi-scale Liouville point (new collapse depth at
    each convergent) is unrepresentable: matching depth e^{-q^2 pi^2 T0} at
    scale q forces the next quotient to exceed e^{q^2 pi^2 T0}, so a third
    nested scale would need quotients with ~10^35 digits. The multiple-of-q
    family realizes the same witness structure with one deep quotient.
    """
    t0 = mp.mpf(target_T0)
    if not 0 < t0 <= 10:
        raise ValueError("target_T0 must lie in (0, 10]")
    if K < 3:
        raise ValueError("need at least K = 3 resonant scales")
    if base < 2:
        raise ValueError("base quotient must be >= 2")
    if tail_ones < 2:
        raise ValueError("need at least two tail quotients")
    q = base
    depth_exponent = (K * q) ** 2 * mp.pi ** 2 * t0
    if depth_exponent > 50000:
        raise PrecisionExhaustedError(
            "required quotient has ~%d digits; construction impractical"
            % int(depth_exponent / mp.log(10)),
        )
    with mp.workprec(192):
        # |sin(K q pi x0)| ~ pi K q delta with delta = 1/(q (a q + 1));
        # set it to e^{-(Kq)^2 pi^2 T0}
        a_real = (mp.pi * K * mp.exp(depth_exponent) - 1) / q
        a = int(mp.floor(a_real))
    if a < 1:
        raise ValueError("target too shallow for this base; increase K or base")
    return LiouvilleAnchor((q, a) + (1,) * tail_ones)
