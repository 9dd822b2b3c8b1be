"""Anchor points in (0,1) with certified rational-approximation arithmetic.

An anchor is the spatial point (or interval center) whose arithmetic decides
observability. Four representations are supported, each with exact or
certified argument reduction so that sin(n*pi*x0) never loses its leading
digits to naive floating multiplication:

* Rational p/q             - exact Fraction arithmetic, exact resonances;
* QuadraticIrrational      - (a + b*sqrt(d))/c with integer-only floor,
                             round and comparison (no floating point in the
                             reduction path);
* DecimalAnchor            - a digit string known to +-[half unit in the
                             last place]; every derived quantity carries
                             that uncertainty and raises PrecisionExhausted
                             when it cannot be certified;
* LiouvilleAnchor          - continued-fraction quotients; the value is the
                             exact big-integer rational of the final
                             convergent, certified for mode indices far
                             below that convergent's denominator.

The reduction primitive is (n*x0) = r + f with integer r and f in
[-1/2, 1/2]; then sin(n*pi*x0) = (-1)^r * sin(pi*f) and the distance from
x0 to the nearest fraction with denominator n is |f|/n.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from mpmath import mp

from .errors import PrecisionExhaustedError

__all__ = [
    "Rational",
    "QuadraticIrrational",
    "DecimalAnchor",
    "LiouvilleAnchor",
    "AnchorPoint",
    "ContinuedFraction",
    "continued_fraction",
    "best_approx_distance",
    "best_approx_table",
    "reduced_multiple",
    "sin_pi_multiple",
    "cos_pi_multiple",
    "abs_sin_pi_multiple",
    "is_resonant",
    "liouville_bound_check",
    "mirror",
    "as_mpf",
    "anchor_to_json",
    "anchor_from_json",
]


# ---------------------------------------------------------------------------
# exact integer helpers for quadratic irrationals


def _sign_int_plus_sqrt(x: int, y: int, d: int) -> int:
    """Sign of x + y*sqrt(d) for integers x, y and non-square d >= 2."""
    if y == 0:
        return (x > 0) - (x < 0)
    if x == 0:
        return (y > 0) - (y < 0)
    if x > 0 and y > 0:
        return 1
    if x < 0 and y < 0:
        return -1
    # mixed signs: compare x^2 with y^2 d; equality impossible (d non-square)
    lhs = x * x
    rhs = y * y * d
    if x > 0:  # y < 0: positive iff x > |y| sqrt(d)
        return 1 if lhs > rhs else -1
    return 1 if rhs > lhs else -1  # x < 0, y > 0


def _floor_quad(a: int, b: int, d: int, c: int) -> int:
    """floor((a + b*sqrt(d))/c) in exact integer arithmetic."""
    if c == 0:
        raise ZeroDivisionError("quadratic denominator is zero")
    if c < 0:
        a, b, c = -a, -b, -c
    if b == 0:
        return a // c
    s = math.isqrt(b * b * d)
    # floor(b*sqrt(d)): d non-square so b*sqrt(d) is never an integer
    fb = s if b > 0 else -s - 1
    return (a + fb) // c


def _round_quad(a: int, b: int, d: int, c: int) -> int:
    """Nearest integer to (a + b*sqrt(d))/c, half rounded up."""
    if c < 0:
        a, b, c = -a, -b, -c
    return _floor_quad(2 * a + c, 2 * b, d, 2 * c)


def _reduce_square_part(b: int, d: int) -> tuple[int, int]:
    """Pull square factors of d into b (trial division up to 1000)."""
    k = 2
    while k * k <= d and k <= 1000:
        while d % (k * k) == 0:
            d //= k * k
            b *= k
        k += 1
    return b, d


# ---------------------------------------------------------------------------
# anchor variants


@dataclass(frozen=True)
class Rational:
    """Reduced fraction p/q strictly inside (0,1)."""

    p: int
    q: int

    def __post_init__(self):
        if self.q <= 0:
            raise ValueError("denominator must be positive")
        if not 0 < self.p < self.q:
            raise ValueError("rational anchor must lie strictly inside (0,1)")
        g = math.gcd(self.p, self.q)
        if g != 1:
            object.__setattr__(self, "p", self.p // g)
            object.__setattr__(self, "q", self.q // g)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.p, self.q)


@dataclass(frozen=True)
class QuadraticIrrational:
    """(a + b*sqrt(d))/c with integers a, b, c and non-square d >= 2.

    Square factors of d are absorbed into b on construction; b must be
    nonzero (a rational value should use Rational instead).
    """

    a: int
    b: int
    d: int
    c: int

    def __post_init__(self):
        if self.c == 0:
            raise ValueError("denominator c must be nonzero")
        if self.b == 0:
            raise ValueError("b = 0 is rational; use Rational")
        if self.d < 2:
            raise ValueError("d must be >= 2")
        r = math.isqrt(self.d)
        if r * r == self.d:
            raise ValueError("d must not be a perfect square")
        b2, d2 = _reduce_square_part(self.b, self.d)
        a2, c2 = self.a, self.c
        if c2 < 0:
            a2, b2, c2 = -a2, -b2, -c2
        g = math.gcd(math.gcd(abs(a2), abs(b2)), c2)
        if g > 1:
            a2, b2, c2 = a2 // g, b2 // g, c2 // g
        object.__setattr__(self, "a", a2)
        object.__setattr__(self, "b", b2)
        object.__setattr__(self, "d", d2)
        object.__setattr__(self, "c", c2)
        if _sign_int_plus_sqrt(self.a, self.b, self.d) <= 0:
            raise ValueError("quadratic anchor must be positive")
        if _sign_int_plus_sqrt(self.a - self.c, self.b, self.d) >= 0:
            raise ValueError("quadratic anchor must be below 1")

    def conjugate_pair(self) -> tuple[int, int, int]:
        """Integer coefficients (A, B, C) of the minimal polynomial Ax^2+Bx+C."""
        # x = (a + b sqrt(d))/c  =>  (cx - a)^2 = b^2 d
        A = self.c * self.c
        B = -2 * self.a * self.c
        C = self.a * self.a - self.b * self.b * self.d
        g = math.gcd(math.gcd(abs(A), abs(B)), abs(C)) or 1
        return A // g, B // g, C // g


@dataclass(frozen=True)
class DecimalAnchor:
    """Decimal digits of an otherwise unknown number, e.g. "0.7071067811".

    The intended anchor is only known to within half a unit in the last
    stored digit. Derived quantities are certified against that radius and
    raise PrecisionExhaustedError when the digits no longer decide them.
    `bits` is the working precision used for derived floating values.
    """

    digits: str
    bits: int = 256

    def __post_init__(self):
        if not re.fullmatch(r"0\.[0-9]+", self.digits):
            raise ValueError("digits must look like 0.ddd... inside (0,1)")
        if self.bits < 64:
            raise ValueError("bits must be at least 64")

    @property
    def places(self) -> int:
        return len(self.digits) - 2

    @property
    def fraction(self) -> Fraction:
        """The stored digits as an exact rational (center of the known interval)."""
        return Fraction(int(self.digits[2:]), 10 ** self.places)

    @property
    def radius(self) -> Fraction:
        return Fraction(1, 2 * 10 ** self.places)


@dataclass(frozen=True)
class LiouvilleAnchor:
    """Anchor given by continued-fraction quotients [0; a1, a2, ...].

    The stored value is the exact rational of the final convergent. Its own
    resonance sits at that convergent's denominator, which for genuinely
    deep constructions is astronomically larger than any mode index used;
    `certified_limit` is the largest n for which derived quantities match
    the intended (infinite-tail) point.
    """

    quotients: tuple[int, ...]

    def __post_init__(self):
        q = tuple(int(v) for v in self.quotients)
        if not q or any(v < 1 for v in q):
            raise ValueError("quotients must be a nonempty list of integers >= 1")
        if q == (1,):
            raise ValueError("[0; 1] equals 1, outside (0,1)")
        object.__setattr__(self, "quotients", q)

    @property
    def fraction(self) -> Fraction:
        p, q = _cf_convergent(self.quotients)
        return Fraction(p, q)

    @property
    def certified_limit(self) -> int:
        """Largest mode index certified against the truncated tail."""
        if len(self.quotients) == 1:
            return self.quotients[0]
        p, q = _cf_convergent(self.quotients[:-1])
        return q


AnchorPoint = Union[Rational, QuadraticIrrational, DecimalAnchor, LiouvilleAnchor]


def _cf_convergent(quotients) -> tuple[int, int]:
    """(p, q) of [0; a1, ..., ak] via the standard recurrence."""
    h0, h1 = 0, 1  # p_0 = 0, p_{-1} = 1 for the leading quotient 0
    k0, k1 = 1, 0
    for a in quotients:
        h0, h1 = a * h0 + h1, h0
        k0, k1 = a * k0 + k1, k0
    return h0, k0


# ---------------------------------------------------------------------------
# continued fractions


@dataclass(frozen=True)
class ContinuedFraction:
    quotients: tuple[int, ...]
    convergents: tuple[Fraction, ...]
    terminated: bool


def _convergents_from(quotients) -> tuple[Fraction, ...]:
    out = []
    h0, h1, k0, k1 = quotients[0], 1, 1, 0
    out.append(Fraction(h0, k0))
    for a in quotients[1:]:
        h0, h1 = a * h0 + h1, h0
        k0, k1 = a * k0 + k1, k0
        out.append(Fraction(h0, k0))
    return tuple(out)


def _cf_of_fraction(x: Fraction, depth: int) -> tuple[list[int], bool]:
    quots = []
    num, den = x.numerator, x.denominator
    while len(quots) < depth:
        a, rem = divmod(num, den)
        quots.append(a)
        if rem == 0:
            return quots, True
        num, den = den, rem
    return quots, False


def _cf_of_interval(lo: Fraction, hi: Fraction, depth: int) -> tuple[list[int], bool]:
    """Quotients shared by every number in [lo, hi]; stops when undecided."""
    quots = []
    while len(quots) < depth:
        flo, fhi = lo // 1, hi // 1
        if flo != fhi:
            return quots, False
        a = int(flo)
        quots.append(a)
        rlo, rhi = lo - a, hi - a
        if rlo <= 0:
            # the interval contains the integer a: expansion undecidable past here
            return quots, False
        lo, hi = 1 / rhi, 1 / rlo
    return quots, True


def continued_fraction(x0: AnchorPoint, depth: int) -> ContinuedFraction:
    """Continued-fraction quotients [a0; a1, ...] of the anchor, a0 = 0.

    Rational anchors terminate naturally (possibly before `depth`). Decimal
    anchors raise PrecisionExhaustedError once the stored digits no longer
    determine the next quotient; Liouville anchors do the same past their
    stored quotients.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if isinstance(x0, Rational):
        quots, _ = _cf_of_fraction(x0.fraction, depth)
        return ContinuedFraction(tuple(quots), _convergents_from(quots), True)
    if isinstance(x0, LiouvilleAnchor):
        stored = (0,) + x0.quotients
        if depth > len(stored):
            raise PrecisionExhaustedError(
                "only %d quotients constructed, %d requested" % (len(stored), depth)
            )
        quots = stored[:depth]
        return ContinuedFraction(tuple(quots), _convergents_from(quots), depth == len(stored))
    if isinstance(x0, QuadraticIrrational):
        quots = []
        A, B, C, d = x0.a, x0.b, x0.c, x0.d
        if C < 0:
            A, B, C = -A, -B, -C
        while len(quots) < depth:
            a = _floor_quad(A, B, d, C)
            quots.append(a)
            # 1/(x - a) = (C(A - aC) - C B sqrt(d)) / ((A - aC)^2 - B^2 d)
            A1 = A - a * C
            den = A1 * A1 - B * B * d
            A, B, C = C * A1, -C * B, den
            if C < 0:
                A, B, C = -A, -B, -C
            g = math.gcd(math.gcd(abs(A), abs(B)), C)
            if g > 1:
                A, B, C = A // g, B // g, C // g
        return ContinuedFraction(tuple(quots), _convergents_from(quots), False)
    if isinstance(x0, DecimalAnchor):
        lo = x0.fraction - x0.radius
        hi = x0.fraction + x0.radius
        quots, ok = _cf_of_interval(lo, hi, depth)
        if not ok:
            raise PrecisionExhaustedError(
                "stored digits determine only %d quotients, %d requested"
                % (len(quots), depth),
                bits=x0.bits,
            )
        return ContinuedFraction(tuple(quots), _convergents_from(quots), False)
    raise TypeError("unsupported anchor type %r" % type(x0).__name__)


# ---------------------------------------------------------------------------
# argument reduction: n*x0 = r + f with f in [-1/2, 1/2]


def _liouville_guard(x0: LiouvilleAnchor, n: int):
    if n > x0.certified_limit:
        raise PrecisionExhaustedError(
            "mode %d beyond certified range %d of the constructed point"
            % (n, x0.certified_limit)
        )


def reduced_multiple(x0: AnchorPoint, n: int):
    """Return (r, f) with n*x0 = r + f exactly (or certified) and |f| <= 1/2.

    f is a Fraction for Rational/Liouville/Decimal anchors and an exact
    integer triple wrapper for quadratic anchors; for decimal anchors it is
    the center of the known interval and is only returned when the stored
    digits certify its sign. Use the sin/cos helpers below rather than
    consuming f directly unless exact arithmetic is needed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(x0, Rational) or isinstance(x0, LiouvilleAnchor):
        if isinstance(x0, LiouvilleAnchor):
            _liouville_guard(x0, n)
        v = n * x0.fraction
        r = (2 * v.numerator + v.denominator) // (2 * v.denominator)
        return r, v - r
    if isinstance(x0, QuadraticIrrational):
        a, b, c, d = x0.a, x0.b, x0.c, x0.d
        r = _round_quad(n * a, n * b, d, c)
        return r, _QuadFrac(n * a - r * c, n * b, d, c)
    if isinstance(x0, DecimalAnchor):
        v = n * x0.fraction
        r = (2 * v.numerator + v.denominator) // (2 * v.denominator)
        f = v - r
        err = n * x0.radius
        if abs(f) <= 2 * err:
            raise PrecisionExhaustedError(
                "n*x0 for n=%d is within the uncertainty of the stored digits" % n,
                bits=x0.bits,
            )
        if err > Fraction(1, 100):
            raise PrecisionExhaustedError(
                "uncertainty %.3g of n*x0 too large to be meaningful" % float(err),
                bits=x0.bits,
            )
        return r, f
    raise TypeError("unsupported anchor type %r" % type(x0).__name__)


@dataclass(frozen=True)
class _QuadFrac:
    """Exact value (a + b*sqrt(d))/c, used for reduced fractional parts."""

    a: int
    b: int
    d: int
    c: int

    def sign(self) -> int:
        s = _sign_int_plus_sqrt(self.a, self.b, self.d)
        return s if self.c > 0 else -s

    def to_mpf(self):
        with mp.extraprec(16):
            return (mp.mpf(self.a) + mp.mpf(self.b) * mp.sqrt(mp.mpf(self.d))) / self.c


def _frac_to_mpf(f):
    if isinstance(f, _QuadFrac):
        return f.to_mpf()
    if isinstance(f, Fraction):
        with mp.extraprec(16):
            return mp.mpf(f.numerator) / mp.mpf(f.denominator)
    return f  # already mpf (decimal anchors)


def _frac_is_zero(f) -> bool:
    if isinstance(f, _QuadFrac):
        return False  # irrational: never exactly a half-integer multiple
    return f == 0


def sin_pi_multiple(x0: AnchorPoint, n: int):
    """sin(n*pi*x0) as an mpf at the current working precision, exact sign."""
    r, f = reduced_multiple(x0, n)
    if _frac_is_zero(f):
        return mp.mpf(0)
    s = mp.sinpi(_frac_to_mpf(f))
    return -s if r % 2 else s


def cos_pi_multiple(x0: AnchorPoint, n: int):
    """cos(n*pi*x0) as an mpf at the current working precision."""
    r, f = reduced_multiple(x0, n)
    c = mp.cospi(_frac_to_mpf(f))
    return -c if r % 2 else c


def abs_sin_pi_multiple(x0: AnchorPoint, n: int):
    """|sin(n*pi*x0)|; exactly mpf(0) on resonance."""
    return abs(sin_pi_multiple(x0, n))


def is_resonant(x0: AnchorPoint, n: int) -> bool:
    """True iff sin(n*pi*x0) = 0 exactly (rational anchor, denominator | n)."""
    if isinstance(x0, Rational):
        return n % x0.q == 0
    if isinstance(x0, LiouvilleAnchor):
        _liouville_guard(x0, n)
        return False  # certified range sits strictly below the final denominator
    return False


def best_approx_distance(x0: AnchorPoint, n: int):
    """Distance from x0 to the nearest fraction p/n (p any integer), as mpf.

    Exactly mpf(0) when x0 is rational with denominator dividing n. The
    exact Fraction value, when one exists, is available via
    best_approx_exact.
    """
    r, f = reduced_multiple(x0, n)
    if _frac_is_zero(f):
        return mp.mpf(0)
    return abs(_frac_to_mpf(f)) / n


def best_approx_exact(x0: AnchorPoint, n: int):
    """(distance, nearest numerator) with distance exact when representable.

    Returns (Fraction | _QuadFrac | mpf, int). For quadratic anchors the
    distance is a _QuadFrac with positive sign; callers needing digits use
    .to_mpf().
    """
    r, f = reduced_multiple(x0, n)
    if isinstance(f, _QuadFrac):
        if f.sign() < 0:
            f = _QuadFrac(-f.a, -f.b, f.d, f.c)
        return _QuadFrac(f.a, f.b, f.d, f.c * n), r
    return abs(f) / n, r


@dataclass(frozen=True)
class BestApproxTable:
    """Distances to nearest fractions p/n for n = 1..n_max, with numerators."""

    n_max: int
    values: tuple  # mpf distances, index n-1
    numerators: tuple[int, ...]


def best_approx_table(x0: AnchorPoint, n_max: int) -> BestApproxTable:
    vals = []
    nums = []
    for n in range(1, n_max + 1):
        dist, p = best_approx_exact(x0, n)
        vals.append(_frac_to_mpf(dist))
        nums.append(p)
    return BestApproxTable(n_max, tuple(vals), tuple(nums))


def liouville_bound_check(x0: AnchorPoint, m: float, c, n_max: int):
    """Check dist(x0, p/n) > c / n^m for all n <= n_max.

    Returns (holds, min_ratio, argmin_n) where ratio_n = dist_n * n^m / c.
    Rational anchors fail at multiples of their denominator (distance 0).
    """
    if c <= 0:
        raise ValueError("c must be positive")
    holds = True
    min_ratio = mp.inf
    argmin = None
    with mp.extraprec(32):
        cc = mp.mpf(c)
        for n in range(1, n_max + 1):
            dist = best_approx_distance(x0, n)
            ratio = dist * mp.mpf(n) ** m / cc
            if ratio <= 1:
                holds = False
            if ratio < min_ratio:
                min_ratio = ratio
                argmin = n
    return holds, min_ratio, argmin


def mirror(x0: AnchorPoint) -> AnchorPoint:
    """The anchor 1 - x0 (same variant)."""
    if isinstance(x0, Rational):
        return Rational(x0.q - x0.p, x0.q)
    if isinstance(x0, QuadraticIrrational):
        return QuadraticIrrational(x0.c - x0.a, -x0.b, x0.d, x0.c)
    if isinstance(x0, DecimalAnchor):
        # 1 - 0.d1..dk is again a k-place decimal
        scaled = 10 ** x0.places - int(x0.digits[2:])
        return DecimalAnchor("0." + str(scaled).rjust(x0.places, "0"), x0.bits)
    if isinstance(x0, LiouvilleAnchor):
        q = list(x0.quotients)
        # classical identity: 1 - [0; a1, a2, ...] =
        #   [0; 1, a1 - 1, a2, ...] when a1 >= 2, else [0; a2 + 1, a3, ...]
        if q[0] >= 2:
            out = [1, q[0] - 1] + q[1:]
        else:
            if len(q) == 1:
                raise ValueError("cannot mirror [0;1]")
            out = [q[1] + 1] + q[2:]
        return LiouvilleAnchor(tuple(out))
    raise TypeError("unsupported anchor type %r" % type(x0).__name__)


def as_mpf(x0: AnchorPoint):
    """Anchor value as an mpf at the current working precision."""
    if isinstance(x0, (Rational, LiouvilleAnchor)):
        f = x0.fraction
        with mp.extraprec(16):
            return mp.mpf(f.numerator) / mp.mpf(f.denominator)
    if isinstance(x0, QuadraticIrrational):
        return _QuadFrac(x0.a, x0.b, x0.d, x0.c).to_mpf()
    if isinstance(x0, DecimalAnchor):
        with mp.workprec(max(mp.prec, x0.bits)):
            v = mp.mpf(x0.digits)
        return +v
    raise TypeError("unsupported anchor type %r" % type(x0).__name__)


# ---------------------------------------------------------------------------
# JSON round-trip


def anchor_to_json(x0: AnchorPoint) -> dict:
    if isinstance(x0, Rational):
        return {"kind": "rational", "p": x0.p, "q": x0.q}
    if isinstance(x0, QuadraticIrrational):
        return {"kind": "quadratic", "a": x0.a, "b": x0.b, "d": x0.d, "c": x0.c}
    if isinstance(x0, DecimalAnchor):
        return {"kind": "decimal", "digits": x0.digits, "bits": x0.bits}
    if isinstance(x0, LiouvilleAnchor):
        return {"kind": "liouville", "cf": list(x0.quotients)}
    raise TypeError("unsupported anchor type %r" % type(x0).__name__)


def anchor_from_json(obj: dict) -> AnchorPoint:
    kind = obj.get("kind")
    if kind == "rational":
        return Rational(int(obj["p"]), int(obj["q"]))
    if kind == "quadratic":
        return QuadraticIrrational(int(obj["a"]), int(obj["b"]), int(obj["d"]), int(obj["c"]))
    if kind == "decimal":
        return DecimalAnchor(str(obj["digits"]), int(obj.get("bits", 256)))
    if kind == "liouville":
        return LiouvilleAnchor(tuple(int(v) for v in obj["cf"]))
    raise ValueError("unknown anchor kind %r" % kind)
