"""Spectral representation of the Dirichlet heat equation on (0,1).

Everything is expressed in the orthonormal sine basis phi_n(x) =
sqrt(2) sin(n pi x) with eigenvalues lambda_n = n^2 pi^2, so that the L2
norm of a state is the l2 norm of its coefficient vector. Overlap integrals
against interval indicators are evaluated by closed forms whose anchor-point
factors sin(n pi x0), cos(n pi x0) come from the exact reduction layer in
`anchors` -- never from naive multiplication n*x0.

All operations run at the caller's current mpmath precision and are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from mpmath import mp

from .anchors import (
    AnchorPoint,
    anchor_from_json,
    anchor_to_json,
    as_mpf,
    cos_pi_multiple,
    is_resonant,
    sin_pi_multiple,
)
from .errors import HorizonMismatchError, InvalidIntervalError

__all__ = [
    "eigenvalue",
    "FourierState",
    "IntervalIndicator",
    "DiracAt",
    "SpatialProfile",
    "ExpSumSignal",
    "SampledSignal",
    "PerModeExpSum",
    "Signal",
    "signal_to_json",
    "signal_from_json",
    "ScalarControl",
    "overlap_interval",
    "overlap_product",
    "mode_source",
    "mode_coupling",
    "moment_matrix",
    "gramian_matrix",
    "evolve_free",
    "evolve_forced",
    "observation_quadratic",
]


def eigenvalue(n: int):
    """lambda_n = n^2 pi^2 at the current working precision."""
    if n < 1:
        raise ValueError("mode index must be >= 1")
    return mp.mpf(n) ** 2 * mp.pi ** 2


def _num(x):
    """Convert to mpf, keeping exact Fractions exact up to the working precision."""
    if isinstance(x, Fraction):
        with mp.extraprec(16):
            return mp.mpf(x.numerator) / mp.mpf(x.denominator)
    return mp.mpf(x)


def _sinpi_times(n: int, t):
    """sin(n*pi*t) with exact argument reduction when t is a Fraction."""
    if isinstance(t, Fraction):
        v = n * t
        r = (2 * v.numerator + v.denominator) // (2 * v.denominator)
        f = v - r
        if f == 0:
            return mp.mpf(0)
        s = mp.sinpi(_num(f))
        return -s if r % 2 else s
    return mp.sinpi(mp.mpf(n) * mp.mpf(t))


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class FourierState:
    """Coefficients against phi_n = sqrt(2) sin(n pi x), n = 1..N."""

    coeffs: tuple
    warnings: tuple = ()

    def __post_init__(self):
        if len(self.coeffs) < 1:
            raise ValueError("need at least one mode")
        object.__setattr__(self, "coeffs", tuple(mp.mpf(c) for c in self.coeffs))

    @property
    def n_modes(self) -> int:
        return len(self.coeffs)

    def norm(self):
        """L2(0,1) norm = l2 norm of the coefficients (orthonormal basis)."""
        return mp.sqrt(mp.fsum(c * c for c in self.coeffs))

    def eval_at(self, x):
        xv = mp.mpf(x)
        return mp.fsum(
            c * mp.sqrt(2) * mp.sinpi((n + 1) * xv) for n, c in enumerate(self.coeffs)
        )

    def to_json(self) -> dict:
        return {"n": self.n_modes, "coeffs": [_json_real(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj: dict) -> "FourierState":
        coeffs = tuple(mp.mpf(c) for c in obj["coeffs"])
        if len(coeffs) != obj["n"]:
            raise ValueError("coefficient count does not match n")
        return cls(coeffs)

    @classmethod
    def single_mode(cls, n: int, n_modes: int = None, amplitude=1) -> "FourierState":
        size = n_modes if n_modes is not None else n
        if not 1 <= n <= size:
            raise ValueError("mode outside truncation")
        return cls(tuple(mp.mpf(amplitude) if k == n else mp.mpf(0)
                         for k in range(1, size + 1)))


def _json_real(v):
    """mpf -> JSON-safe value: float when it round-trips, else decimal string."""
    f = float(v)
    if mp.isinf(mp.mpf(f)) and not mp.isinf(v):
        return mp.nstr(v, 20)
    if f == 0.0 and v != 0:
        return mp.nstr(v, 20)
    return f


# ---------------------------------------------------------------------------
# spatial profiles


def _anchor_bounds(x0: AnchorPoint):
    """A small certified enclosure of the anchor value, for domain checks."""
    with mp.workprec(256):
        v = as_mpf(x0)
        slack = mp.mpf(2) ** -200
        from .anchors import DecimalAnchor

        if isinstance(x0, DecimalAnchor):
            slack += _num(x0.radius)
        return v - slack, v + slack


@dataclass(frozen=True)
class IntervalIndicator:
    """chi_{(x0 - eps, x0 + eps)} with the interval strictly inside (0,1)."""

    center: AnchorPoint
    half_width: object  # Fraction or real

    def __post_init__(self):
        eps = self.half_width
        epsv = _num(eps)
        if epsv <= 0:
            raise InvalidIntervalError("half-width must be positive")
        lo, hi = _anchor_bounds(self.center)
        with mp.workprec(256):
            if not (lo - epsv > 0 and hi + epsv < 1):
                raise InvalidIntervalError(
                    "interval (x0 - eps, x0 + eps) must lie strictly inside (0,1)"
                )

    @property
    def eps(self):
        return self.half_width


@dataclass(frozen=True)
class DiracAt:
    """Point mass at the anchor x0."""

    point: AnchorPoint


SpatialProfile = Union[IntervalIndicator, DiracAt]


def profile_to_json(where: SpatialProfile) -> dict:
    if isinstance(where, IntervalIndicator):
        eps = where.half_width
        eps_repr = [eps.numerator, eps.denominator] if isinstance(eps, Fraction) else float(eps)
        return {"kind": "interval", "center": anchor_to_json(where.center), "eps": eps_repr}
    return {"kind": "dirac", "point": anchor_to_json(where.point)}


def profile_from_json(obj: dict) -> SpatialProfile:
    if obj["kind"] == "interval":
        eps = obj["eps"]
        if isinstance(eps, list):
            eps = Fraction(eps[0], eps[1])
        return IntervalIndicator(anchor_from_json(obj["center"]), eps)
    if obj["kind"] == "dirac":
        return DiracAt(anchor_from_json(obj["point"]))
    raise ValueError("unknown profile kind %r" % obj.get("kind"))


# ---------------------------------------------------------------------------
# overlap integrals (closed forms; anchor factors by exact reduction)


def _check_interval(x0: AnchorPoint, eps):
    epsv = _num(eps)
    if epsv <= 0:
        raise InvalidIntervalError("half-width must be positive")
    lo, hi = _anchor_bounds(x0)
    # closed endpoints allowed here: [x0-eps, x0+eps] may touch 0 or 1
    with mp.workprec(256):
        if lo - epsv < -mp.mpf(2) ** -128 or hi + epsv > 1 + mp.mpf(2) ** -128:
            raise InvalidIntervalError("integration window exceeds [0, 1]")


def overlap_interval(n: int, x0: AnchorPoint, eps):
    """integral of sin(n pi x) over (x0-eps, x0+eps) = (2/(n pi)) sin(n pi x0) sin(n pi eps)."""
    if n < 1:
        raise ValueError("mode index must be >= 1")
    _check_interval(x0, eps)
    s0 = sin_pi_multiple(x0, n)
    if s0 == 0:
        return mp.mpf(0)
    return 2 * s0 * _sinpi_times(n, eps) / (n * mp.pi)


def overlap_product(m: int, n: int, x0: AnchorPoint, eps):
    """integral of sin(m pi x) sin(n pi x) over (x0-eps, x0+eps), product-to-sum form."""
    if m < 1 or n < 1:
        raise ValueError("mode indices must be >= 1")
    _check_interval(x0, eps)
    epsv = _num(eps)
    if m == n:
        return epsv - cos_pi_multiple(x0, 2 * n) * _sinpi_times(2 * n, eps) / (2 * n * mp.pi)
    k, s = abs(m - n), m + n
    term_diff = cos_pi_multiple(x0, k) * _sinpi_times(k, eps) / (k * mp.pi)
    term_sum = cos_pi_multiple(x0, s) * _sinpi_times(s, eps) / (s * mp.pi)
    return term_diff - term_sum


def mode_source(where: SpatialProfile, n: int):
    """Unnormalized source coefficient: integral of sin(n pi x) against the profile.

    b_n of the Duhamel formula is sqrt(2) times this value.
    """
    if isinstance(where, IntervalIndicator):
        return overlap_interval(n, where.center, where.half_width)
    return sin_pi_multiple(where.point, n)


def mode_coupling(where: SpatialProfile, m: int, n: int):
    """W_mn: overlap_product for intervals, sin(m pi x0) sin(n pi x0) for points."""
    if isinstance(where, IntervalIndicator):
        return overlap_product(m, n, where.center, where.half_width)
    x0 = where.point
    if is_resonant(x0, m) or is_resonant(x0, n):
        return mp.mpf(0)
    return sin_pi_multiple(x0, m) * sin_pi_multiple(x0, n)


def coupling_mass(where: SpatialProfile, m: int, n: int):
    """Unsigned term mass of the W_mn assembly, for roundoff audits.

    Mirrors mode_coupling term by term with absolute values, so it is always
    >= |W_mn|; the ratio mass/|W| counts the bits lost to cancellation when
    the signed closed form nearly vanishes (windows centered close to a zero
    of sin(n pi x), where W_nn drops from eps to eps^3 scale).
    """
    if isinstance(where, IntervalIndicator):
        x0, eps = where.center, where.half_width
        epsv = _num(eps)
        if m == n:
            return epsv + abs(
                cos_pi_multiple(x0, 2 * n) * _sinpi_times(2 * n, eps)
            ) / (2 * n * mp.pi)
        k, s = abs(m - n), m + n
        return (
            abs(cos_pi_multiple(x0, k) * _sinpi_times(k, eps)) / (k * mp.pi)
            + abs(cos_pi_multiple(x0, s) * _sinpi_times(s, eps)) / (s * mp.pi)
        )
    x0 = where.point
    if is_resonant(x0, m) or is_resonant(x0, n):
        return mp.mpf(0)
    return abs(sin_pi_multiple(x0, m) * sin_pi_multiple(x0, n))


# ---------------------------------------------------------------------------
# time signals


@dataclass(frozen=True)
class ExpSumSignal:
    """g(t) = sum_k coeffs[k-1] * e^{-k^2 pi^2 t}, or in (T - t) when reversed.

    Rates are tied to the heat eigenvalues; this is exactly the class of
    signals produced by the moment method and by pointwise HUM controls,
    and it admits closed-form Duhamel and norm integrals.
    """

    coeffs: tuple
    horizon: object
    time_reversed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(mp.mpf(c) for c in self.coeffs))

    def eval(self, t):
        tv = mp.mpf(t)
        arg = _num(self.horizon) - tv if self.time_reversed else tv
        return mp.fsum(
            c * mp.exp(-eigenvalue(k + 1) * arg) for k, c in enumerate(self.coeffs)
        )

    def l2_norm(self):
        """L2(0,T) norm, closed form a^T M a (reversal leaves it unchanged)."""
        N = len(self.coeffs)
        if N == 0:
            return mp.mpf(0)
        T = _num(self.horizon)
        M = moment_matrix(T, N)
        q = mp.fsum(
            self.coeffs[j] * self.coeffs[k] * M[j, k]
            for j in range(N)
            for k in range(N)
        )
        return mp.sqrt(max(q, mp.mpf(0)))


@dataclass(frozen=True)
class SampledSignal:
    """Uniform samples of g on [0, T] (endpoints included, odd count >= 3)."""

    values: tuple
    horizon: object

    def __post_init__(self):
        vals = tuple(mp.mpf(v) for v in self.values)
        if len(vals) < 3 or len(vals) % 2 == 0:
            raise ValueError("need an odd number of samples >= 3 for Simpson quadrature")
        object.__setattr__(self, "values", vals)

    @property
    def dt(self):
        return _num(self.horizon) / (len(self.values) - 1)

    def eval(self, t):
        # piecewise-linear interpolation; quadrature paths use the raw samples
        T = _num(self.horizon)
        tv = mp.mpf(t)
        if tv <= 0:
            return self.values[0]
        if tv >= T:
            return self.values[-1]
        pos = tv / self.dt
        i = int(mp.floor(pos))
        w = pos - i
        return self.values[i] * (1 - w) + self.values[i + 1] * w

    def l2_norm(self):
        sq = tuple(v * v for v in self.values)
        return mp.sqrt(max(_simpson(sq, self.dt), mp.mpf(0)))


@dataclass(frozen=True)
class PerModeExpSum:
    """Non-separated control density sum_n eta_n e^{-lambda_n (T-t)} phi_n(x).

    Only meaningful together with a profile restricting it in space; produced
    by HUM on interval profiles where the minimizer is not separated.
    """

    eta: tuple
    horizon: object

    def __post_init__(self):
        object.__setattr__(self, "eta", tuple(mp.mpf(c) for c in self.eta))

    def eval_density(self, t, x):
        T = _num(self.horizon)
        arg = T - mp.mpf(t)
        return mp.fsum(
            e * mp.exp(-eigenvalue(n + 1) * arg) * mp.sqrt(2) * mp.sinpi((n + 1) * mp.mpf(x))
            for n, e in enumerate(self.eta)
        )


Signal = Union[ExpSumSignal, SampledSignal, PerModeExpSum]


def _sig_num(v):
    # 36 significant digits: enough to reproduce residuals at report scale,
    # deterministic formatting for byte-identical CLI output
    return mp.nstr(mp.mpf(v), 36)


def signal_to_json(sig: Signal) -> dict:
    horizon = _sig_num(_num(sig.horizon))
    if isinstance(sig, ExpSumSignal):
        return {
            "kind": "expsum",
            "coeffs": [_sig_num(c) for c in sig.coeffs],
            "horizon": horizon,
            "time_reversed": sig.time_reversed,
        }
    if isinstance(sig, SampledSignal):
        return {"kind": "sampled", "values": [_sig_num(v) for v in sig.values],
                "horizon": horizon}
    if isinstance(sig, PerModeExpSum):
        return {"kind": "per-mode", "eta": [_sig_num(e) for e in sig.eta],
                "horizon": horizon}
    raise TypeError("unsupported signal type %r" % type(sig).__name__)


def signal_from_json(obj: dict) -> Signal:
    kind = obj.get("kind")
    horizon = mp.mpf(obj["horizon"])
    if kind == "expsum":
        return ExpSumSignal(tuple(mp.mpf(c) for c in obj["coeffs"]), horizon,
                            bool(obj.get("time_reversed", False)))
    if kind == "sampled":
        return SampledSignal(tuple(mp.mpf(v) for v in obj["values"]), horizon)
    if kind == "per-mode":
        return PerModeExpSum(tuple(mp.mpf(e) for e in obj["eta"]), horizon)
    raise ValueError("unknown signal kind %r" % kind)


def _simpson(values, dt):
    """Composite Simpson on an odd-length uniform sample vector."""
    n = len(values)
    acc = values[0] + values[-1]
    acc += 4 * mp.fsum(values[i] for i in range(1, n - 1, 2))
    acc += 2 * mp.fsum(values[i] for i in range(2, n - 1, 2))
    return acc * dt / 3


# ---------------------------------------------------------------------------
# controls


@dataclass(frozen=True)
class ScalarControl:
    """A control supported on a spatial profile with a time signal.

    l2_norm convention: L2((0,T) x (0,1)) for interval profiles (and for the
    per-mode variant), plain L2(0,T) of the signal for Dirac profiles.
    """

    profile: SpatialProfile
    signal: Signal
    horizon: object
    l2_norm: object

    @classmethod
    def build(cls, profile: SpatialProfile, signal: Signal) -> "ScalarControl":
        return cls(profile, signal, signal.horizon, control_norm(profile, signal))

    def recompute_norm(self):
        return control_norm(self.profile, self.signal)


def control_norm(profile: SpatialProfile, signal: Signal):
    if isinstance(signal, PerModeExpSum):
        if not isinstance(profile, IntervalIndicator):
            raise ValueError("per-mode signals require an interval profile")
        N = len(signal.eta)
        T = _num(signal.horizon)
        G = gramian_matrix(T, profile, N)
        q = mp.fsum(
            signal.eta[m] * signal.eta[n] * G[m, n] for m in range(N) for n in range(N)
        )
        return mp.sqrt(max(q, mp.mpf(0)))
    g = signal.l2_norm()
    if isinstance(profile, IntervalIndicator):
        return g * mp.sqrt(2 * _num(profile.half_width))
    return g


# ---------------------------------------------------------------------------
# moment matrix and Gramians


def moment_matrix(T, N: int):
    """M_jk = (1 - e^{-(j^2+k^2) pi^2 T}) / ((j^2+k^2) pi^2), j,k = 1..N."""
    Tv = _num(T)
    if Tv <= 0:
        raise ValueError("horizon must be positive")
    M = mp.matrix(N, N)
    for j in range(1, N + 1):
        for k in range(j, N + 1):
            lam = (j * j + k * k) * mp.pi ** 2
            val = (1 - mp.exp(-lam * Tv)) / lam
            M[j - 1, k - 1] = val
            M[k - 1, j - 1] = val
    return M


def gramian_matrix(T, where: SpatialProfile, N: int, final_scaled: bool = False):
    """Observation Gramian G_mn = 2 W_mn (1 - e^{-(m^2+n^2) pi^2 T})/((m^2+n^2) pi^2).

    With final_scaled=True the decaying time factor is replaced by its
    final-state-normalized counterpart (e^{+(m^2+n^2) pi^2 T} - 1)/((m^2+n^2) pi^2),
    i.e. D^{-1} G D^{-1} with D = diag(e^{-n^2 pi^2 T}), built directly in
    closed form so no large cancellations occur.
    """
    Tv = _num(T)
    if Tv <= 0:
        raise ValueError("horizon must be positive")
    if N < 1:
        raise ValueError("need at least one mode")
    G = mp.matrix(N, N)
    for m in range(1, N + 1):
        for n in range(m, N + 1):
            W = mode_coupling(where, m, n)
            if W == 0:
                val = mp.mpf(0)
            else:
                lam = (m * m + n * n) * mp.pi ** 2
                if final_scaled:
                    val = 2 * W * mp.expm1(lam * Tv) / lam
                else:
                    val = -2 * W * mp.expm1(-lam * Tv) / lam
            G[m - 1, n - 1] = val
            G[n - 1, m - 1] = val
    return G


def gramian_mass_matrix(T, where: SpatialProfile, N: int):
    """Entrywise unsigned-mass counterpart of the final-scaled Gramian.

    Entry (m, n) is 2 * coupling_mass * (e^{+(m^2+n^2) pi^2 T} - 1)/(...),
    an upper bound on the magnitude of every intermediate term that the
    matching gramian_matrix entry sums; dividing by the entry itself bounds
    the relative roundoff carried into the eigensolve.
    """
    Tv = _num(T)
    if Tv <= 0:
        raise ValueError("horizon must be positive")
    E = mp.matrix(N, N)
    for m in range(1, N + 1):
        for n in range(m, N + 1):
            mass = coupling_mass(where, m, n)
            lam = (m * m + n * n) * mp.pi ** 2
            val = 2 * mass * mp.expm1(lam * Tv) / lam
            E[m - 1, n - 1] = val
            E[n - 1, m - 1] = val
    return E


# ---------------------------------------------------------------------------
# evolution


def evolve_free(state: FourierState, t) -> FourierState:
    """Heat semigroup: mu_n -> mu_n e^{-n^2 pi^2 t}."""
    tv = mp.mpf(t)
    if tv < 0:
        raise ValueError("time must be nonnegative")
    return FourierState(
        tuple(c * mp.exp(-eigenvalue(n + 1) * tv) for n, c in enumerate(state.coeffs)),
        state.warnings,
    )


def _duhamel_expsum(lam, coeffs, T, reversed_time):
    """integral over (0,T) of e^{-lam (T-s)} * sum_k a_k e^{-lam_k s or (T-s)} ds."""
    total = mp.mpf(0)
    for k, a in enumerate(coeffs):
        if a == 0:
            continue
        lam_k = eigenvalue(k + 1)
        if reversed_time:
            total += a * -mp.expm1(-(lam + lam_k) * T) / (lam + lam_k)
        else:
            if lam == lam_k:
                total += a * T * mp.exp(-lam * T)
            else:
                total += a * (mp.exp(-lam_k * T) - mp.exp(-lam * T)) / (lam - lam_k)
    return total


def evolve_forced(state: FourierState, ctrl: ScalarControl, T) -> FourierState:
    """Duhamel solution at time T for u_t - u_xx = (control density).

    mu_n(T) = mu_n e^{-lam_n T} + b_n * integral e^{-lam_n (T-s)} g(s) ds with
    b_n = sqrt(2) * mode_source(profile, n) for scalar signals; per-mode
    signals couple through the full overlap matrix instead.
    """
    Tv = _num(T)
    with mp.extraprec(16):
        if mp.mpf(_num(ctrl.horizon)) != Tv:
            raise HorizonMismatchError(
                "control horizon %s does not match requested time %s"
                % (mp.nstr(_num(ctrl.horizon), 10), mp.nstr(Tv, 10))
            )
    N = state.n_modes
    free = [c * mp.exp(-eigenvalue(n + 1) * Tv) for n, c in enumerate(state.coeffs)]
    warnings = list(state.warnings)
    sig = ctrl.signal

    if isinstance(sig, PerModeExpSum):
        if not isinstance(ctrl.profile, IntervalIndicator):
            raise ValueError("per-mode signals require an interval profile")
        K = len(sig.eta)
        for m in range(1, N + 1):
            acc = mp.mpf(0)
            for n in range(1, K + 1):
                eta = sig.eta[n - 1]
                if eta == 0:
                    continue
                W = mode_coupling(ctrl.profile, m, n)
                if W == 0:
                    continue
                lam = (m * m + n * n) * mp.pi ** 2
                acc += eta * 2 * W * -mp.expm1(-lam * Tv) / lam
            free[m - 1] += acc
        return FourierState(tuple(free), tuple(warnings))

    if isinstance(sig, ExpSumSignal):
        for n in range(1, N + 1):
            b = mp.sqrt(2) * mode_source(ctrl.profile, n)
            if b == 0:
                continue
            free[n - 1] += b * _duhamel_expsum(eigenvalue(n), sig.coeffs, Tv, sig.time_reversed)
        return FourierState(tuple(free), tuple(warnings))

    if isinstance(sig, SampledSignal):
        K = len(sig.values) - 1
        dt = sig.dt
        lam_top = eigenvalue(N)
        if dt > 1 / (10 * lam_top):
            warnings.append(
                "sampled signal under-resolves mode %d: dt=%s exceeds 1/(10*lambda_N)=%s"
                % (N, mp.nstr(dt, 6), mp.nstr(1 / (10 * lam_top), 6))
            )
        for n in range(1, N + 1):
            b = mp.sqrt(2) * mode_source(ctrl.profile, n)
            if b == 0:
                continue
            lam = eigenvalue(n)
            integrand = tuple(
                mp.exp(-lam * (Tv - i * dt)) * sig.values[i] for i in range(K + 1)
            )
            free[n - 1] += b * _simpson(integrand, dt)
        return FourierState(tuple(free), tuple(warnings))

    raise TypeError("unsupported signal type %r" % type(sig).__name__)


def observation_quadratic(state: FourierState, T, where: SpatialProfile):
    """Observed energy: integral over (0,T) of the squared trace on `where`.

    Equals mu^T G mu for the Gramian built by gramian_matrix (same closed
    forms, so agreement with the observability module is exact).
    """
    Tv = _num(T)
    N = state.n_modes
    G = gramian_matrix(Tv, where, N)
    return mp.fsum(
        state.coeffs[m] * state.coeffs[n] * G[m, n]
        for m in range(N)
        for n in range(N)
    )
