"""Null-control synthesis for the truncated heat system.

Two construction routes. The moment method expands the datum against a
family biorthogonal to the heat exponentials, so each mode is cancelled by
its own term; it needs every coupling coefficient b_n to be nonzero and pays
for small ones with large control norms. HUM instead solves the observation
Gramian and is minimal-norm among per-mode controls in the truncation.

Every constructed control is re-simulated through the Duhamel evolution and
reported with its residual ||u(T)||/||u0||; nothing is trusted on the
strength of algebra alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp

from .anchors import AnchorPoint
from .errors import (
    HeatpointError,
    HorizonMismatchError,
    InvalidIntervalError,
    PointwiseNotControllableError,
    PrecisionExhaustedError,
    ProfileNotControllableError,
    SingularMatrixError,
    TruncationNotControllableError,
)
from .mplinalg import invert_full_pivot, residual_inf_norm, solve_full_pivot
from .spectral import (
    DiracAt,
    ExpSumSignal,
    FourierState,
    IntervalIndicator,
    PerModeExpSum,
    SampledSignal,
    ScalarControl,
    Signal,
    SpatialProfile,
    _num,
    eigenvalue,
    evolve_forced,
    gramian_matrix,
    mode_source,
    moment_matrix,
    overlap_interval,
    profile_to_json,
    signal_to_json,
)

__all__ = [
    "BiorthogonalFamily",
    "biorthogonal_family",
    "fattorini_norm_bound",
    "ControlReport",
    "moment_control_interval",
    "moment_control_point",
    "hum_optimal_control",
    "BlowupRow",
    "blowup_diagnostic",
    "rescale_and_average",
    "simulated_residual",
]

# residual_norm acceptance default: far above the 256-bit noise floor, far
# below any scale the dynamics can produce honestly
DEFAULT_RESIDUAL_TOL = 1e-6


# ---------------------------------------------------------------------------
# biorthogonal family to {e^{-n^2 pi^2 t}} on (0, T)


@dataclass(frozen=True)
class BiorthogonalFamily:
    """Finite-section family psi_j(t) = sum_k coeff[j,k] e^{-k^2 pi^2 t}.

    coeff is the inverse of the exponential Gram matrix M_jk =
    (1 - e^{-(j^2+k^2) pi^2 T}) / ((j^2+k^2) pi^2), so the defining property
    integral psi_j e^{-k^2 pi^2 t} dt = delta_jk holds up to `residual`
    (the largest re-multiplication defect max |coeff M - I|).
    """

    horizon: object
    size: int
    coeff: object  # mp.matrix, row j-1 holds the coefficients of psi_j
    norms: tuple  # ||psi_j||_{L2(0,T)}
    residual: object
    precision_bits: int

    def psi(self, j: int) -> ExpSumSignal:
        """The j-th family member as a forward-time signal (1-based)."""
        if not 1 <= j <= self.size:
            raise ValueError("family index outside 1..%d" % self.size)
        return ExpSumSignal(
            tuple(self.coeff[j - 1, k] for k in range(self.size)), self.horizon
        )

    def to_json(self) -> dict:
        return {
            "horizon": mp.nstr(_num(self.horizon), 20),
            "size": self.size,
            "norms": [mp.nstr(v, 20) for v in self.norms],
            "residual": mp.nstr(self.residual, 20),
            "precision_bits": self.precision_bits,
        }


def _cauchy_condition_estimate(N: int):
    """Condition estimate for the exponential Gram matrix of order N.

    For moderate T the matrix is (1/pi^2) C + exponentially small corrections,
    with C_jk = 1/(j^2 + k^2) a Cauchy matrix whose inverse has a classical
    closed form in exact integer arithmetic. Returns the infinity-norm
    condition estimate ||C|| * ||C^-1||. Reporting only -- the solve path is
    plain full-pivot elimination.
    """
    x = [j * j for j in range(1, N + 1)]
    norm_c = max(sum(Fraction(1, xi + xj) for xj in x) for xi in x)
    norm_inv = Fraction(0)
    for j in range(N):
        row = Fraction(0)
        for i in range(N):
            num = 1
            for k in range(N):
                num *= (x[j] + x[k]) * (x[k] + x[i])
            den = x[j] + x[i]
            for k in range(N):
                if k != j:
                    den *= x[j] - x[k]
                if k != i:
                    den *= x[i] - x[k]
            row += abs(Fraction(num, den))
        norm_inv = max(norm_inv, row)
    kappa = norm_c * norm_inv
    return mp.mpf(kappa.numerator) / mp.mpf(kappa.denominator)


def _as_ladder(bits):
    if isinstance(bits, int):
        return (bits,)
    ladder = tuple(int(b) for b in bits)
    if not ladder:
        raise ValueError("empty precision ladder")
    return ladder


def biorthogonal_family(T, N: int, bits=256, tol=None) -> BiorthogonalFamily:
    """Invert the exponential Gram matrix at the requested precision.

    The acceptance gate is the stored residual max |coeff M - I|: at b working
    bits it must not exceed 10^(-b/8) (or `tol` when given). `bits` may be a
    single precision or an escalation ladder; exhausting the ladder raises
    PrecisionExhaustedError carrying a Cauchy-structure condition estimate.
    """
    if N < 1:
        raise ValueError("need at least one mode")
    if _num(T) <= 0:
        raise ValueError("horizon must be positive")
    ladder = _as_ladder(bits)
    last_err = None
    for b in ladder:
        with mp.workprec(b + 16):
            M = moment_matrix(T, N)
            try:
                coeff, _ = invert_full_pivot(M, b)
            except SingularMatrixError as exc:
                last_err = "%d bits: %s" % (b, exc)
                continue
            defect = residual_inf_norm(coeff, M, b)
            gate = mp.mpf(10) ** (-mp.mpf(b) / 8) if tol is None else mp.mpf(tol)
            if defect > gate:
                last_err = "%d bits: residual %s above tolerance %s" % (
                    b, mp.nstr(defect, 5), mp.nstr(gate, 5))
                continue
            norms = []
            for j in range(N):
                # ||psi_j||^2 = row_j M row_j^T; equals (M^-1)_jj up to defect
                q = mp.fsum(
                    coeff[j, k] * coeff[j, l] * M[k, l]
                    for k in range(N)
                    for l in range(N)
                )
                norms.append(mp.sqrt(max(q, mp.mpf(0))))
            return BiorthogonalFamily(T, N, coeff, tuple(norms), +defect, b)
    raise PrecisionExhaustedError(
        "biorthogonal family did not certify (%s); condition estimate %s"
        % (last_err, mp.nstr(_cauchy_condition_estimate(N), 5)),
        bits=ladder[-1],
    )


def fattorini_norm_bound(n: int):
    """Reference growth bound K n^2 prod(1 + n^2/j^2) / prod'|1 - n^2/j^2|, K=1.

    Both infinite products collapse: prod_{j>=1} (1 + n^2/j^2) =
    sinh(n pi)/(n pi), and removing the vanishing j=n factor from
    sin(pi z)/(pi z) leaves prod_{j != n} |1 - n^2/j^2| = 1/2 for every n.
    Net closed form 2 n sinh(n pi) / pi, an e^{pi n} envelope. Yardstick for
    the norm-growth test only; the constant K is not pinned by theory.
    """
    if n < 1:
        raise ValueError("mode index must be >= 1")
    return 2 * mp.mpf(n) * mp.sinh(n * mp.pi) / mp.pi


# ---------------------------------------------------------------------------
# control reports


@dataclass(frozen=True)
class ControlReport:
    """A constructed control plus the simulation evidence for it.

    residual_norm is ||u(T)|| / ||u0|| obtained by evolve_forced in the
    truncated model (the datum zero-padded to `truncation` modes), computed
    at precision_bits + 64 working bits; recompute_residual reproduces it
    deterministically. eps_half_norm = sqrt(eps) * control norm is only
    meaningful for interval profiles and is None for Dirac controls.
    """

    control: ScalarControl
    residual_norm: object
    eps_half_norm: object
    method: str
    truncation: int
    precision_bits: int
    family_residual: object = None

    def recompute_residual(self, u0: FourierState):
        return simulated_residual(u0, self.control, self.truncation, self.precision_bits)

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "profile": profile_to_json(self.control.profile),
            "signal": signal_to_json(self.control.signal),
            "control_norm": mp.nstr(self.control.l2_norm, 20),
            "residual_norm": mp.nstr(self.residual_norm, 20),
            "eps_half_norm": None if self.eps_half_norm is None
            else mp.nstr(self.eps_half_norm, 20),
            "truncation": self.truncation,
            "precision_bits": self.precision_bits,
            "family_residual": None if self.family_residual is None
            else mp.nstr(self.family_residual, 20),
        }


def simulated_residual(u0: FourierState, ctrl: ScalarControl, truncation: int, bits: int):
    """||u(T)||/||u0|| after applying the control, truncated model.

    The datum is zero-padded to `truncation` modes so spillover onto modes the
    datum does not carry is measured too. Runs 64 guard bits above the solve
    precision: the moment identities cancel terms of Gram-condition size, and
    the guard keeps that cancellation out of the reported digits.
    """
    if truncation < u0.n_modes:
        raise ValueError("truncation smaller than the datum")
    with mp.workprec(bits + 64):
        n0 = u0.norm()
        if n0 == 0:
            return mp.mpf(0)
        pad = (mp.mpf(0),) * (truncation - u0.n_modes)
        padded = FourierState(tuple(u0.coeffs) + pad, u0.warnings)
        final = evolve_forced(padded, ctrl, _num(ctrl.horizon))
        return +(final.norm() / n0)


def _require_horizon(T, family: BiorthogonalFamily):
    with mp.extraprec(16):
        if mp.mpf(_num(T)) != mp.mpf(_num(family.horizon)):
            raise HorizonMismatchError(
                "family built on horizon %s, control requested on %s"
                % (mp.nstr(_num(family.horizon), 10), mp.nstr(_num(T), 10))
            )


def _moment_signal(u0: FourierState, T, family: BiorthogonalFamily, b_coeffs):
    """f(t) = -sum_n (mu_n e^{-lambda_n T} / b_n) psi_n(T - t) as one ExpSum.

    Each psi_n is itself an exponential sum, so the weights fold into a single
    reversed-time coefficient vector over the family's k-range.
    """
    size = family.size
    with mp.workprec(family.precision_bits + 16):
        Tv = mp.mpf(_num(T))
        acc = [mp.mpf(0)] * size
        for idx, mu in enumerate(u0.coeffs):
            if mu == 0:
                continue
            w = -mu * mp.exp(-eigenvalue(idx + 1) * Tv) / b_coeffs[idx]
            for k in range(size):
                acc[k] += w * family.coeff[idx, k]
        return ExpSumSignal(tuple(acc), family.horizon, time_reversed=True)


def _moment_report(u0, T, family, profile, b_coeffs, method) -> ControlReport:
    signal = _moment_signal(u0, T, family, b_coeffs)
    with mp.workprec(family.precision_bits + 16):
        ctrl = ScalarControl.build(profile, signal)
    residual = simulated_residual(u0, ctrl, family.size, family.precision_bits)
    eps_half = None
    if isinstance(profile, IntervalIndicator):
        eps_half = mp.sqrt(_num(profile.half_width)) * ctrl.l2_norm
    return ControlReport(
        ctrl, residual, eps_half, method, family.size,
        family.precision_bits, family.residual,
    )


def moment_control_interval(
    u0: FourierState, T, x0: AnchorPoint, eps_prime, family: BiorthogonalFamily
) -> ControlReport:
    """Separated control f(t) chi_{(x0-eps', x0+eps')} cancelling u0 at T.

    b_n = sqrt(2) * overlap of sin(n pi x) with the window; a vanishing
    overlap on a mode the datum carries makes this profile structurally
    unable to reach that mode.
    """
    _require_horizon(T, family)
    if family.size < u0.n_modes:
        raise ValueError("family smaller than the datum truncation")
    profile = IntervalIndicator(x0, eps_prime)
    b_coeffs = []
    for idx, mu in enumerate(u0.coeffs):
        n = idx + 1
        b = mp.sqrt(2) * overlap_interval(n, x0, eps_prime)
        if b == 0 and mu != 0:
            raise ProfileNotControllableError(
                "window around the anchor has zero overlap with mode %d "
                "carried by the datum" % n,
                mode=n,
            )
        b_coeffs.append(b)
    return _moment_report(u0, T, family, profile, b_coeffs, "moment-interval")


def moment_control_point(
    u0: FourierState, T, x0: AnchorPoint, family: BiorthogonalFamily
) -> ControlReport:
    """Pointwise control f(t) delta_{x0}; b_n = sqrt(2) sin(n pi x0).

    A resonant anchor (sin(n pi x0) = 0 exactly) on a mode the datum carries
    is the classical obstruction: that mode is invisible to the point and
    cannot be steered.
    """
    _require_horizon(T, family)
    if family.size < u0.n_modes:
        raise ValueError("family smaller than the datum truncation")
    profile = DiracAt(x0)
    b_coeffs = []
    for idx, mu in enumerate(u0.coeffs):
        n = idx + 1
        b = mp.sqrt(2) * mode_source(profile, n)
        if b == 0 and mu != 0:
            raise PointwiseNotControllableError(
                "anchor resonates with mode %d carried by the datum" % n,
                mode=n,
            )
        b_coeffs.append(b)
    return _moment_report(u0, T, family, profile, b_coeffs, "moment-point")


# ---------------------------------------------------------------------------
# HUM minimal-norm controls


def hum_optimal_control(
    u0: FourierState, T, where: SpatialProfile, N: int, bits=256
) -> ControlReport:
    """Minimal-norm per-mode control: solve G eta = -(mu_n e^{-lambda_n T}).

    The control density is sum_n eta_n e^{-lambda_n (T-t)} phi_n restricted
    to the profile: a scalar exponential-sum signal for Dirac profiles, a
    non-separated per-mode density for intervals (minimizers of the norm are
    not separated). norm^2 = eta^T G eta by construction. A Gramian that
    stays singular through the precision ladder means no control of this
    form exists at truncation order N.
    """
    if N < 1:
        raise ValueError("need at least one mode")
    if u0.n_modes > N:
        raise ValueError("datum carries modes beyond the truncation")
    ladder = _as_ladder(bits)
    Tv = _num(T)
    eta = None
    last_exc = None
    for b in ladder:
        with mp.workprec(b + 16):
            G = gramian_matrix(Tv, where, N)
            rhs = [
                -u0.coeffs[idx] * mp.exp(-eigenvalue(idx + 1) * mp.mpf(Tv))
                if idx < u0.n_modes
                else mp.mpf(0)
                for idx in range(N)
            ]
            try:
                eta, _ = solve_full_pivot(G, rhs, b)
            except SingularMatrixError as exc:
                last_exc = exc
                continue
            bits_used = b
            break
    if eta is None:
        raise TruncationNotControllableError(
            "observation Gramian singular at %d bits for truncation N=%d: %s"
            % (ladder[-1], N, last_exc)
        )
    with mp.workprec(bits_used + 16):
        if isinstance(where, DiracAt):
            coeffs = tuple(
                eta[idx] * mp.sqrt(2) * mode_source(where, idx + 1)
                for idx in range(N)
            )
            signal: Signal = ExpSumSignal(coeffs, Tv, time_reversed=True)
        else:
            signal = PerModeExpSum(tuple(eta), Tv)
        ctrl = ScalarControl.build(where, signal)
    residual = simulated_residual(u0, ctrl, N, bits_used)
    eps_half = None
    if isinstance(where, IntervalIndicator):
        eps_half = mp.sqrt(_num(where.half_width)) * ctrl.l2_norm
    return ControlReport(ctrl, residual, eps_half, "hum", N, bits_used)


@dataclass(frozen=True)
class BlowupRow:
    """One sweep entry (eps, sqrt(eps) * control norm, residual).

    A failed solve keeps its slot: `error` holds the message and the numeric
    fields are None, so a sweep is never aborted by a single bad window.
    """

    eps: object
    scaled_norm: object
    residual_norm: object
    error: str = None

    def to_json(self) -> dict:
        return {
            "eps": mp.nstr(_num(self.eps), 20),
            "scaled_norm": None if self.scaled_norm is None
            else mp.nstr(self.scaled_norm, 20),
            "residual_norm": None if self.residual_norm is None
            else mp.nstr(self.residual_norm, 20),
            "error": self.error,
        }


def blowup_diagnostic(u0: FourierState, T, x0: AnchorPoint, eps_list,
                      N: int = None, bits=256):
    """HUM controls on shrinking windows around x0, eps^{1/2}-scaled norms.

    The scaled norm stays bounded when pointwise control at x0 is possible in
    time T and diverges when it is not; the table makes the dichotomy
    measurable. Per-eps failures are recorded as rows, never raised.
    """
    eps_list = list(eps_list)
    vals = [_num(e) for e in eps_list]
    if any(v <= 0 for v in vals):
        raise ValueError("eps grid must be positive")
    if any(vals[i + 1] >= vals[i] for i in range(len(vals) - 1)):
        raise ValueError("eps grid must be strictly decreasing")
    if N is None:
        N = u0.n_modes
    rows = []
    for eps in eps_list:
        try:
            where = IntervalIndicator(x0, eps)
            report = hum_optimal_control(u0, T, where, N, bits)
        except HeatpointError as exc:
            rows.append(BlowupRow(eps, None, None, error=str(exc)))
            continue
        rows.append(BlowupRow(eps, report.eps_half_norm, report.residual_norm))
    return rows


# ---------------------------------------------------------------------------
# window averaging (interval control -> scalar pointwise signal)


def rescale_and_average(ctrl: ScalarControl, delta) -> Signal:
    """psi(t) = integral of the control density over its eps-window.

    This is the scalar signal whose Dirac limit the shrinking interval
    controls approach: for separated controls f(t) chi the window mass is
    constant and psi = 2 eps f; per-mode densities integrate each mode
    against the window. The enclosing window (x0 - delta, x0 + delta) must
    stay inside (0,1) and contain the support, i.e. eps <= delta.
    """
    profile = ctrl.profile
    if not isinstance(profile, IntervalIndicator):
        raise ValueError("rescale-and-average needs an interval control")
    x0, eps = profile.center, profile.half_width
    # validates (x0 - delta, x0 + delta) inside (0,1)
    IntervalIndicator(x0, delta)
    epsv = _num(eps)
    if epsv > _num(delta):
        raise InvalidIntervalError(
            "control half-width exceeds the averaging half-width delta"
        )
    sig = ctrl.signal
    if isinstance(sig, ExpSumSignal):
        return ExpSumSignal(
            tuple(2 * epsv * c for c in sig.coeffs), sig.horizon, sig.time_reversed
        )
    if isinstance(sig, SampledSignal):
        return SampledSignal(tuple(2 * epsv * v for v in sig.values), sig.horizon)
    if isinstance(sig, PerModeExpSum):
        coeffs = tuple(
            e * mp.sqrt(2) * overlap_interval(idx + 1, x0, eps)
            for idx, e in enumerate(sig.eta)
        )
        return ExpSumSignal(coeffs, sig.horizon, time_reversed=True)
    raise TypeError("unsupported signal type %r" % type(sig).__name__)
