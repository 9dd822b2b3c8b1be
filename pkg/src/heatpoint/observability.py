"""Observability constants from truncated Gramians.

The raw Gramian G_mn = 2 W_mn (1-e^{-(m^2+n^2)pi^2 T})/((m^2+n^2)pi^2) is
the quadratic form of the observed energy in *initial-state* coordinates.
Its infimum over unit initial data collapses to 0 as the truncation grows
(high modes are invisible after dissipation), so the reported constant is
normalized at the *final* state instead: with D = diag(e^{-n^2 pi^2 T}),

    lambda_min := smallest eigenvalue of G^f = D^{-1} G D^{-1},

whose entries (e^{+(m^2+n^2) pi^2 T} - 1)/((m^2+n^2) pi^2) * 2 W_mn are
built directly in closed form. This is the normalization under which the
square-root scale constant behaves like sqrt(eps) for generic anchors and
collapses along the witness sequences of Liouville-type anchors. The
minimizing initial state D^{-1} w (unit final-state norm) satisfies
observation_quadratic(state) = lambda_min exactly, tying both scales back
to the raw quadratic form.

Eigen-solves use Cholesky-based inverse iteration with a shifted-Cholesky
bracket certificate, which preserves the relative accuracy of small
eigenvalues of graded positive-definite matrices. Accuracy is then limited
by two measurable quantities, never by the raw eigenvalue spread (which
can span thousands of orders of magnitude): the cancellation suffered
while assembling each entry's closed form, and the condition number of the
unit-diagonal rescaling of G^f. A bits ladder escalates until their
product fits inside 2^(bits-64).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from mpmath import mp

from .anchors import (
    AnchorPoint,
    Rational,
    abs_sin_pi_multiple,
    best_approx_distance,
    is_resonant,
)
from .errors import PrecisionExhaustedError, SingularMatrixError
from .mplinalg import smallest_eig_spd
from .spectral import (
    DiracAt,
    FourierState,
    SpatialProfile,
    _num,
    eigenvalue,
    gramian_mass_matrix,
    gramian_matrix,
    overlap_product,
)

__all__ = [
    "Gramian",
    "ObservabilityResult",
    "RateFit",
    "CollapseWitness",
    "build_gramian",
    "obs_constant",
    "single_mode_upper_bound",
    "collapse_witness",
    "rate_fit",
]

DEFAULT_BITS_LADDER = (128, 256, 512)


@dataclass(frozen=True)
class Gramian:
    """Raw observation Gramian with its construction metadata."""

    matrix: object  # mp.matrix, N x N, symmetric PSD
    horizon: object
    where: SpatialProfile
    n_modes: int
    normalization: str = "orthonormal-basis"

    def final_scaled(self):
        """D^{-1} G D^{-1} in closed form (no large cancellations)."""
        return gramian_matrix(self.horizon, self.where, self.n_modes, final_scaled=True)


def build_gramian(T, where: SpatialProfile, N: int) -> Gramian:
    """Assemble the raw Gramian at the current working precision."""
    return Gramian(gramian_matrix(T, where, N), _num(T), where, N)


@dataclass(frozen=True)
class ObservabilityResult:
    lambda_min: object
    sqrt_scale: object
    N_used: int
    converged: bool
    minimizing_vector: FourierState
    precision_bits: int
    doubled_sqrt_scale: object  # value at 2N backing the convergence flag

    def to_json(self) -> dict:
        return {
            "lambda_min": mp.nstr(self.lambda_min, 20),
            "sqrt_scale": mp.nstr(self.sqrt_scale, 20),
            "N_used": self.N_used,
            "converged": self.converged,
            "precision_bits": self.precision_bits,
            "doubled_sqrt_scale": mp.nstr(self.doubled_sqrt_scale, 20),
        }


def _resonant_mode(where: SpatialProfile, N: int) -> Optional[int]:
    """Index of an exactly invisible mode, if any (Dirac at rational anchors)."""
    if isinstance(where, DiracAt) and isinstance(where.point, Rational):
        q = where.point.q
        if q <= N:
            return q
    return None


def _cancellation_factor(Gf, T, where, N):
    """max over entries of (unsigned assembly mass) / sqrt(Gf_mm Gf_nn).

    Each Gramian entry carries absolute roundoff ~ u * mass; dividing by the
    diagonal scale converts that to the graded-perturbation size that the
    relative eigenvalue bounds consume. Near-resonant windows inflate this
    factor like eps^-2 on the resonant diagonal (eps-sized terms cancelling
    to an eps^3 result), which is the true precision cost of the problem.
    """
    E = gramian_mass_matrix(T, where, N)
    root = [mp.sqrt(Gf[i, i]) for i in range(N)]
    worst = mp.mpf(1)
    for i in range(N):
        for j in range(i, N):
            worst = max(worst, E[i, j] / (root[i] * root[j]))
    return worst


def _scaled_condition_bound(Gf, N, bits):
    """Upper bound on kappa of the unit-diagonal rescaling of Gf, or None.

    Jacobi with a relative off-diagonal gate loses accuracy only through
    the condition number of D^{-1/2} Gf D^{-1/2} (D = diag), never through
    the raw eigenvalue spread, so this is the quantity precision must beat.
    A Gershgorin bound settles the diagonally dominant case for free; the
    near-singular case pays for an eigensolve of the rescaled matrix.
    """
    root = [mp.sqrt(Gf[i, i]) for i in range(N)]
    S = mp.zeros(N, N)
    for i in range(N):
        S[i, i] = mp.mpf(1)
        for j in range(i + 1, N):
            s = Gf[i, j] / (root[i] * root[j])
            S[i, j] = s
            S[j, i] = s
    worst = max(
        (mp.fsum(abs(S[i, j]) for j in range(N) if j != i) for i in range(N)),
        default=mp.mpf(0),
    )
    if worst < 1:
        return N / (1 - worst)
    try:
        sigma, _ = smallest_eig_spd(S, bits)
    except (SingularMatrixError, PrecisionExhaustedError):
        return None
    if sigma <= 0:
        return None
    return N / sigma


def _lambda_min_certified(T, where: SpatialProfile, N: int, bits_ladder):
    """(lambda_min, unit eigenvector w of G^f, bits used), certified positive or exactly zero."""
    res = _resonant_mode(where, N)
    if res is not None:
        w = [mp.mpf(0)] * N
        w[res - 1] = mp.mpf(1)
        return mp.mpf(0), w, bits_ladder[0]
    last_err = None
    for bits in bits_ladder:
        budget = mp.mpf(2) ** (bits - 64)
        with mp.workprec(bits):
            Gf = gramian_matrix(T, where, N, final_scaled=True)
            if any(Gf[i, i] <= 0 for i in range(N)):
                # mathematically impossible for a genuine window/point, so a
                # nonpositive diagonal is itself a roundoff symptom
                last_err = "nonpositive Gramian diagonal at %d bits" % bits
                continue
            nu = _cancellation_factor(Gf, T, where, N)
            if N * nu >= budget:
                last_err = (
                    "assembly cancellation factor %s exceeds the certification "
                    "budget 2^%d" % (mp.nstr(nu, 6), bits - 64)
                )
                continue
            kappa = _scaled_condition_bound(Gf, N, bits)
            if kappa is None or N * nu * kappa >= budget:
                last_err = (
                    "scaled condition bound %s with cancellation factor %s "
                    "exceeds the certification budget 2^%d"
                    % (
                        "inf" if kappa is None else mp.nstr(kappa, 6),
                        mp.nstr(nu, 6),
                        bits - 64,
                    )
                )
                continue
            try:
                lam, w = smallest_eig_spd(Gf, bits)
            except (SingularMatrixError, PrecisionExhaustedError) as exc:
                # a Cholesky breakdown or an unbracketable eigenvalue on a
                # certified-PD matrix is a roundoff symptom: escalate
                last_err = "eigensolver at %d bits: %s" % (bits, exc)
                continue
            return +lam, [+wi for wi in w], bits
    raise PrecisionExhaustedError(
        "bits ladder %r exhausted for N=%d: %s" % (tuple(bits_ladder), N, last_err),
        bits=bits_ladder[-1],
    )


def obs_constant(
    T,
    where: SpatialProfile,
    N: int,
    tol=None,
    bits_ladder=DEFAULT_BITS_LADDER,
) -> ObservabilityResult:
    """Truncated observability constant with an N-vs-2N stabilization check.

    The reported value is an upper bound on the untruncated constant
    (infimum over a subspace); `converged` records whether doubling the
    truncation moved sqrt_scale by less than `tol` relatively, which is the
    only optimality evidence available.
    """
    if _num(T) <= 0:
        raise ValueError("horizon must be positive")
    if N < 1:
        raise ValueError("need at least one mode")
    tol = mp.mpf("1e-2") if tol is None else mp.mpf(tol)
    if tol <= 0:
        raise ValueError("tolerance must be positive")

    lam, w, bits = _lambda_min_certified(T, where, N, bits_ladder)
    # the doubled companion never certifies at fewer bits than N did, so
    # skip the rungs that N already exhausted
    tail = tuple(b for b in bits_ladder if b >= bits)
    lam2, _, _ = _lambda_min_certified(T, where, 2 * N, tail or (bits,))
    s = mp.sqrt(max(lam, mp.mpf(0)))
    s2 = mp.sqrt(max(lam2, mp.mpf(0)))
    if s == 0 and s2 == 0:
        converged = True
    elif s2 == 0:
        converged = False
    else:
        converged = abs(s - s2) <= tol * max(s, s2)

    with mp.workprec(bits):
        if lam == 0:
            coeffs = tuple(w)
        else:
            Tv = _num(T)
            coeffs = tuple(w[n] * mp.exp(eigenvalue(n + 1) * Tv) for n in range(N))
    return ObservabilityResult(
        lambda_min=lam,
        sqrt_scale=s,
        N_used=N,
        converged=converged,
        minimizing_vector=FourierState(coeffs),
        precision_bits=bits,
        doubled_sqrt_scale=s2,
    )


def single_mode_upper_bound(T, x0: AnchorPoint, eps, n: int):
    """Quadratic form of the final-scaled Gramian at the single mode n.

    Always an upper bound for lambda_min; for n = 1 and small eps it
    reproduces 2 eps (e^{2 pi^2 T} - 1) sin^2(pi x0) / pi^2 to leading order.
    """
    Tv = _num(T)
    if Tv < 0:
        raise ValueError("horizon must be nonnegative")
    if Tv == 0:
        return mp.mpf(0)
    W = overlap_product(n, n, x0, eps)
    lam = 2 * n * n * mp.pi ** 2
    return 2 * W * mp.expm1(lam * Tv) / lam


# ---------------------------------------------------------------------------
# collapse witnesses (the deep-approximation sequence)


@dataclass(frozen=True)
class WitnessPoint:
    n: int
    eps: object  # theta_n, or the substituted proxy at exact resonances
    bound: object  # sqrt-scale upper bound sqrt(2/3) eps^{1/2 + delta/(T+delta)}
    sin_abs: object
    substituted: bool = False


@dataclass(frozen=True)
class CollapseWitness:
    applicable: bool
    points: tuple
    horizon: object
    delta: object
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "applicable": self.applicable,
            "T": float(self.horizon),
            "delta": float(self.delta),
            "reason": self.reason,
            "points": [
                {
                    "n": p.n,
                    "eps": mp.nstr(mp.mpf(p.eps), 20),
                    "bound": mp.nstr(mp.mpf(p.bound), 20),
                    "sin_abs": mp.nstr(mp.mpf(p.sin_abs), 20),
                    "substituted": p.substituted,
                }
                for p in self.points
            ],
        }


def collapse_witness(x0: AnchorPoint, T, delta, K: int, N_max: int = 64) -> CollapseWitness:
    """Witness sequence for the collapse regime T < T0.

    Collects up to K mode indices n <= N_max with |sin(n pi x0)| below
    e^{-n^2 pi^2 (T + delta)} and pairs each eps_k = theta_{n_k} with the
    sqrt-scale bound sqrt(2/3) * eps_k^{1/2 + delta/(T+delta)}. Exact
    resonances (theta = 0) cannot serve as interval half-widths; they are
    substituted by the qualification threshold e^{-n^2 pi^2 (T+delta)}/n
    and flagged, which keeps the bound valid (the resonant single-mode
    energy scales like eps^3, below any eps^{1+2 delta/(T+delta)}).

    Returns an inapplicable result (not an error) when no mode qualifies:
    that is the expected outcome in the T >= T0 regime.
    """
    Tv = _num(T)
    dv = _num(delta)
    if Tv <= 0 or dv <= 0:
        raise ValueError("horizon and delta must be positive")
    if K < 1:
        raise ValueError("need at least one witness")
    exponent = mp.mpf(1) / 2 + dv / (Tv + dv)
    points = []
    for n in range(1, N_max + 1):
        if len(points) == K:
            break
        threshold = mp.exp(-(n * n) * mp.pi ** 2 * (Tv + dv))
        if is_resonant(x0, n):
            eps = threshold / n
            points.append(
                WitnessPoint(n, eps, mp.sqrt(mp.mpf(2) / 3) * eps ** exponent,
                             mp.mpf(0), substituted=True)
            )
            continue
        s = abs_sin_pi_multiple(x0, n)
        if s == 0 or s > threshold:
            continue
        eps = best_approx_distance(x0, n)
        points.append(
            WitnessPoint(n, eps, mp.sqrt(mp.mpf(2) / 3) * eps ** exponent, s)
        )
    if not points:
        return CollapseWitness(
            False,
            (),
            Tv,
            dv,
            reason="no mode below the collapse threshold up to N_max=%d "
            "(T >= T0 regime or N_max too small)" % N_max,
        )
    return CollapseWitness(True, tuple(points), Tv, dv)


# ---------------------------------------------------------------------------
# rate fitting


@dataclass(frozen=True)
class RateFit:
    slope: object
    intercept: object
    residual: object  # root-mean-square residual of the log-log fit
    n_points: int
    points: tuple

    def to_json(self) -> dict:
        return {
            "slope": float(self.slope),
            "intercept": float(self.intercept),
            "residual": float(self.residual),
            "n_points": self.n_points,
        }


def rate_fit(sweep) -> RateFit:
    """Least squares of log(constant) against log(eps) over a sweep.

    sweep: iterable of (eps, value) pairs, all strictly positive, >= 4 of
    them. The residual is the RMS misfit in log space.
    """
    pts = [(_num(e), _num(v)) for e, v in sweep]
    if len(pts) < 4:
        raise ValueError("need at least 4 points to fit a rate")
    if any(e <= 0 or v <= 0 for e, v in pts):
        raise ValueError("rate fit requires strictly positive data")
    xs = [mp.log(e) for e, _ in pts]
    ys = [mp.log(v) for _, v in pts]
    n = len(pts)
    xbar = mp.fsum(xs) / n
    ybar = mp.fsum(ys) / n
    sxx = mp.fsum((x - xbar) ** 2 for x in xs)
    if sxx == 0:
        raise ValueError("eps values must not all coincide")
    sxy = mp.fsum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    rss = mp.fsum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys))
    return RateFit(slope, intercept, mp.sqrt(rss / n), n, tuple(pts))
