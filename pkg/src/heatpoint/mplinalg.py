"""Dense symmetric eigensolver and full-pivot elimination at working precision.

Everything here operates on mpmath matrices under an explicit bit count.
The Jacobi solver is the two-sided cyclic variant: it preserves symmetry
exactly and computes small eigenvalues of graded positive semidefinite
matrices to high relative accuracy, which is what the observability
Gramians need (their diagonals span hundreds of orders of magnitude).
"""

from __future__ import annotations

from mpmath import mp

from .errors import PrecisionExhaustedError, SingularMatrixError

_MAX_SWEEPS = 64


def jacobi_eigh(A, bits: int):
    """Eigendecomposition of a symmetric mpmath matrix by cyclic Jacobi.

    Returns (eigenvalues ascending as a list, V) with the columns of V the
    matching eigenvectors. Rotations stop once every off-diagonal entry
    satisfies |a_pq| <= tol * sqrt(|a_pp * a_qq|) with tol = 10^-(bits/4),
    a relative criterion that keeps tiny eigenvalues meaningful.
    """
    n = A.rows
    if A.cols != n:
        raise ValueError("matrix must be square")
    with mp.workprec(bits + 16):
        a = A.copy()
        # symmetrize exactly so rotation updates stay consistent
        for p in range(n):
            for q in range(p + 1, n):
                s = (a[p, q] + a[q, p]) / 2
                a[p, q] = s
                a[q, p] = s
        v = mp.eye(n)
        tol = mp.mpf(10) ** (-(bits // 4))

        def sweep_needed():
            for p in range(n):
                for q in range(p + 1, n):
                    gate = tol * mp.sqrt(abs(a[p, p] * a[q, q]))
                    if abs(a[p, q]) > gate:
                        return True
            return False

        sweeps = 0
        while sweep_needed():
            sweeps += 1
            if sweeps > _MAX_SWEEPS:
                raise PrecisionExhaustedError(
                    "jacobi sweeps exceeded %d without meeting the off-diagonal gate"
                    % _MAX_SWEEPS,
                    bits=bits,
                )
            for p in range(n):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    gate = tol * mp.sqrt(abs(a[p, p] * a[q, q]))
                    if abs(apq) <= gate:
                        continue
                    theta = (a[q, q] - a[p, p]) / (2 * apq)
                    # smaller root of t^2 + 2*theta*t - 1 = 0, for stability
                    t = mp.sign(theta) / (abs(theta) + mp.sqrt(1 + theta * theta))
                    if theta == 0:
                        t = mp.mpf(1)
                    c = 1 / mp.sqrt(1 + t * t)
                    s = t * c
                    for k in range(n):
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * akq
                        a[k, q] = s * akp + c * akq
                    for k in range(n):
                        apk = a[p, k]
                        aqk = a[q, k]
                        a[p, k] = c * apk - s * aqk
                        a[q, k] = s * apk + c * aqk
                    a[p, q] = mp.mpf(0)
                    a[q, p] = mp.mpf(0)
                    for k in range(n):
                        vkp = v[k, p]
                        vkq = v[k, q]
                        v[k, p] = c * vkp - s * vkq
                        v[k, q] = s * vkp + c * vkq
        order = sorted(range(n), key=lambda i: a[i, i])
        eigs = [a[i, i] for i in order]
        vec = mp.zeros(n, n)
        for j, i in enumerate(order):
            for k in range(n):
                vec[k, j] = v[k, i]
        return eigs, vec


def cholesky_spd(A, bits: int):
    """Lower Cholesky factor of a symmetric positive definite mpmath matrix.

    No pivoting: for graded SPD matrices (diagonal spanning many orders of
    magnitude) the plain algorithm is componentwise backward stable relative
    to sqrt(a_ii a_jj), which is the error class the observability gates
    budget for. Raises SingularMatrixError on a nonpositive pivot, which is
    also how callers probe definiteness of shifted matrices.
    """
    n = A.rows
    if A.cols != n:
        raise ValueError("matrix must be square")
    with mp.workprec(bits + 16):
        rows = [[A[i, j] for j in range(n)] for i in range(n)]
        L = _cholesky_rows(rows)
        out = mp.zeros(n, n)
        for i in range(n):
            for j in range(i + 1):
                out[i, j] = L[i][j]
        return out


def _cholesky_rows(rows):
    """Row-list Cholesky core (ragged lower rows), assumed inside workprec.

    Plain list indexing instead of mpmath matrix access: the O(n^3) inner
    loop dominates the observability sweeps at N = 128.
    """
    n = len(rows)
    L = []
    for j in range(n):
        rj = rows[j]
        Lj = []
        for k in range(j):
            Lk = L[k]
            acc = rj[k]
            for a, b in zip(Lj, Lk):
                acc -= a * b
            Lj.append(acc / Lk[k])
        acc = rj[j]
        for a in Lj:
            acc -= a * a
        if acc <= 0:
            raise SingularMatrixError(
                "nonpositive pivot %s at Cholesky step %d" % (mp.nstr(acc, 5), j),
                pivot_ratio=mp.inf,
            )
        Lj.append(mp.sqrt(acc))
        L.append(Lj)
    return L


def _cholesky_solve(L, z):
    """Solve L L^T y = z given ragged lower rows."""
    n = len(L)
    y = list(z)
    for i in range(n):
        Li = L[i]
        acc = y[i]
        for k in range(i):
            acc -= Li[k] * y[k]
        y[i] = acc / Li[i]
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, n):
            acc -= L[k][i] * y[k]
        y[i] = acc / L[i][i]
    return y


def _shifted_rows(rows, shift):
    out = [list(r) for r in rows]
    for i in range(len(rows)):
        out[i][i] = rows[i][i] - shift
    return out


def _rows_positive_definite(rows, shift):
    """Whether rows - shift*I admits a Cholesky factorization at this precision."""
    try:
        _cholesky_rows(_shifted_rows(rows, shift))
        return True
    except SingularMatrixError:
        return False


def _iterate_smallest(L, z, shift, rtol, max_iters):
    """Inverse iteration on A - shift*I given its Cholesky factor L.

    Returns (Rayleigh quotient of A, iterate) once successive estimates agree
    to rtol relatively, or the last pair at the iteration cap (clustered
    eigenvalues plateau; the caller's brackets still certify the result).
    """
    lam = None
    for _ in range(max_iters):
        y = _cholesky_solve(L, z)
        yy = mp.fsum(v * v for v in y)
        yz = mp.fsum(a * b for a, b in zip(y, z))
        est = shift + yz / yy
        ynorm = mp.sqrt(yy)
        z = [v / ynorm for v in y]
        if lam is not None and abs(est - lam) <= rtol * abs(est):
            return est, z
        lam = est
    return lam, z


def smallest_eig_spd(A, bits: int):
    """(lambda_min, unit eigenvector) of an SPD matrix by inverse iteration.

    Much cheaper than a full Jacobi sweep (one Cholesky factorization plus
    O(n^2) per iteration), which matters for the N=128 Gramians of the
    observability sweeps. A coarse unshifted stage localizes the eigenvalue;
    a second stage shifted to just below it makes the contraction factor
    tiny even when the next eigenvalue is relatively close. Misconvergence
    cannot pass silently: the result is bracket-certified by shifted
    Cholesky tests at lambda*(1 -/+ 2^-24), and an unbracketable estimate
    raises PrecisionExhaustedError.
    """
    n = A.rows
    if A.cols != n:
        raise ValueError("matrix must be square")
    with mp.workprec(bits + 16):
        rows = [[A[i, j] for j in range(n)] for i in range(n)]
        L = _cholesky_rows(rows)
        margin = mp.mpf(2) ** -24
        rtol = mp.mpf(2) ** -(bits + 8)
        diag_min = min(range(n), key=lambda i: rows[i][i])
        starts = [
            [mp.mpf(1) if i == diag_min else mp.mpf(0) for i in range(n)],
            [mp.mpf(1) for _ in range(n)],
        ]
        for z in starts:
            norm = mp.sqrt(mp.fsum(v * v for v in z))
            z = [v / norm for v in z]
            lam, z = _iterate_smallest(L, z, mp.mpf(0), mp.mpf(2) ** -28, 120)
            if lam is None or lam <= 0:
                continue
            # shift to just below the located eigenvalue; back off the margin
            # if the estimate was still too high for positive definiteness
            for k in (20, 14, 8, 2):
                shift = lam * (1 - mp.mpf(2) ** -k)
                try:
                    Ls = _cholesky_rows(_shifted_rows(rows, shift))
                except SingularMatrixError:
                    continue
                refined, z = _iterate_smallest(Ls, z, shift, rtol, 200)
                if refined is not None and refined > 0:
                    lam = refined
                break
            if not _rows_positive_definite(rows, lam * (1 - margin)):
                continue  # converged value sits above lambda_min: bad start
            if _rows_positive_definite(rows, lam * (1 + margin)):
                continue  # still above the smallest eigenvalue
            return +lam, [+v for v in z]
    raise PrecisionExhaustedError(
        "inverse iteration failed to bracket the smallest eigenvalue", bits=bits
    )


def _eliminate(A, rhs, bits):
    """Shared full-pivot elimination core.

    rhs is a matrix whose columns are reduced alongside A. Returns the
    permutation bookkeeping needed to undo column swaps plus the pivot
    magnitude range, raising SingularMatrixError on a roundoff-scale pivot.
    """
    n = A.rows
    with mp.workprec(bits + 16):
        a = A.copy()
        b = rhs.copy()
        col_perm = list(range(n))
        pivots = []
        for k in range(n):
            best = mp.mpf(0)
            bi = bj = k
            for i in range(k, n):
                for j in range(k, n):
                    m = abs(a[i, j])
                    if m > best:
                        best, bi, bj = m, i, j
            if pivots:
                floor = max(pivots) * mp.mpf(2) ** (-(bits - 8))
            else:
                floor = mp.mpf(0)
            if best == 0 or best <= floor:
                ratio = (max(pivots) / best) if (pivots and best > 0) else mp.inf
                raise SingularMatrixError(
                    "pivot %s at elimination step %d is at roundoff scale"
                    % (mp.nstr(best, 5), k),
                    pivot_ratio=ratio,
                )
            pivots.append(best)
            if bi != k:
                for j in range(n):
                    a[k, j], a[bi, j] = a[bi, j], a[k, j]
                for j in range(b.cols):
                    b[k, j], b[bi, j] = b[bi, j], b[k, j]
            if bj != k:
                for i in range(n):
                    a[i, k], a[i, bj] = a[i, bj], a[i, k]
                col_perm[k], col_perm[bj] = col_perm[bj], col_perm[k]
            piv = a[k, k]
            for i in range(k + 1, n):
                f = a[i, k] / piv
                if f == 0:
                    continue
                a[i, k] = mp.mpf(0)
                for j in range(k + 1, n):
                    a[i, j] -= f * a[k, j]
                for j in range(b.cols):
                    b[i, j] -= f * b[k, j]
        # back substitution, still in permuted column order
        x = mp.zeros(n, b.cols)
        for j in range(b.cols):
            for i in range(n - 1, -1, -1):
                acc = b[i, j]
                for k in range(i + 1, n):
                    acc -= a[i, k] * x[k, j]
                x[i, j] = acc / a[i, i]
        out = mp.zeros(n, b.cols)
        for i in range(n):
            for j in range(b.cols):
                out[col_perm[i], j] = x[i, j]
        ratio = max(pivots) / min(pivots)
        return out, ratio


def solve_full_pivot(A, b, bits: int):
    """Solve A x = b by Gaussian elimination with full pivoting.

    b may be a column matrix or a list. Returns (x as list, pivot_ratio).
    """
    n = A.rows
    if not hasattr(b, "rows"):
        col = mp.zeros(n, 1)
        for i, val in enumerate(b):
            col[i, 0] = mp.mpf(val) if not isinstance(val, mp.mpf) else val
        b = col
    x, ratio = _eliminate(A, b, bits)
    return [x[i, 0] for i in range(n)], ratio


def invert_full_pivot(A, bits: int):
    """Matrix inverse via full-pivot elimination. Returns (A_inv, pivot_ratio)."""
    n = A.rows
    x, ratio = _eliminate(A, mp.eye(n), bits)
    return x, ratio


def residual_inf_norm(A, X, bits: int):
    """max_ij |(A X - I)_ij|, evaluated at the given precision."""
    n = A.rows
    with mp.workprec(bits + 16):
        worst = mp.mpf(0)
        for i in range(n):
            for j in range(n):
                acc = mp.mpf(0)
                for k in range(n):
                    acc += A[i, k] * X[k, j]
                if i == j:
                    acc -= 1
                worst = max(worst, abs(acc))
        return worst
