"""Jacobi eigensolver and full-pivot elimination vs mpmath's own routines.

mp.eigsy and mp.inverse are used as independent oracles only; library code
never calls them (the solver must control its own precision/termination).
"""

import random

import pytest
from mpmath import mp

from heatpoint.errors import SingularMatrixError
from heatpoint.mplinalg import (
    cholesky_spd,
    invert_full_pivot,
    jacobi_eigh,
    residual_inf_norm,
    smallest_eig_spd,
    solve_full_pivot,
)


def _random_symmetric(n, rng, scale=1.0):
    A = mp.matrix(n, n)
    for i in range(n):
        for j in range(i, n):
            v = mp.mpf(rng.uniform(-scale, scale))
            A[i, j] = v
            A[j, i] = v
    return A


def test_jacobi_matches_eigsy():
    mp.prec = 128
    rng = random.Random(7)
    for n in (2, 3, 5, 8):
        A = _random_symmetric(n, rng)
        evals, V = jacobi_eigh(A, 128)
        E_ref, _ = mp.eigsy(A)
        ref = sorted(E_ref)
        for a, b in zip(evals, ref):
            assert abs(a - b) <= 1e-30 * max(1, abs(b))
        # eigen-residual A v = lambda v
        for k in range(n):
            for i in range(n):
                r = mp.fsum(A[i, j] * V[j, k] for j in range(n)) - evals[k] * V[i, k]
                assert abs(r) < 1e-30
        # orthonormal columns
        for k in range(n):
            for l in range(n):
                dot = mp.fsum(V[i, k] * V[i, l] for i in range(n))
                assert abs(dot - (1 if k == l else 0)) < 1e-30


def test_jacobi_graded_relative_accuracy():
    # eigenvalues spanning ~45 orders of magnitude, still accurate relatively:
    # A = D S D with a well-conditioned correlation-like S and wild D
    mp.prec = 192
    n = 4
    d = [mp.mpf(10) ** e for e in (-20, -3, 7, 25)]
    S = mp.matrix(n, n)
    for i in range(n):
        for j in range(n):
            S[i, j] = mp.mpf(1) if i == j else mp.mpf(1) / (3 + abs(i - j))
    A = mp.matrix(n, n)
    for i in range(n):
        for j in range(n):
            A[i, j] = d[i] * S[i, j] * d[j]
    evals, _ = jacobi_eigh(A, 192)
    with mp.workprec(800):
        ref = sorted(mp.eigsy(mp.matrix([[A[i, j] for j in range(n)] for i in range(n)]))[0])
    for a, b in zip(evals, ref):
        assert abs(a - b) <= mp.mpf(10) ** -40 * abs(b)
    assert evals[0] > 0  # positive definite recognized despite grading


def test_jacobi_two_by_two_closed_form():
    mp.prec = 128
    A = mp.matrix([[2, 1], [1, 2]])
    evals, V = jacobi_eigh(A, 128)
    assert abs(evals[0] - 1) < 1e-35
    assert abs(evals[1] - 3) < 1e-35


def test_solve_and_invert_match_mpmath():
    mp.prec = 128
    rng = random.Random(11)
    for n in (2, 4, 6):
        A = _random_symmetric(n, rng, scale=2.0)
        for i in range(n):
            A[i, i] += n  # keep comfortably nonsingular
        b = [mp.mpf(rng.uniform(-1, 1)) for _ in range(n)]
        x, ratio = solve_full_pivot(A, b, 128)
        ref = mp.lu_solve(A, mp.matrix(b))
        for xi, ri in zip(x, ref):
            assert abs(xi - ri) < 1e-30
        assert ratio >= 1
        Ainv, _ = invert_full_pivot(A, 128)
        ref_inv = mp.inverse(A)
        for i in range(n):
            for j in range(n):
                assert abs(Ainv[i, j] - ref_inv[i, j]) < 1e-28
        assert residual_inf_norm(A, Ainv, 128) < 1e-30


def test_singular_matrix_detected():
    mp.prec = 128
    A = mp.matrix([[1, 2], [2, 4]])
    with pytest.raises(SingularMatrixError):
        solve_full_pivot(A, [1, 1], 128)


def test_hilbert_inverse_high_precision():
    # classically ill-conditioned; exact inverse is integer-valued
    mp.prec = 512
    n = 8
    H = mp.matrix(n, n)
    for i in range(n):
        for j in range(n):
            H[i, j] = mp.mpf(1) / (i + j + 1)
    Hinv, ratio = invert_full_pivot(H, 512)
    assert ratio > 1e6  # severe conditioning visible in the pivot range
    assert residual_inf_norm(H, Hinv, 512) < mp.mpf(10) ** -120
    # spot-check the known corner entry of the inverse Hilbert matrix: n^2
    assert abs(Hinv[0, 0] - 64) < 1e-100


def test_cholesky_reconstructs_and_rejects_indefinite():
    mp.prec = 128
    rng = random.Random(3)
    n = 5
    B = _random_symmetric(n, rng)
    A = mp.matrix(n, n)
    for i in range(n):
        for j in range(n):
            A[i, j] = mp.fsum(B[i, k] * B[j, k] for k in range(n))
        A[i, i] += 1
    L = cholesky_spd(A, 128)
    for i in range(n):
        for j in range(n):
            r = mp.fsum(L[i, k] * L[j, k] for k in range(min(i, j) + 1))
            assert abs(r - A[i, j]) < 1e-33
    for j in range(n):
        assert all(L[i, j] == 0 for i in range(j))
    with pytest.raises(SingularMatrixError):
        cholesky_spd(mp.matrix([[1, 2], [2, 1]]), 128)  # eigenvalues 3, -1


def test_smallest_eig_matches_jacobi():
    mp.prec = 160
    rng = random.Random(5)
    for n in (2, 4, 7):
        B = _random_symmetric(n, rng)
        A = mp.matrix(n, n)
        for i in range(n):
            for j in range(n):
                A[i, j] = mp.fsum(B[i, k] * B[j, k] for k in range(n))
            A[i, i] += mp.mpf(1) / 7
        lam, v = smallest_eig_spd(A, 160)
        ref = jacobi_eigh(A, 160)[0][0]
        assert abs(lam - ref) <= 1e-40 * ref
        assert abs(mp.fsum(x * x for x in v) - 1) < 1e-40
        # the vector is refined only until the Rayleigh quotient stabilizes,
        # so its residual is sqrt-of-rtol scale, not full working precision
        for i in range(n):
            r = mp.fsum(A[i, j] * v[j] for j in range(n)) - lam * v[i]
            assert abs(r) < 1e-24


def test_smallest_eig_graded_relative_accuracy():
    # same grading stress as the Jacobi test: relative accuracy must survive
    # a diagonal spanning 45 orders of magnitude
    mp.prec = 192
    n = 4
    d = [mp.mpf(10) ** e for e in (-20, -3, 7, 25)]
    S = mp.matrix(n, n)
    for i in range(n):
        for j in range(n):
            S[i, j] = mp.mpf(1) if i == j else mp.mpf(1) / (3 + abs(i - j))
    A = mp.matrix(n, n)
    for i in range(n):
        for j in range(n):
            A[i, j] = d[i] * S[i, j] * d[j]
    lam, v = smallest_eig_spd(A, 192)
    ref = jacobi_eigh(A, 192)[0][0]
    assert abs(lam - ref) <= mp.mpf(10) ** -40 * ref
    assert lam > 0
