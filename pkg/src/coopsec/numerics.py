"""Dense complex linear algebra used by the beamformer solvers.

Vectors and matrices are plain ``numpy`` arrays of dtype ``complex128``.
All routines are pure and never modify their inputs.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NotHermitian, NotPositiveDefinite, RankDeficient

# Relative tolerances, shared by every caller.
HERMITIAN_RTOL = 1e-10
RANK_RTOL = 1e-10

ComplexVector = np.ndarray
ComplexMatrix = np.ndarray


def as_vector(x, name: str = "vector") -> ComplexVector:
    """Return ``x`` as a finite 1-D complex128 array."""
    v = np.asarray(x, dtype=np.complex128)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def as_matrix(x, name: str = "matrix") -> ComplexMatrix:
    """Return ``x`` as a finite 2-D complex128 array."""
    m = np.asarray(x, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def normalize_phase(x: ComplexVector) -> ComplexVector:
    """Rotate ``x`` so its first non-negligible entry is real and non-negative."""
    mags = np.abs(x)
    if mags.size == 0 or mags.max() == 0.0:
        return x
    k = int(np.argmax(mags > 1e-12 * mags.max()))
    y = x * (np.conj(x[k]) / mags[k])
    y[k] = mags[k]
    return y


def _hermitian_part(a: ComplexMatrix, name: str) -> ComplexMatrix:
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {a.shape}")
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    if np.linalg.norm(a - a.conj().T) > HERMITIAN_RTOL * scale:
        raise NotHermitian(f"{name} is not Hermitian")
    return 0.5 * (a + a.conj().T)


def largest_generalized_eigpair(A, B) -> tuple[float, ComplexVector]:
    """Largest eigenpair of the Hermitian-definite pencil ``A x = lam B x``.

    ``B = L L^H`` is Cholesky-factored and the standard Hermitian problem
    ``L^-1 A L^-H y = lam y`` is solved; ``x = L^-H y``.  The returned
    eigenvector has unit Euclidean norm and deterministic phase
    (see :func:`normalize_phase`).

    ``lam`` is the maximum of the Rayleigh quotient ``x^H A x / x^H B x``.
    """
    A = _hermitian_part(as_matrix(A, "A"), "A")
    B = _hermitian_part(as_matrix(B, "B"), "B")
    if A.shape != B.shape:
        raise DimensionMismatch(f"pencil shapes differ: {A.shape} vs {B.shape}")
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("B is not positive definite") from exc
    # C = L^-1 A L^-H
    X = solve_triangular(L, A, lower=True)
    C = solve_triangular(L, X.conj().T, lower=True).conj().T
    C = 0.5 * (C + C.conj().T)
    vals, vecs = np.linalg.eigh(C)
    # eigh sorts ascending; ties resolve to the lowest index among the top group
    top = vals[-1]
    y = vecs[:, -1]
    x = solve_triangular(L.conj().T, y, lower=False)
    x = x / np.linalg.norm(x)
    return float(top), normalize_phase(x)


def _singular_values_rank(s: np.ndarray) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > RANK_RTOL * s[0]))


def min_norm_solve(M, b) -> ComplexVector:
    """Minimum-norm solution of the underdetermined system ``M w = b``.

    Equals ``M^H (M M^H)^-1 b`` for a full-row-rank ``M`` (m <= n); evaluated
    through a QR factorization of ``M^H`` rather than the Gram matrix.
    """
    M = as_matrix(M, "M")
    b = as_vector(b, "b")
    m, n = M.shape
    if b.shape[0] != m:
        raise DimensionMismatch(f"M is {m}x{n} but b has length {b.shape[0]}")
    if m > n:
        raise DimensionMismatch(f"system is overdetermined ({m} > {n})")
    if m == 0:
        return np.zeros(n, dtype=np.complex128)
    s = np.linalg.svd(M, compute_uv=False)
    if _singular_values_rank(s) < m:
        raise RankDeficient(f"M has rank {_singular_values_rank(s)} < {m}")
    # M^H = Q R, so M = R^H Q^H and w = Q z with R^H z = b lies in range(M^H)
    q, r = np.linalg.qr(M.conj().T)
    z = solve_triangular(r.conj().T, b, lower=True)
    return q @ z


def null_space_basis(M) -> ComplexMatrix:
    """Orthonormal basis (as columns) of the right null space of ``M``.

    Rank is the number of singular values above ``1e-10`` times the largest.
    A matrix with zero rows yields the identity.
    """
    M = as_matrix(M, "M")
    m, n = M.shape
    if m == 0:
        return np.eye(n, dtype=np.complex128)
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    r = _singular_values_rank(s)
    return vh[r:].conj().T
