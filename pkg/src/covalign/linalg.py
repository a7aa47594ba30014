"""Symmetric-matrix and permutation primitives shared by every estimator.

Conventions
-----------
A permutation ``pi`` on ``{0, ..., d-1}`` is stored as an int64 array ``p``
with ``p[i] = pi(i)``.  Composition is ``(pi1 o pi2)(i) = pi1(pi2(i))``.
The matrix of ``pi`` is ``P[i, j] = 1`` iff ``pi(i) = j``, so that relabeling
a covariance acts as ``A^pi = P A P^T`` with ``(A^pi)[i, j] = A[pi(i), pi(j)]``.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .errors import (
    ConvergenceFailure,
    NonFiniteMatrix,
    NotPositiveDefinite,
    NotSymmetric,
)

__all__ = [
    "as_symmetric",
    "inner",
    "frobenius_norm",
    "is_permutation",
    "perm_identity",
    "perm_apply",
    "perm_compose",
    "perm_invert",
    "perm_matrix",
    "cholesky",
    "sym_eigen",
    "sym_inverse",
    "sym_inv_sqrt",
]

#: relative asymmetry above which as_symmetric refuses to average.
ASYM_TOL = 1e-9

#: relative pivot floor below which a Cholesky factorization is rejected.
PIVOT_FLOOR = 1e-12

#: relative eigenvalue floor below which a matrix is treated as singular.
EIGEN_FLOOR = 1e-12

Matrix = NDArray[np.float64]
Perm = NDArray[np.int64]


def as_symmetric(a: np.ndarray, tol: float = ASYM_TOL) -> Matrix:
    """Validate and symmetrize a square matrix.

    Parameters
    ----------
    a : array-like, shape (d, d)
        Square matrix with finite entries.
    tol : float
        Maximum allowed relative asymmetry
        ``||A - A^T||_F / max(1, ||A||_F)``.

    Returns
    -------
    ndarray
        ``(A + A^T) / 2`` as a fresh float64 array.

    Raises
    ------
    NonFiniteMatrix
        If any entry is NaN or infinite.
    NotSymmetric
        If the relative asymmetry exceeds ``tol``.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteMatrix("matrix contains NaN or infinite entries")
    gap = np.linalg.norm(a - a.T)
    if gap > tol * max(1.0, np.linalg.norm(a)):
        raise NotSymmetric(
            f"relative asymmetry {gap / max(1.0, np.linalg.norm(a)):.3e} "
            f"exceeds tolerance {tol:.1e}"
        )
    return (a + a.T) / 2.0


def inner(a: Matrix, b: Matrix) -> float:
    """Frobenius inner product ``<A, B> = trace(A B^T) = sum_ij A_ij B_ij``."""
    return float(np.vdot(a, b))


def frobenius_norm(a: Matrix) -> float:
    """Frobenius norm ``||A||_F``."""
    return float(np.linalg.norm(a))


def is_permutation(p: np.ndarray) -> bool:
    """True iff ``p`` is a bijection of ``{0, ..., len(p)-1}``."""
    p = np.asarray(p)
    if p.ndim != 1 or p.size == 0 or not np.issubdtype(p.dtype, np.integer):
        return False
    seen = np.zeros(p.size, dtype=bool)
    valid = (p >= 0) & (p < p.size)
    if not np.all(valid):
        return False
    seen[p] = True
    return bool(np.all(seen))


def _check_perm(p: np.ndarray) -> Perm:
    p = np.asarray(p, dtype=np.int64)
    if not is_permutation(p):
        raise ValueError("not a valid permutation array")
    return p


def perm_identity(d: int) -> Perm:
    """Identity permutation on ``d`` items."""
    return np.arange(d, dtype=np.int64)


def perm_apply(a: Matrix, p: np.ndarray) -> Matrix:
    """Relabel both axes of a symmetric matrix: ``out[i, j] = A[p[i], p[j]]``.

    Equals ``P A P^T`` for the permutation matrix ``P = perm_matrix(p)``.
    """
    p = _check_perm(p)
    if a.shape != (p.size, p.size):
        raise ValueError(f"matrix shape {a.shape} does not match d={p.size}")
    return a[np.ix_(p, p)]


def perm_compose(p1: np.ndarray, p2: np.ndarray) -> Perm:
    """Composition ``pi1 o pi2``, i.e. ``i -> p1[p2[i]]``."""
    p1, p2 = _check_perm(p1), _check_perm(p2)
    if p1.size != p2.size:
        raise ValueError("size mismatch")
    return p1[p2]


def perm_invert(p: np.ndarray) -> Perm:
    """Inverse permutation: ``out[p[i]] = i``."""
    p = _check_perm(p)
    out = np.empty_like(p)
    out[p] = np.arange(p.size, dtype=np.int64)
    return out


def perm_matrix(p: np.ndarray) -> Matrix:
    """Dense 0/1 matrix ``P`` with ``P[i, p[i]] = 1``."""
    p = _check_perm(p)
    out = np.zeros((p.size, p.size))
    out[np.arange(p.size), p] = 1.0
    return out


def cholesky(a: Matrix, floor: float = PIVOT_FLOOR) -> Matrix:
    """Lower-triangular Cholesky factor ``L`` with ``L L^T = A``.

    Parameters
    ----------
    a : ndarray
        Symmetric positive-definite matrix (see `as_symmetric`).
    floor : float
        Relative pivot floor; pivots ``L[k, k]^2`` at or below
        ``floor * trace(A) / d`` are rejected.

    Raises
    ------
    NotPositiveDefinite
        If the factorization breaks down or any pivot is at or below the
        floor.
    """
    d = a.shape[0]
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    pivot_floor = floor * float(np.trace(a)) / d
    pivots = np.diag(low) ** 2
    if np.any(pivots <= pivot_floor):
        raise NotPositiveDefinite(
            f"smallest pivot {pivots.min():.3e} at or below floor "
            f"{pivot_floor:.3e}"
        )
    return low


def sym_eigen(a: Matrix) -> tuple[NDArray[np.float64], Matrix]:
    """Eigendecomposition of a symmetric matrix.

    Returns
    -------
    (w, v) : tuple
        Eigenvalues ``w`` in ascending order and orthonormal eigenvectors as
        columns of ``v``, with ``v @ diag(w) @ v.T == A`` up to roundoff.

    Raises
    ------
    ConvergenceFailure
        If the underlying iteration does not converge.
    """
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return w, v


def _pd_eigen(a: Matrix, floor: float) -> tuple[NDArray[np.float64], Matrix]:
    w, v = sym_eigen(a)
    if w[-1] <= 0.0 or w[0] <= floor * w[-1]:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {w[0]:.3e} at or below relative floor "
            f"{floor:.1e} * {w[-1]:.3e}"
        )
    return w, v


def sym_inverse(a: Matrix, floor: float = EIGEN_FLOOR) -> Matrix:
    """Inverse of a positive-definite symmetric matrix, computed by
    eigendecomposition so near-singularity is detected explicitly.

    Raises
    ------
    NotPositiveDefinite
        If the smallest eigenvalue is at or below ``floor * max(eigenvalue)``.
    """
    w, v = _pd_eigen(a, floor)
    out = (v / w) @ v.T
    return (out + out.T) / 2.0


def sym_inv_sqrt(a: Matrix, floor: float = EIGEN_FLOOR) -> Matrix:
    """Inverse symmetric square root ``A^{-1/2}`` of a positive-definite
    matrix; same floor semantics as `sym_inverse`."""
    w, v = _pd_eigen(a, floor)
    out = (v / np.sqrt(w)) @ v.T
    return (out + out.T) / 2.0
