"""Permutation search for the quasi-likelihood estimator.

The criterion is ``<Sigma_hat_Y, (Sigma_hat_X^pi)^{-1}>``, minimized over
permutations.  Because ``(A^pi)^{-1} = (A^{-1})^pi``, one inversion up front
turns this into the generic QAP form ``<M^pi, B>`` handled here: exact
enumeration below the factorial guard, best-improvement 2-swap hill climbing
with restarts above it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionTooLarge, NotPositiveDefinite
from .linalg import EIGEN_FLOOR, Matrix, Perm
from .model import qap_objective

__all__ = [
    "SearchOptions",
    "SearchReport",
    "all_swap_deltas",
    "swap_delta",
    "exhaustive_search",
    "local_search",
    "qmle_estimate",
    "profile_loglik",
]

#: largest d for which d! enumeration is allowed (9! = 362880 evaluations).
EXHAUSTIVE_MAX_D = 9

_ENUM_CHUNK = 20160


@dataclass(frozen=True)
class SearchOptions:
    mode: str = "local"  # "exhaustive" | "local"
    restarts: int = 16
    max_sweeps: int = 200
    ridge: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class SearchReport:
    permutation: Perm
    objective: float
    evaluations: int
    restarts_used: int
    converged: bool = True
    condition_number: float | None = None


def swap_delta(n_mat: Matrix, b_mat: Matrix, i: int, j: int) -> float:
    """Change in ``<N, B>`` when rows and columns i, j of symmetric N are
    swapped (equivalently: positions i, j of the permutation behind
    ``N = M^pi`` are transposed).  O(d) per call."""
    if i == j:
        return 0.0
    d = n_mat.shape[0]
    mask = np.ones(d, dtype=bool)
    mask[i] = mask[j] = False
    cross = float(
        ((b_mat[mask, i] - b_mat[mask, j]) * (n_mat[mask, j] - n_mat[mask, i])).sum()
    )
    corner = (b_mat[i, i] - b_mat[j, j]) * (n_mat[j, j] - n_mat[i, i])
    return 2.0 * cross + corner


def all_swap_deltas(n_mat: Matrix, b_mat: Matrix) -> Matrix:
    """All transposition deltas at once: ``out[i, j] = swap_delta(N, B, i, j)``.

    One matrix product instead of d^2 vector scans; the diagonal is zero.
    """
    s = b_mat @ n_mat
    ds = np.diag(s)
    full = s + s.T - ds[:, None] - ds[None, :]
    bd = np.diag(b_mat)
    nd = np.diag(n_mat)
    excl = (bd[:, None] - b_mat) * (n_mat - nd[:, None])
    corner = (bd[:, None] - bd[None, :]) * (nd[None, :] - nd[:, None])
    return 2.0 * (full - excl - excl.T) + corner


def _enumerate_perms(d: int):
    """Yield all permutations of range(d) in lexicographic order as int64
    array chunks."""
    it = itertools.permutations(range(d))
    while True:
        chunk = list(itertools.islice(it, _ENUM_CHUNK))
        if not chunk:
            return
        yield np.asarray(chunk, dtype=np.int64)


def exhaustive_search(m_mat: Matrix, b_mat: Matrix, sense: str) -> SearchReport:
    """Globally optimal permutation for ``<M^pi, B>`` by enumeration.

    Ties are broken toward the lexicographically smallest permutation (the
    enumeration order).  Guarded to ``d <= 9``.

    Raises
    ------
    DimensionTooLarge
        Above the guard; use `local_search`.
    """
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    d = m_mat.shape[0]
    if d > EXHAUSTIVE_MAX_D:
        raise DimensionTooLarge(
            f"d={d} exceeds the exhaustive guard {EXHAUSTIVE_MAX_D}"
        )
    if m_mat.shape != b_mat.shape:
        raise ValueError("dimension mismatch between M and B")
    sign = 1.0 if sense == "max" else -1.0
    best_val = -np.inf
    best_perm: np.ndarray | None = None
    count = 0
    for perms in _enumerate_perms(d):
        count += perms.shape[0]
        # vals[k] = sum_ij B_ij M[p_k(i), p_k(j)]
        vals = np.einsum(
            "kij,ij->k", m_mat[perms[:, :, None], perms[:, None, :]], b_mat
        )
        k = int(np.argmax(sign * vals))
        if sign * vals[k] > sign * best_val or best_perm is None:
            best_val = float(vals[k])
            best_perm = perms[k].copy()
    assert best_perm is not None
    return SearchReport(
        permutation=best_perm,
        objective=qap_objective(m_mat, b_mat, best_perm),
        evaluations=count,
        restarts_used=0,
    )


def _climb(m_mat: Matrix, b_mat: Matrix, sign: float, start: Perm,
           max_sweeps: int) -> tuple[Perm, int, bool]:
    """Best-improvement 2-swap hill climbing from one start.

    Each sweep evaluates every transposition and applies the single best
    strictly improving one; stops at a local optimum or the sweep cap.
    """
    d = start.size
    p = start.copy()
    n_mat = linalg.perm_apply(m_mat, p)
    evals = 0
    pair_count = d * (d - 1) // 2
    upper = np.triu_indices(d, k=1)
    for _ in range(max_sweeps):
        deltas = sign * all_swap_deltas(n_mat, b_mat)
        evals += pair_count
        flat = int(np.argmax(deltas[upper]))
        if deltas[upper][flat] <= 0.0:
            return p, evals, True
        i, j = int(upper[0][flat]), int(upper[1][flat])
        p[i], p[j] = p[j], p[i]
        n_mat[[i, j], :] = n_mat[[j, i], :]
        n_mat[:, [i, j]] = n_mat[:, [j, i]]
    return p, evals, False


def local_search(m_mat: Matrix, b_mat: Matrix, sense: str,
                 opts: SearchOptions | None = None) -> SearchReport:
    """Best-of-restarts 2-swap hill climbing for ``<M^pi, B>``.

    Restart 0 starts from the identity; restart k >= 1 from a permutation
    drawn with the options seed.  Among restarts with exactly equal objective
    the lexicographically smallest permutation wins, so the result does not
    depend on restart execution order.
    """
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    if m_mat.shape != b_mat.shape:
        raise ValueError("dimension mismatch between M and B")
    opts = opts or SearchOptions()
    d = m_mat.shape[0]
    sign = 1.0 if sense == "max" else -1.0
    rng = np.random.default_rng(opts.seed)
    best_perm: np.ndarray | None = None
    best_val = -np.inf
    evals = 0
    all_converged = True
    for restart in range(max(1, opts.restarts)):
        start = (
            linalg.perm_identity(d)
            if restart == 0
            else rng.permutation(d).astype(np.int64)
        )
        p, e, conv = _climb(m_mat, b_mat, sign, start, opts.max_sweeps)
        evals += e
        all_converged &= conv
        val = qap_objective(m_mat, b_mat, p)
        if (
            best_perm is None
            or sign * val > sign * best_val
            or (val == best_val and tuple(p) < tuple(best_perm))
        ):
            best_val, best_perm = val, p
    assert best_perm is not None
    return SearchReport(
        permutation=best_perm,
        objective=best_val,
        evaluations=evals,
        restarts_used=max(1, opts.restarts),
        converged=all_converged,
    )


def qmle_estimate(sigma_x: Matrix, sigma_y: Matrix,
                  opts: SearchOptions | None = None) -> SearchReport:
    """Quasi-likelihood alignment estimate.

    Minimizes ``<Sigma_hat_Y, (Sigma_hat_X^pi)^{-1}>`` over permutations with
    ``M = (Sigma_hat_X + ridge I)^{-1}`` inverted once.

    Raises
    ------
    NotPositiveDefinite
        If ``sigma_x + ridge I`` is not invertible; with sampled data this
        means m < d (rank-deficient sample covariance) and calls for
        ``ridge > 0``.
    """
    opts = opts or SearchOptions()
    a = sigma_x
    if opts.ridge > 0.0:
        a = sigma_x + opts.ridge * np.eye(sigma_x.shape[0])
    w, v = linalg.sym_eigen(a)
    if w[-1] <= 0.0 or w[0] <= EIGEN_FLOOR * w[-1]:
        raise NotPositiveDefinite(
            "sigma_x is numerically singular (rank-deficient sample "
            "covariance when m < d); pass ridge > 0 to regularize"
        )
    m_inv = (v / w) @ v.T
    m_inv = (m_inv + m_inv.T) / 2.0
    cond = float(w[-1] / w[0])
    if opts.mode == "exhaustive":
        rep = exhaustive_search(m_inv, sigma_y, "min")
    elif opts.mode == "local":
        rep = local_search(m_inv, sigma_y, "min", opts)
    else:
        raise ValueError(f"unknown mode {opts.mode!r}")
    return SearchReport(
        permutation=rep.permutation,
        objective=rep.objective,
        evaluations=rep.evaluations,
        restarts_used=rep.restarts_used,
        converged=rep.converged,
        condition_number=cond,
    )


def profile_loglik(sigma_hat_x: Matrix, sigma_hat_y: Matrix, pi: Perm,
                   m: int, n: int) -> float:
    """Profile log-likelihood of an alignment, up to an additive constant:
    ``-logdet(m/(m+n) * Sigma_hat_X + n/(m+n) * Sigma_hat_Y^{pi^{-1}}) - 1``.

    Diagnostic only; the estimators do not optimize it (the log-det
    nonlinearity is what the quasi-likelihood surrogate removes).
    """
    wx = m / (m + n)
    pooled = wx * sigma_hat_x + (1.0 - wx) * linalg.perm_apply(
        sigma_hat_y, linalg.perm_invert(pi)
    )
    sign, logdet = np.linalg.slogdet(pooled)
    if sign <= 0:
        raise NotPositiveDefinite("pooled covariance is not positive definite")
    return -float(logdet) - 1.0
