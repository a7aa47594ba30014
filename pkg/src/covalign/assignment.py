"""Exact linear assignment by shortest augmenting paths.

`lap_max` maximizes ``sum_i M[i, pi(i)]`` exactly in O(d^3) and resolves ties
canonically: among all maximizing permutations it returns the one whose map
``[pi(0), pi(1), ...]`` is lexicographically smallest.  Canonical ties matter
because the solver sits inside seeded experiments; "any optimal answer" would
make reruns diverge on degenerate inputs (uniform couplings, duplicated rows).

The tie rule is enforced in a second phase on the tight graph of the optimal
dual potentials: every maximizing permutation is a perfect matching of tight
edges, so a greedy row-by-row descent with augmenting-path feasibility checks
finds the lexicographic minimum among them.  When the optimum is unique the
tight graph has a single perfect matching and the phase is a cheap no-op.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteMatrix
from .linalg import Perm

__all__ = ["AssignmentResult", "lap_max"]


@dataclass(frozen=True)
class AssignmentResult:
    """Optimal permutation with its score and the dual certificate:
    ``row_dual[i] + col_dual[j] >= M[i, j]`` everywhere, with equality on
    every matched pair, and the duals sum to ``value``."""

    permutation: Perm
    value: float
    row_dual: np.ndarray
    col_dual: np.ndarray


def _solve_min(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shortest-augmenting-path minimum assignment.

    Returns (col_of_row, u, v) where u, v are feasible dual potentials
    (cost[i, j] - u[i] - v[j] >= 0 up to roundoff, equality on matched
    edges).  Scan order is ascending in column index, so all internal ties
    resolve deterministically.
    """
    d = cost.shape[0]
    # 1-indexed columns with virtual column 0 holding the row being inserted
    u = np.zeros(d + 1)
    v = np.zeros(d + 1)
    row_of = np.zeros(d + 1, dtype=np.int64)  # 0 = free
    way = np.zeros(d + 1, dtype=np.int64)
    for i in range(1, d + 1):
        row_of[0] = i
        j0 = 0
        minv = np.full(d, np.inf)
        used = np.zeros(d + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of[j0]
            cur = cost[i0 - 1, :] - u[i0] - v[1:]
            unused = ~used[1:]
            better = unused & (cur < minv)
            minv[better] = cur[better]
            way[1:][better] = j0
            masked = np.where(unused, minv, np.inf)
            jrel = int(np.argmin(masked))
            delta = masked[jrel]
            u[row_of[used]] += delta
            v[used] -= delta
            minv[unused] -= delta
            j0 = jrel + 1
            if row_of[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            row_of[j0] = row_of[j1]
            j0 = j1
    col_of = np.empty(d, dtype=np.int64)
    col_of[row_of[1:] - 1] = np.arange(d, dtype=np.int64)
    return col_of, u[1:], v[1:]


def _augment(root: int, tight: np.ndarray, owner: np.ndarray,
             match: np.ndarray, banned: np.ndarray) -> bool:
    """Breadth-first augmenting path for the displaced row ``root`` inside
    the tight graph, avoiding banned columns.  Mutates the matching only on
    success."""
    visited = banned.copy()
    pred = np.full(tight.shape[0], -1, dtype=np.int64)
    queue = [root]
    head = 0
    while head < len(queue):
        r = queue[head]
        head += 1
        for j in np.nonzero(tight[r] & ~visited)[0]:
            visited[j] = True
            pred[j] = r
            if owner[j] < 0:
                jj = int(j)
                while True:
                    rr = int(pred[jj])
                    nxt = int(match[rr])
                    match[rr] = jj
                    owner[jj] = rr
                    if rr == root:
                        return True
                    jj = nxt
            queue.append(int(owner[j]))
    return False


def _lex_canonicalize(tight: np.ndarray, match: np.ndarray) -> np.ndarray:
    d = tight.shape[0]
    owner = np.empty(d, dtype=np.int64)
    owner[match] = np.arange(d, dtype=np.int64)
    fixed = np.zeros(d, dtype=bool)
    for i in range(d):
        for j in np.nonzero(tight[i] & ~fixed)[0]:
            if j >= match[i]:
                break
            r0 = int(owner[j])
            old = int(match[i])
            owner[j] = i
            match[i] = j
            owner[old] = -1
            match[r0] = -1
            banned = fixed.copy()
            banned[j] = True
            if _augment(r0, tight, owner, match, banned):
                break
            owner[j] = r0
            match[r0] = j
            owner[old] = i
            match[i] = old
        fixed[match[i]] = True
    return match


def lap_max(m: np.ndarray) -> AssignmentResult:
    """Solve ``max_pi sum_i M[i, pi(i)]`` exactly.

    Parameters
    ----------
    m : ndarray, shape (d, d)
        Square score matrix with finite entries (need not be symmetric).

    Returns
    -------
    AssignmentResult
        Optimal permutation (lexicographically smallest map among
        maximizers) and its score.

    Raises
    ------
    NonFiniteMatrix
        If any entry is NaN or infinite.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError(f"expected a nonempty square matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteMatrix("assignment scores must be finite")
    d = m.shape[0]
    cost = -m
    match, u, v = _solve_min(cost)
    # ties live on dual-tight edges; the tolerance covers the roundoff the
    # potential updates can accumulate, and matched edges are kept
    # unconditionally so the tight graph always admits a perfect matching
    tol = 256.0 * np.finfo(np.float64).eps * d * max(1.0, float(np.abs(m).max()))
    tight = (cost - u[:, None] - v[None, :]) <= tol
    tight[np.arange(d), match] = True
    if np.count_nonzero(tight) > d:
        match = _lex_canonicalize(tight, match)
    value = float(m[np.arange(d), match].sum())
    return AssignmentResult(
        permutation=match, value=value, row_dual=-u, col_dual=-v
    )
