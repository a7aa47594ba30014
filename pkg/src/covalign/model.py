"""Model objects: Gaussian sampling, sample covariances, the shared QAP
objective, and the loss metrics used to score estimated alignments.

Data layout is features-by-observations: a dataset with ``count`` draws from
``N(0, Sigma)`` is a ``(d, count)`` array whose columns are the observations.
Sample covariances are ``X X^T / count`` with no mean-centering; the model is
explicitly zero-mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import NotPositiveDefinite
from .linalg import Matrix, Perm

__all__ = [
    "EXACT",
    "AlignmentInstance",
    "sample_gaussian",
    "sample_covariance",
    "qap_objective",
    "frob_loss",
    "nf_loss",
    "hamming_loss",
    "trace_loss",
]

#: sentinel sample size meaning "infinite sample": use the population
#: covariance directly instead of drawing data.
EXACT = "exact"


@dataclass(frozen=True)
class AlignmentInstance:
    """One alignment problem: ground truth plus the observed covariances.

    ``m`` / ``n`` are positive ints, or `EXACT` when the corresponding sample
    covariance is the population one (then the matching dataset is None).
    """

    sigma: Matrix
    pi_star: Perm
    m: int | str
    n: int | str
    sigma_hat_x: Matrix
    sigma_hat_y: Matrix
    x_data: np.ndarray | None = None
    y_data: np.ndarray | None = None
    seed: int = 0

    @property
    def d(self) -> int:
        return self.sigma.shape[0]


def sample_gaussian(sigma: Matrix, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` iid observations from ``N(0, sigma)`` as columns.

    Factorizes ``sigma`` by Cholesky; if that fails, retries once with a
    ``1e-12 * trace/d`` diagonal jitter so positive-semidefinite inputs at
    the numerical margin still sample.

    Raises
    ------
    NotPositiveDefinite
        If factorization fails even after the jitter.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    d = sigma.shape[0]
    if not np.any(sigma):
        return np.zeros((d, count))
    try:
        low = linalg.cholesky(sigma)
    except NotPositiveDefinite:
        jitter = 1e-12 * float(np.trace(sigma)) / d
        low = linalg.cholesky(sigma + jitter * np.eye(d))
    return low @ rng.standard_normal((d, count))


def sample_covariance(data: np.ndarray, center: bool = False) -> Matrix:
    """Sample covariance ``X X^T / count`` of a features-by-observations
    array.  ``center`` subtracts the empirical mean first; it is off by
    default because the model is zero-mean, and exists for real data only.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] < 1:
        raise ValueError("expected a (d, count) array with count >= 1")
    if center:
        data = data - data.mean(axis=1, keepdims=True)
    out = data @ data.T / data.shape[1]
    return (out + out.T) / 2.0


def qap_objective(m_mat: Matrix, b_mat: Matrix, pi: Perm) -> float:
    """Quadratic-assignment objective ``sum_ij B_ij * M[pi(i), pi(j)]``,
    i.e. ``<M^pi, B>``.

    Both estimators are instances of this form: the likelihood criterion
    uses ``M = inv(sigma_hat_x), B = sigma_hat_y`` (minimize) and the
    covariance-matching criterion uses ``M = sigma_hat_x, B = sigma_hat_y``
    (maximize).
    """
    if m_mat.shape != b_mat.shape:
        raise ValueError("dimension mismatch between M and B")
    return linalg.inner(linalg.perm_apply(m_mat, pi), b_mat)


def frob_loss(sigma: Matrix, pi_hat: Perm, pi_star: Perm) -> float:
    """Frobenius pseudo-distance ``||Sigma^{pi_hat} - Sigma^{pi_star}||_F``.

    Zero iff the two relabelings produce the same covariance, which is the
    right notion of error here: permutations that Sigma cannot distinguish
    are statistically indistinguishable.
    """
    delta = linalg.perm_apply(sigma, pi_hat) - linalg.perm_apply(sigma, pi_star)
    return float(np.linalg.norm(delta))


def nf_loss(sigma: Matrix, pi_hat: Perm, pi_star: Perm) -> float:
    """Normalized Frobenius loss
    ``||(Sigma^{pi*})^{-1/2} (Sigma^{pi_hat} - Sigma^{pi*}) (Sigma^{pi*})^{-1/2}||_F``.

    Raises
    ------
    NotPositiveDefinite
        If the ground-truth permuted covariance is singular; the metric is
        undefined there.
    """
    truth = linalg.perm_apply(sigma, pi_star)
    scale = linalg.sym_inv_sqrt(truth)
    delta = linalg.perm_apply(sigma, pi_hat) - truth
    return float(np.linalg.norm(scale @ delta @ scale))


def hamming_loss(pi_hat: Perm, pi_star: Perm) -> int:
    """Number of positions where the two permutations disagree."""
    pi_hat = np.asarray(pi_hat)
    pi_star = np.asarray(pi_star)
    if pi_hat.shape != pi_star.shape:
        raise ValueError("length mismatch")
    return int(np.count_nonzero(pi_hat != pi_star))


def trace_loss(sigma: Matrix, pi_hat: Perm) -> float:
    """Likelihood-curvature diagnostic
    ``<Sigma^{pi_hat^{-1}} - Sigma, Sigma^{-1}>`` against identity truth.

    Nonnegative up to roundoff: the eigenvalues of
    ``Sigma^{-1/2} Sigma^{pi_hat^{-1}} Sigma^{-1/2}`` have product one, so
    their sum is at least d.

    Raises
    ------
    NotPositiveDefinite
        If ``sigma`` is singular.
    """
    inv = linalg.sym_inverse(sigma)
    moved = linalg.perm_apply(sigma, linalg.perm_invert(pi_hat))
    return linalg.inner(moved - sigma, inv)
