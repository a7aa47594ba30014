"""Instance generators: structured covariances, random priors, and full
problem assembly.

Three covariance families:

- ``robinson(d, gamma)``: banded decay ``(1 + |i-j|)^{-gamma}``, the
  seriation-friendly structure.
- ``wishart(d, rng)``: sum of d standard-normal outer products, optionally
  normalized by operator norm or trace.
- ``hard_instance(...)``: the information-theoretic worst-case prior
  ``(I + eta S)/2`` with a symmetric sign matrix S of controlled operator
  norm and a calibrated contrast eta; these instances have operator norm
  at most 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import FileFormatError, RejectionBudgetExceeded
from .linalg import Matrix
from .model import EXACT, AlignmentInstance, sample_covariance, sample_gaussian

__all__ = [
    "InstanceSpec",
    "robinson",
    "wishart",
    "sign_matrix",
    "rademacher_matrix",
    "hard_instance",
    "make_instance",
]

#: rejection-sampling draw budget for the sign matrix.
REJECTION_BUDGET = 1000


@dataclass(frozen=True)
class InstanceSpec:
    """Everything needed to regenerate one alignment problem bit-for-bit."""

    kind: str  # "robinson" | "wishart" | "hard" | "custom-file"
    d: int
    gamma: float = 1.0
    m: int | str = EXACT
    n: int | str = EXACT
    normalize: str = "none"  # "none" | "opnorm" | "trace"
    c1: float = 3.0
    c5: float = 0.5
    seed: int = 0
    path: str | None = None  # custom-file only

    def validate(self) -> None:
        if self.kind not in ("robinson", "wishart", "hard", "custom-file"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.kind == "robinson" and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not (self.c1 > 0 and self.c5 > 0):
            raise ValueError("c1 and c5 must be positive")
        for name, size in (("m", self.m), ("n", self.n)):
            if size != EXACT and (not isinstance(size, int) or size < 1):
                raise ValueError(f"{name} must be a positive int or EXACT")
        if self.kind == "custom-file" and not self.path:
            raise ValueError("custom-file requires a path")


def robinson(d: int, gamma: float) -> Matrix:
    """Banded covariance ``Sigma_ij = (1 + |i - j|)^{-gamma}``."""
    if d < 1 or not gamma > 0:
        raise ValueError("need d >= 1 and gamma > 0")
    idx = np.arange(d)
    return (1.0 + np.abs(idx[:, None] - idx[None, :])) ** (-gamma)


def wishart(d: int, rng: np.random.Generator, normalize: str = "none") -> Matrix:
    """Sum of d outer products of iid standard normal vectors.

    ``normalize``: "none" leaves the raw draw (entries scale like d),
    "opnorm" divides by the largest eigenvalue, "trace" by the trace.
    """
    g = rng.standard_normal((d, d))
    out = g @ g.T
    out = (out + out.T) / 2.0
    if normalize == "none":
        return out
    if normalize == "opnorm":
        return out / linalg.sym_eigen(out)[0][-1]
    if normalize == "trace":
        return out / float(np.trace(out))
    raise ValueError(f"unknown normalize {normalize!r}")


def sign_matrix(d: int, rng: np.random.Generator) -> Matrix:
    """One symmetric matrix with iid +-1 upper triangle and diagonal (the
    diagonal is random too, not fixed), no operator-norm screening."""
    signs = np.where(rng.random((d, d)) < 0.5, -1.0, 1.0)
    return np.triu(signs) + np.triu(signs, k=1).T


def rademacher_matrix(d: int, c1: float, rng: np.random.Generator) -> Matrix:
    """Symmetric +-1 matrix rejection sampled until the operator norm is at
    most ``c1 * sqrt(d)``.

    Raises
    ------
    RejectionBudgetExceeded
        After 1000 rejected draws (c1 too small for this d).
    """
    bound = c1 * np.sqrt(d)
    for _ in range(REJECTION_BUDGET):
        s = sign_matrix(d, rng)
        if np.abs(linalg.sym_eigen(s)[0]).max() <= bound:
            return s
    raise RejectionBudgetExceeded(
        f"no sign matrix with operator norm <= {c1}*sqrt(d) in "
        f"{REJECTION_BUDGET} draws"
    )


def _eta(d: int, m: int, n: int, c5: float, c1: float) -> float:
    raw = c5 * max(
        np.sqrt(np.log(d) / (n * d)),
        (np.log(d) / (m * n * d)) ** 0.25,
    )
    # clip into the open interval (0, 1/(2 c1 sqrt(d)))
    upper = 1.0 / (2.0 * c1 * np.sqrt(d))
    return min(raw, np.nextafter(upper, 0.0))


def hard_instance(d: int, m: int, n: int, c1: float = 3.0, c5: float = 0.5,
                  rng: np.random.Generator | None = None) -> Matrix:
    """Worst-case-prior covariance ``(I + eta S)/2``.

    The contrast ``eta = c5 * max(sqrt(log d/(nd)), (log d/(mnd))^{1/4})``
    sits below ``1/(2 c1 sqrt(d))``, which with the operator-norm bound on S
    guarantees ``||Sigma||_op <= 1``.
    """
    if d < 2 or m < 1 or n < 1:
        raise ValueError("need d >= 2 and m, n >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    s = rademacher_matrix(d, c1, rng)
    eta = _eta(d, m, n, c5, c1)
    return (np.eye(d) + eta * s) / 2.0


def _load_matrix_file(path: str) -> Matrix:
    # deferred import: io depends on linalg only, but keep module graphs flat
    from .io import read_matrix_csv

    try:
        return read_matrix_csv(path)
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc


def make_instance(spec: InstanceSpec) -> AlignmentInstance:
    """Generate the full problem for a spec, deterministically.

    Draw order is fixed (covariance, then pi_star by Fisher-Yates, then X
    data, then Y data) so that records keyed by the spec never shift when
    unrelated options change.
    """
    spec.validate()
    rng = np.random.default_rng(np.uint64(spec.seed))
    if spec.kind == "robinson":
        sigma = robinson(spec.d, spec.gamma)
    elif spec.kind == "wishart":
        sigma = wishart(spec.d, rng, spec.normalize)
    elif spec.kind == "hard":
        m_eff = spec.m if spec.m != EXACT else 10**6
        n_eff = spec.n if spec.n != EXACT else 10**6
        sigma = hard_instance(spec.d, m_eff, n_eff, spec.c1, spec.c5, rng)
    else:
        sigma = _load_matrix_file(spec.path)
        if sigma.shape[0] != spec.d:
            raise FileFormatError(
                f"matrix in {spec.path} is {sigma.shape[0]}x{sigma.shape[0]}, "
                f"spec says d={spec.d}"
            )
    pi_star = rng.permutation(spec.d).astype(np.int64)
    sigma_y_pop = linalg.perm_apply(sigma, pi_star)
    x_data = y_data = None
    if spec.m == EXACT:
        sigma_hat_x = sigma
    else:
        x_data = sample_gaussian(sigma, spec.m, rng)
        sigma_hat_x = sample_covariance(x_data)
    if spec.n == EXACT:
        sigma_hat_y = sigma_y_pop
    else:
        y_data = sample_gaussian(sigma_y_pop, spec.n, rng)
        sigma_hat_y = sample_covariance(y_data)
    return AlignmentInstance(
        sigma=sigma,
        pi_star=pi_star,
        m=spec.m,
        n=spec.n,
        sigma_hat_x=sigma_hat_x,
        sigma_hat_y=sigma_hat_y,
        x_data=x_data,
        y_data=y_data,
        seed=spec.seed,
    )
