import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_pd(d: int, rng: np.random.Generator, jitter: float = 0.1):
    """Well-conditioned random PD matrix, d x d."""
    b = rng.standard_normal((d, d))
    return b @ b.T / d + jitter * np.eye(d)
