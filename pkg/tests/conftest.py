"""Shared generators for the property suites."""

import numpy as np
import pytest


def random_m_matrix(rng: np.random.Generator, K: int) -> np.ndarray:
    """Nonsingular M-matrix R = sI - N with nonnegative column sums e'R >= 0.

    Since rho(N) <= max column sum, choosing s strictly above the largest
    column sum guarantees both nonsingularity and the column-sum condition.
    """
    N = rng.uniform(0.0, 1.0, size=(K, K))
    s = float(N.sum(axis=0).max()) + rng.uniform(0.05, 1.0)
    return s * np.eye(K) - N


def random_probability_vector(rng: np.random.Generator, K: int) -> np.ndarray:
    return rng.dirichlet(np.ones(K))


def random_spd(rng: np.random.Generator, K: int, ridge: float = 1e-3) -> np.ndarray:
    A = rng.standard_normal((K, K))
    return A @ A.T + ridge * np.eye(K)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
