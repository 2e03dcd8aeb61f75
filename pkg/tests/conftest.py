import numpy as np
import pytest

from diffsched import synthetic_circulant_model


@pytest.fixture(scope="session")
def benchmark_model():
    """d=50 circulant target with a constant mean (the standard test target)."""
    dense, model = synthetic_circulant_model(50, 0.1, 0.05)
    return dense, model


def random_monotone_alpha_bar(rng: np.random.Generator, S: int, eps0=1e-4, epsS=4e-5):
    """A valid random schedule vector: sorted uniforms with pinned endpoints."""
    interior = np.sort(rng.uniform(epsS, 1.0 - eps0, S - 1))[::-1] if S > 1 else np.empty(0)
    return np.concatenate([[1.0 - eps0], interior, [epsS]])
