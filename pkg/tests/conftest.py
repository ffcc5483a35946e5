import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


def random_sym(rng, n, size=None, scale=3.0):
    """Symmetric matrices with entries of order `scale`."""
    shape = (n, n) if size is None else (size, n, n)
    G = rng.uniform(-scale, scale, shape)
    return 0.5 * (G + np.swapaxes(G, -1, -2))
