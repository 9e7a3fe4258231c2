import numpy as np
import pytest

from afcharges.catalog import builtin_specs


def fd_derivative(f, x, h=None):
    """4th-order central differences of ``f`` along each coordinate.

    Returns an array with a trailing derivative axis.  The step scales with
    |x| so large-radius points keep relative accuracy.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        h = max(1e-4, 1e-4 * float(np.max(np.linalg.norm(x, axis=-1))))
    cols = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        cols.append((f(x - 2 * e) - 8 * f(x - e) + 8 * f(x + e) - f(x + 2 * e)) / (12 * h))
    return np.stack(cols, axis=-1)


@pytest.fixture(scope="session")
def catalog():
    return builtin_specs()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
