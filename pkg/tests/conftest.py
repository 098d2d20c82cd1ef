import numpy as np
import pytest


def fd_gradient(f, x, step=1e-5):
    """Central finite-difference gradient of a scalar function of a
    1-D numpy vector."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def fd_hessian(f, x, step=1e-4):
    """Central finite-difference Hessian of a scalar function of a
    1-D numpy vector."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = step
            ej[j] = step
            h[i, j] = (f(x + ei + ej) - f(x + ei - ej)
                       - f(x - ei + ej) + f(x - ei - ej)) / (4 * step * step)
            h[j, i] = h[i, j]
    return h


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
