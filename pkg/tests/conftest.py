import numpy as np
import pytest

from kspm.grid import SpectralBasis, make_grid
from kspm.params import ModelParams


def default_params(**overrides):
    base = dict(r_u=0.1, r_v=0.1, chi=0.5, alpha=0.5, beta=0.5,
                sigma_u=0.2, sigma_v=0.2, gamma=2.0)
    base.update(overrides)
    return ModelParams(**base)


def rough_field(grid, seed=0, low=0.2, high=1.0):
    return np.random.default_rng(seed).uniform(low, high, grid.shape)


def smooth_field(grid, seed=0, offset=1.0, amplitude=0.15):
    """Positive band-limited field; gradients stay O(1) as the mesh refines."""
    rng = np.random.default_rng(seed)
    x, y = grid.cell_centers()
    f = np.full(grid.shape, float(offset))
    for m1, m2 in ((1, 0), (0, 1), (1, 1), (2, 1)):
        f += amplitude * rng.uniform(-1, 1) * np.outer(
            np.cos(np.pi * m1 * x), np.cos(np.pi * m2 * y))
    return f


@pytest.fixture
def grid32():
    return make_grid(32)


@pytest.fixture
def basis32(grid32):
    return SpectralBasis(grid32)
