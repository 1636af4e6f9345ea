"""Stochastic aggregation dynamics with degenerate diffusion on the unit square.

The package simulates the coupled system

    du = (r_u lap(u^[gamma]) - chi div(u grad v) + mu u) dt + sigma_u u dW1
    dv = (r_v lap(v) + beta u - alpha v) dt + sigma_v v dW2

with zero-flux walls, spatially colored Wiener noise, and the odd power
``u^[gamma] = u |u|^(gamma-1)``.  Besides direct time stepping it provides
the solution-operator fixed-point construction (successive substitution of
the transport density), a spectral/stencil norm toolkit, and a Monte Carlo
harness that estimates the a-priori moment functionals of the flow.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    FixedPointDivergenceError,
    KspmError,
    NumericalError,
    SnapshotFormatError,
)
from .grid import Grid, SpectralBasis, eigenvalue, gradient, laplacian, make_grid

__all__ = [
    "__version__",
    "ConfigError",
    "FixedPointDivergenceError",
    "KspmError",
    "NumericalError",
    "SnapshotFormatError",
    "Grid",
    "SpectralBasis",
    "eigenvalue",
    "gradient",
    "laplacian",
    "make_grid",
]
