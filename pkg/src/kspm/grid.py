"""Cell-centered grid and cosine spectral basis on the unit square.

The domain is [0, 1] x [0, 1] discretized into ``nx * ny`` cells with
centers ``x_i = (i + 1/2) hx``, ``y_j = (j + 1/2) hy``.  A field is a
C-contiguous float64 array of shape ``(nx, ny)`` holding cell values,
so ``f[i, j]`` sits at ``(x_i, y_j)`` and row-major flattening runs the
y index fastest.

Zero-flux walls pair naturally with the half-sample cosine family
``psi_(m1,m2)(x, y) = n_m1 n_m2 cos(pi m1 x) cos(pi m2 y)`` (``n_0 = 1``,
``n_m = sqrt(2)`` otherwise), which is orthonormal both in L2 of the
square and, sampled at cell centers, in the discrete inner product
``<f, g> = sum f g hx hy``.  Spectral coefficients here always use that
discrete normalization, so Parseval holds exactly:
``sum(f**2) hx hy == sum(c**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

from . import kernels

PI_SQUARED = math.pi * math.pi


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on the unit square.

    Attributes
    ----------
    nx, ny : int
        Number of cells along each axis (at least 4).
    hx, hy : float
        Cell widths, ``1/nx`` and ``1/ny``.
    """

    nx: int
    ny: int
    hx: float
    hy: float

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def cell_area(self):
        return self.hx * self.hy

    def cell_centers(self):
        """Return the 1-D center coordinates ``(x, y)``."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return x, y

    def mesh(self):
        """Return 2-D coordinate arrays ``(X, Y)`` of shape ``(nx, ny)``."""
        x, y = self.cell_centers()
        return np.meshgrid(x, y, indexing="ij")


def make_grid(nx, ny=None):
    """Build a :class:`Grid` with ``nx * ny`` cells (``ny`` defaults to ``nx``).

    Raises
    ------
    ValueError
        If either extent is not an integer of at least 4.
    """
    if ny is None:
        ny = nx
    for name, n in (("nx", nx), ("ny", ny)):
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise ValueError(f"{name} must be an integer, got {n!r}")
        if n < 4:
            raise ValueError(f"{name} must be at least 4, got {n}")
    return Grid(nx=int(nx), ny=int(ny), hx=1.0 / int(nx), hy=1.0 / int(ny))


def eigenvalue(mode, kind="neumann"):
    """Magnitude of the Laplacian eigenvalue for one basis mode.

    Parameters
    ----------
    mode : tuple of int
        Nonnegative mode indices ``(m1, m2)``.
    kind : str
        ``"neumann"`` (half-sample cosines, eigenvalue
        ``pi^2 (m1^2 + m2^2)``) or ``"periodic"`` (full-period waves,
        eigenvalue ``4 pi^2 (m1^2 + m2^2)``).
    """
    m1, m2 = mode
    if m1 < 0 or m2 < 0:
        raise ValueError(f"mode indices must be nonnegative, got {mode}")
    lam = PI_SQUARED * float(m1 * m1 + m2 * m2)
    if kind == "neumann":
        return lam
    if kind == "periodic":
        return 4.0 * lam
    raise ValueError(f"unknown basis kind {kind!r}")


def _normalization_1d(n):
    # L2([0,1]) normalization of cos(pi m x): 1 for m = 0, sqrt(2) otherwise
    w = np.full(n, math.sqrt(2.0))
    w[0] = 1.0
    return w


class SpectralBasis:
    """Cosine eigenbasis bound to a grid, with forward/inverse transforms.

    Parameters
    ----------
    grid : Grid
    kind : str
        ``"neumann"`` (default) carries the transforms; ``"periodic"`` is
        provided for eigenvalue queries only and rejects transform calls.
    transform : str
        ``"fft"`` uses the fast cosine transform; ``"direct"`` multiplies
        by explicitly tabulated cosine matrices.  The direct route is the
        correctness oracle for the fast one.

    Attributes
    ----------
    lam : ndarray, shape (nx, ny)
        ``lam[m1, m2]`` is the eigenvalue magnitude of mode ``(m1, m2)``.
    """

    def __init__(self, grid, kind="neumann", transform="fft"):
        if kind not in ("neumann", "periodic"):
            raise ValueError(f"unknown basis kind {kind!r}")
        if transform not in ("fft", "direct"):
            raise ValueError(f"unknown transform route {transform!r}")
        self.grid = grid
        self.kind = kind
        self.transform = transform
        m1 = np.arange(grid.nx)[:, None]
        m2 = np.arange(grid.ny)[None, :]
        self.lam = eigenvalue((1, 0), kind) * (m1 * m1 + m2 * m2).astype(np.float64)
        self._scale = math.sqrt(grid.hx * grid.hy)
        self._cx = self._cy = None
        if transform == "direct":
            self._cx = self._dct_matrix(grid.nx, grid.hx)
            self._cy = self._dct_matrix(grid.ny, grid.hy)

    @staticmethod
    def _dct_matrix(n, h):
        # orthonormal DCT-II analysis matrix: C[m, i] = a_m cos(pi m (i+1/2) h)
        centers = (np.arange(n) + 0.5) * h
        modes = np.arange(n)[:, None]
        c = np.cos(math.pi * modes * centers[None, :])
        c *= (_normalization_1d(n) / math.sqrt(n))[:, None]
        return c

    def _require_transformable(self, f):
        if self.kind != "neumann":
            raise ValueError(
                "transforms are implemented for the zero-flux cosine basis only; "
                f"kind {self.kind!r} supports eigenvalue queries"
            )
        f = np.ascontiguousarray(f, dtype=np.float64)
        if f.shape != self.grid.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.grid.shape}")
        return f

    def to_spectral(self, f):
        """Coefficients ``c[m1, m2]`` of ``f`` (discrete Parseval scaling)."""
        f = self._require_transformable(f)
        if self.transform == "fft":
            return dctn(f, type=2, norm="ortho") * self._scale
        return (self._cx @ f @ self._cy.T) * self._scale

    def from_spectral(self, c):
        """Field with coefficient array ``c``; inverse of :meth:`to_spectral`."""
        c = self._require_transformable(c)
        if self.transform == "fft":
            return idctn(c, type=2, norm="ortho") / self._scale
        return (self._cx.T @ c @ self._cy) / self._scale

    def eigenfunction(self, m1, m2):
        """L2-normalized basis function sampled at cell centers."""
        eigenvalue((m1, m2), self.kind)  # validates indices
        if m1 >= self.grid.nx or m2 >= self.grid.ny:
            raise ValueError(
                f"mode ({m1}, {m2}) not resolved on a {self.grid.nx} x {self.grid.ny} grid"
            )
        x, y = self.grid.cell_centers()
        nwx = _normalization_1d(self.grid.nx)[m1]
        nwy = _normalization_1d(self.grid.ny)[m2]
        return np.outer(nwx * np.cos(math.pi * m1 * x), nwy * np.cos(math.pi * m2 * y))


def laplacian(f, grid):
    """Five-point zero-flux Laplacian of a field on ``grid``."""
    _check_shape(f, grid)
    return kernels.laplacian(f, grid.hx, grid.hy)


def gradient(f, grid):
    """Centered gradient ``(df/dx, df/dy)`` of a field on ``grid``.

    Ghost values are reflected across each wall, so constants map to zero
    and the flux through walls implied by the stencil vanishes.
    """
    _check_shape(f, grid)
    return kernels.gradient(f, grid.hx, grid.hy)


def _check_shape(f, grid):
    if np.shape(f) != grid.shape:
        raise ValueError(f"field shape {np.shape(f)} does not match grid {grid.shape}")
