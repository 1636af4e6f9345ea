"""Pure-NumPy stencil kernels (fallback backend).

Each function mirrors the per-cell arithmetic of the compiled module
``kspm._stencils`` expression for expression, so that a given build of
NumPy produces fields that match the compiled backend bit for bit for
the purely additive/multiplicative stencils.  Boundary cells use ghost
values reflected across the wall (ghost = nearest interior cell), which
is the cell-centered realization of a zero-flux wall.
"""

import numpy as np


def neumann_laplacian(f, hx, hy, out):
    """Five-point Laplacian with reflected ghost cells, written to ``out``."""
    inv_hx2 = 1.0 / (hx * hx)
    inv_hy2 = 1.0 / (hy * hy)
    p = np.pad(f, 1, mode="edge")
    c = p[1:-1, 1:-1]
    w = p[:-2, 1:-1]
    e = p[2:, 1:-1]
    s = p[1:-1, :-2]
    n = p[1:-1, 2:]
    np.copyto(out, (w - 2.0 * c + e) * inv_hx2 + (s - 2.0 * c + n) * inv_hy2)
    return out


def central_gradient(f, hx, hy, gx, gy):
    """Centered first differences with reflected ghost cells."""
    inv_2hx = 1.0 / (2.0 * hx)
    inv_2hy = 1.0 / (2.0 * hy)
    p = np.pad(f, 1, mode="edge")
    np.copyto(gx, (p[2:, 1:-1] - p[:-2, 1:-1]) * inv_2hx)
    np.copyto(gy, (p[1:-1, 2:] - p[1:-1, :-2]) * inv_2hy)
    return gx, gy


def chemo_flux_div(eta, v, hx, hy, out):
    """Conservative upwind divergence of the drift flux ``eta * grad(v)``.

    Face fluxes use the donor cell selected by the sign of the face-normal
    difference of ``v``; wall faces carry zero flux, so the grid sum of the
    result telescopes to zero.
    """
    nx, ny = eta.shape
    inv_hx = 1.0 / hx
    inv_hy = 1.0 / hy

    fx = np.zeros((nx + 1, ny))
    g = (v[1:, :] - v[:-1, :]) * inv_hx
    up = np.where(g > 0.0, eta[:-1, :], eta[1:, :])
    fx[1:-1, :] = up * g

    fy = np.zeros((nx, ny + 1))
    g = (v[:, 1:] - v[:, :-1]) * inv_hy
    up = np.where(g > 0.0, eta[:, :-1], eta[:, 1:])
    fy[:, 1:-1] = up * g

    np.copyto(out, (fx[1:, :] - fx[:-1, :]) * inv_hx + (fy[:, 1:] - fy[:, :-1]) * inv_hy)
    return out


def signed_power(x, gamma, out):
    """Odd power ``x |x|^(gamma-1)``, the monotone nonlinearity of the flow."""
    np.multiply(x, np.abs(x) ** (gamma - 1.0), out=out)
    return out
