# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stencil kernels.

Numerical core routines for the explicit cell-centered update, written in
pyx-format.  The pure-NumPy module ``kspm._stencils_py`` implements the same
per-cell arithmetic and is used as a fallback when this extension is absent.
"""

import numpy as np




def neumann_laplacian(const double[:, ::1] f, double hx, double hy, double[:, ::1] out):
    """Five-point Laplacian with reflected ghost cells, written to ``out``."""
    cdef Py_ssize_t nx = f.shape[0]
    cdef Py_ssize_t ny = f.shape[1]
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef double inv_hx2 = 1.0 / (hx * hx)
    cdef double inv_hy2 = 1.0 / (hy * hy)
    cdef double c
    for i in range(nx):
        im = i - 1 if i > 0 else 0
        ip = i + 1 if i < nx - 1 else nx - 1
        for j in range(ny):
            jm = j - 1 if j > 0 else 0
            jp = j + 1 if j < ny - 1 else ny - 1
            c = f[i, j]
            out[i, j] = (f[im, j] - 2.0 * c + f[ip, j]) * inv_hx2 \
                + (f[i, jm] - 2.0 * c + f[i, jp]) * inv_hy2
    return np.asarray(out)


def central_gradient(const double[:, ::1] f, double hx, double hy,
                     double[:, ::1] gx, double[:, ::1] gy):
    """Centered first differences with reflected ghost cells."""
    cdef Py_ssize_t nx = f.shape[0]
    cdef Py_ssize_t ny = f.shape[1]
    cdef Py_ssize_t i, j, im, ip, jm, jp
    cdef double inv_2hx = 1.0 / (2.0 * hx)
    cdef double inv_2hy = 1.0 / (2.0 * hy)
    for i in range(nx):
        im = i - 1 if i > 0 else 0
        ip = i + 1 if i < nx - 1 else nx - 1
        for j in range(ny):
            jm = j - 1 if j > 0 else 0
            jp = j + 1 if j < ny - 1 else ny - 1
            gx[i, j] = (f[ip, j] - f[im, j]) * inv_2hx
            gy[i, j] = (f[i, jp] - f[i, jm]) * inv_2hy
    return np.asarray(gx), np.asarray(gy)


def chemo_flux_div(const double[:, ::1] eta, const double[:, ::1] v, double hx, double hy,
                   double[:, ::1] out):
    """Conservative upwind divergence of the drift flux ``eta * grad(v)``.

    Face fluxes use the donor cell selected by the sign of the face-normal
    difference of ``v``; wall faces carry zero flux, so the grid sum of the
    result telescopes to zero.
    """
    cdef Py_ssize_t nx = eta.shape[0]
    cdef Py_ssize_t ny = eta.shape[1]
    cdef Py_ssize_t i, j
    cdef double inv_hx = 1.0 / hx
    cdef double inv_hy = 1.0 / hy
    cdef double g
    cdef double[:, ::1] fx = np.zeros((nx + 1, ny))
    cdef double[:, ::1] fy = np.zeros((nx, ny + 1))
    for i in range(nx - 1):
        for j in range(ny):
            g = (v[i + 1, j] - v[i, j]) * inv_hx
            fx[i + 1, j] = (eta[i, j] if g > 0.0 else eta[i + 1, j]) * g
    for i in range(nx):
        for j in range(ny - 1):
            g = (v[i, j + 1] - v[i, j]) * inv_hy
            fy[i, j + 1] = (eta[i, j] if g > 0.0 else eta[i, j + 1]) * g
    for i in range(nx):
        for j in range(ny):
            out[i, j] = (fx[i + 1, j] - fx[i, j]) * inv_hx \
                + (fy[i, j + 1] - fy[i, j]) * inv_hy
    return np.asarray(out)

