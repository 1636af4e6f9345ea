"""Time stepping for the attractant equation.

One step advances ``dv = (r_v lap v + beta eta - alpha v) dt + sigma_v v dW2``
by treating the diffusion implicitly and everything else explicitly:

    (I - dt r_v lap) v' = v + dt (beta eta - alpha v) + sigma_v v dW2

The implicit solve is diagonal in the cosine basis (mode ``k`` divided by
``1 + dt r_v lam_k``), which makes the diffusion half unconditionally stable
and nonexpansive in L2.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError


def step_v(v, eta, p, dW2, dt, basis, mu=None):
    """Advance the attractant field one step of width ``dt``.

    ``dW2`` may be ``None`` when ``sigma_v == 0``.  ``mu`` optionally adds
    ``mu v dt`` to the drift; it is used when the noise is to be read in the
    Stratonovich sense (see :func:`kspm.noise.correction_mu`).
    """
    if p.sigma_v != 0.0 and dW2 is None:
        raise ValueError("sigma_v > 0 requires a noise increment")
    with np.errstate(invalid="ignore", over="ignore"):  # non-finite handled below
        rhs = v + dt * (p.beta * eta - p.alpha * v)
        if p.sigma_v != 0.0:
            rhs += (p.sigma_v * v) * dW2
        if mu is not None:
            rhs += dt * (mu * v)
        c = basis.to_spectral(rhs)
        c /= 1.0 + (dt * p.r_v) * basis.lam
        out = basis.from_spectral(c)
    if not np.isfinite(out).all():
        bad = np.unravel_index(np.argmin(np.isfinite(out)), out.shape)
        raise NumericalError(
            f"attractant step produced a non-finite value at cell {tuple(map(int, bad))}"
        )
    return out


def solve_v_path(v0, eta_path, W2, p, dt, nsteps, basis):
    """Integrate the attractant equation along a given transport density path.

    ``eta_path`` must hold exactly ``nsteps`` fields (left endpoints of the
    steps).  Exactly ``nsteps`` increments are consumed from ``W2`` when a
    sampler is supplied; pass ``None`` for a noise-free run.
    """
    eta_path = np.asarray(eta_path)
    if eta_path.shape[0] != nsteps:
        raise ValueError(f"eta_path has {eta_path.shape[0]} entries, expected nsteps={nsteps}")
    grid = basis.grid
    if eta_path.shape[1:] != grid.shape or np.shape(v0) != grid.shape:
        raise ValueError("path fields do not match the grid shape")
    if p.sigma_v != 0.0 and W2 is None:
        raise ValueError("sigma_v > 0 requires a W2 sampler")

    path = np.empty((nsteps + 1, grid.nx, grid.ny))
    path[0] = v0
    for n in range(nsteps):
        dW = W2.sample_increment(dt) if W2 is not None else None
        try:
            path[n + 1] = step_v(path[n], eta_path[n], p, dW, dt, basis)
        except NumericalError as err:
            raise NumericalError(f"step {n} (t = {n * dt:g}): {err}") from None
    return path
