"""Explicit conservative stepping for the density equation.

One step advances

    du = (r_u lap(u^[gamma]) - chi div(eta grad v) + mu u) dt + sigma_u u dW1

with the five-point Laplacian on the odd power ``u^[gamma] = u |u|^(gamma-1)``
and a donor-cell upwind flux for the drift term, both in conservative form:
for ``sigma_u = 0`` and ``mu = 0`` the cell sum is exact up to roundoff.  The
step is explicit, so ``dt`` must respect the stability bound estimated by
:func:`cfl_dt`; stray negative cells (possible under noise or with a foreign
transport density) are clipped to zero and counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalError

_EPS = 1e-300  # keeps the stability quotients finite without perturbing them


def signed_power(x, gamma):
    """Odd power ``x |x|^(gamma-1)`` applied elementwise (monotone in x)."""
    return kernels.signed_power(x, gamma)


def chemo_flux_div(eta, v, grid):
    """Upwind conservative divergence of ``eta grad v`` on ``grid``.

    Face fluxes take ``eta`` from the donor cell selected by the sign of the
    face-normal difference of ``v``; wall faces carry no flux, so the grid
    sum telescopes to zero and the induced transport preserves nonnegativity
    under the advective step bound.
    """
    if np.shape(eta) != grid.shape or np.shape(v) != grid.shape:
        raise ValueError("eta and v must match the grid shape")
    return kernels.chemo_flux_div(eta, v, grid.hx, grid.hy)


def cfl_dt(u, v, p, grid, dt_max=math.inf, safety=0.4):
    """Stable explicit step width for the current state.

    Combines the diffusive bound ``h^2 / (4 r_u gamma max(u)^(gamma-1))``
    with the advective bound ``h / (chi max|grad v|)``, scales by ``safety``,
    and caps the result at ``dt_max``.
    """
    h = min(grid.hx, grid.hy)
    umax = max(float(np.max(u)), 0.0)
    diffusive = h * h / (4.0 * p.r_u * p.gamma * umax ** (p.gamma - 1.0) + _EPS)
    if p.chi != 0.0:
        gx, gy = kernels.gradient(v, grid.hx, grid.hy)
        advective = h / (p.chi * float(np.max(np.hypot(gx, gy))) + _EPS)
    else:
        advective = h / _EPS
    return min(safety * min(diffusive, advective), dt_max)


@dataclass(frozen=True)
class StepDiagnostics:
    """Bookkeeping for one explicit step."""

    dt: float
    clip_count: int
    mass_before: float
    mass_after: float
    max_u: float


@dataclass(frozen=True)
class PathDiagnostics:
    """Aggregated bookkeeping over a solved density path."""

    steps: int
    clip_count: int
    clip_fraction: float
    max_u: float
    mass_initial: float
    mass_final: float


def step_u(u, v, eta, p, mu, dW1, dt, grid):
    """Advance the density one step; returns the new field and diagnostics.

    ``eta`` is the transport density of the drift term (the solution itself
    in the coupled scheme, the current iterate in the fixed-point map).
    ``mu`` is an optional reaction field; ``dW1`` may be ``None`` when
    ``sigma_u == 0``.
    """
    if p.sigma_u != 0.0 and dW1 is None:
        raise ValueError("sigma_u > 0 requires a noise increment")
    area = grid.cell_area
    with np.errstate(invalid="ignore", over="ignore"):  # non-finite handled below
        w = kernels.signed_power(u, p.gamma)
        drift = kernels.laplacian(w, grid.hx, grid.hy)
        drift *= p.r_u
        if p.chi != 0.0:
            drift -= p.chi * kernels.chemo_flux_div(eta, v, grid.hx, grid.hy)
        if mu is not None:
            drift += mu * u
        unew = u + dt * drift
        if p.sigma_u != 0.0:
            unew += (p.sigma_u * u) * dW1
    clip_count = int(np.count_nonzero(unew < 0.0))
    if clip_count:
        np.maximum(unew, 0.0, out=unew)
    if not np.isfinite(unew).all():
        bad = np.unravel_index(np.argmin(np.isfinite(unew)), unew.shape)
        raise NumericalError(
            f"density step produced a non-finite value at cell {tuple(map(int, bad))}"
        )
    return unew, StepDiagnostics(
        dt=dt,
        clip_count=clip_count,
        mass_before=float(np.sum(u)) * area,
        mass_after=float(np.sum(unew)) * area,
        max_u=float(np.max(unew)),
    )


def solve_u_path(u0, v_path, eta_path, W1, p, schedule, grid, mu=None):
    """Integrate the density along given attractant and transport paths.

    Step ``n`` uses the fresh attractant ``v_path[n+1]`` and the transport
    density ``eta_path[n]``; exactly ``schedule.nsteps`` increments are
    consumed from ``W1`` when a sampler is supplied.  Returns the full path
    and aggregated :class:`PathDiagnostics`.
    """
    nsteps, dt = schedule.nsteps, schedule.dt
    v_path = np.asarray(v_path)
    eta_path = np.asarray(eta_path)
    if v_path.shape[0] != nsteps + 1:
        raise ValueError(f"v_path has {v_path.shape[0]} entries, expected nsteps+1={nsteps + 1}")
    if eta_path.shape[0] != nsteps:
        raise ValueError(f"eta_path has {eta_path.shape[0]} entries, expected nsteps={nsteps}")
    if np.shape(u0) != grid.shape:
        raise ValueError("u0 does not match the grid shape")
    if p.sigma_u != 0.0 and W1 is None:
        raise ValueError("sigma_u > 0 requires a W1 sampler")

    path = np.empty((nsteps + 1, grid.nx, grid.ny))
    path[0] = u0
    clip_total = 0
    max_u = float(np.max(u0))
    mass0 = float(np.sum(u0)) * grid.cell_area
    mass = mass0
    for n in range(nsteps):
        dW = W1.sample_increment(dt) if W1 is not None else None
        try:
            path[n + 1], diag = step_u(path[n], v_path[n + 1], eta_path[n], p, mu, dW, dt, grid)
        except NumericalError as err:
            raise NumericalError(f"step {n} (t = {n * dt:g}): {err}") from None
        clip_total += diag.clip_count
        max_u = max(max_u, diag.max_u)
        mass = diag.mass_after
    return path, PathDiagnostics(
        steps=nsteps,
        clip_count=clip_total,
        clip_fraction=clip_total / (nsteps * grid.nx * grid.ny),
        max_u=max_u,
        mass_initial=mass0,
        mass_final=mass,
    )


def barenblatt_field(grid, gamma, mass, t, r_u=1.0, center=(0.5, 0.5)):
    """Closed-form self-similar source solution of ``u_t = r_u lap(u^gamma)``.

    Evaluated at cell centers at time ``t > 0``; the profile carries total
    integral ``mass`` and is supported on a disk around ``center``, so it
    solves the zero-flux problem exactly for as long as the support stays
    inside the unit square.  Serves as the deterministic accuracy oracle for
    the explicit stepper.
    """
    if gamma <= 1:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    if mass <= 0 or t <= 0 or r_u <= 0:
        raise ValueError("mass, t, and r_u must be positive")
    m = float(gamma)
    alpha = 1.0 / m
    two_beta = 1.0 / m  # d = 2: the radial exponent equals alpha
    kk = (m - 1.0) / (4.0 * m * m)
    big_c = (mass * kk * m / ((m - 1.0) * math.pi)) ** ((m - 1.0) / m)
    tau = r_u * t
    xx, yy = grid.mesh()
    r2 = (xx - center[0]) ** 2 + (yy - center[1]) ** 2
    profile = big_c - kk * r2 * tau ** (-two_beta)
    np.maximum(profile, 0.0, out=profile)
    return tau ** (-alpha) * profile ** (1.0 / (m - 1.0))
