"""Solution-operator fixed point by successive substitution.

The map ``T`` sends a transport density path ``eta`` to the solution of the
decoupled system: the attractant is integrated against ``eta``, then the
density is integrated with drift ``chi div(eta grad v)`` against the fresh
attractant.  A fixed point of ``T`` solves the coupled system; iterating
``eta_{n+1} = T(eta_n)`` from the constant-in-time initial density, with one
shared noise realization replayed every iteration, converges pathwise in the
sup-in-time dual norm whenever the horizon keeps the map contractive.

The direct coupled solver advances both equations together with the same
per-step rule, so its trajectory is exactly the fixed point of the discrete
map: with ``chi = 0`` the two routes agree bitwise.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import FixedPointDivergenceError
from .norms import sobolev2_norm
from .ustep import PathDiagnostics, solve_u_path, step_u
from .vstep import solve_v_path, step_v


@dataclass
class PathTrajectory:
    """States of one realization on a common time grid.

    ``u`` and ``v`` have shape ``(len(times), nx, ny)``.  ``noise_record``
    carries the (seed, stream) pairs and spectral parameters needed to
    regenerate the exact increments; ``diagnostics`` aggregates clip
    accounting from the density solve.
    """

    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    noise_record: dict
    diagnostics: PathDiagnostics

    @property
    def horizon(self):
        return float(self.times[-1])


@dataclass
class FixedPointReport:
    """Outcome of the successive-substitution iteration.

    ``distances[i]`` is the sup-in-time dual-norm distance between the
    iterate produced at iteration ``i + 1`` and its predecessor; the run
    converged when the last distance dropped below ``tol``.  Non-convergence
    within the iteration budget is flagged here, not raised.
    """

    converged: bool
    iterations: int
    distances: list[float] = field(default_factory=list)
    tol: float = 0.0

    @property
    def monotone(self):
        """True when the distances decreased at every recorded comparison."""
        return all(b < a for a, b in zip(self.distances, self.distances[1:]))


def _noise_record(w1, w2):
    record = {}
    for name, sampler in (("w1", w1), ("w2", w2)):
        if sampler is not None:
            record[name] = {"spec": asdict(sampler.spec), "stream": sampler.stream}
    return record


def _sup_dual_distance(ua, ub, basis):
    # max over shared instants of the s = -1 multiplier norm of the difference
    worst = 0.0
    for a, b in zip(ua, ub):
        worst = max(worst, sobolev2_norm(a - b, -1.0, basis))
    return worst


def xnorm_distance(a, b, basis):
    """Sup-in-time dual-norm distance between the densities of two trajectories.

    Computes ``max_t |u_a(t) - u_b(t)|`` in the ``s = -1`` multiplier norm,
    the metric in which the fixed-point iteration is contractive.  The two
    trajectories must share their time grid.
    """
    if a.u.shape != b.u.shape or not np.array_equal(a.times, b.times):
        raise ValueError("trajectories must share the same time grid")
    return _sup_dual_distance(a.u, b.u, basis)


def _eta_steps(eta_path, nsteps, grid):
    eta_path = np.asarray(eta_path)
    if eta_path.ndim != 3 or eta_path.shape[1:] != grid.shape:
        raise ValueError(f"eta_path must be (n, {grid.nx}, {grid.ny}), got {eta_path.shape}")
    if eta_path.shape[0] == nsteps + 1:
        return eta_path[:nsteps]
    if eta_path.shape[0] == nsteps:
        return eta_path
    raise ValueError(
        f"eta_path has {eta_path.shape[0]} entries, expected {nsteps} or {nsteps + 1}"
    )


def apply_T(eta_path, W1, W2, p, u0, v0, schedule, basis, mu=None):
    """One application of the solution operator to a transport density path.

    Both samplers are restarted before use, so repeated applications see the
    identical noise realization; ``eta_path`` may carry ``nsteps`` or
    ``nsteps + 1`` fields (the final instant is never read).
    """
    grid = basis.grid
    eta = _eta_steps(eta_path, schedule.nsteps, grid)
    W1r = W1.restarted() if W1 is not None else None
    W2r = W2.restarted() if W2 is not None else None
    v_path = solve_v_path(v0, eta, W2r, p, schedule.dt, schedule.nsteps, basis)
    u_path, diag = solve_u_path(u0, v_path, eta, W1r, p, schedule, grid, mu=mu)
    return PathTrajectory(
        times=schedule.times(),
        u=u_path,
        v=v_path,
        noise_record=_noise_record(W1, W2),
        diagnostics=diag,
    )


def direct_coupled_solve(u0, v0, W1, W2, p, schedule, basis, mu=None, v_mu=None,
                         snapshot_idx=None):
    """Advance the coupled system, feeding each density state to both equations.

    Per step: the attractant moves first with ``eta = u^n``, then the density
    moves against the fresh attractant with the same ``eta = u^n``; this is
    the per-step rule of the solution operator evaluated at its own output,
    so the trajectory is the exact fixed point of the discrete map.

    ``snapshot_idx`` selects which instants are stored (always including 0);
    by default every step is kept.
    """
    grid = basis.grid
    nsteps, dt = schedule.nsteps, schedule.dt
    if snapshot_idx is None:
        keep = np.arange(nsteps + 1)
    else:
        keep = np.asarray(snapshot_idx, dtype=np.int64)
        if keep[0] != 0 or keep[-1] > nsteps or np.any(np.diff(keep) <= 0):
            raise ValueError("snapshot_idx must be increasing, start at 0, and stay <= nsteps")
    W1r = W1.restarted() if W1 is not None else None
    W2r = W2.restarted() if W2 is not None else None

    u = np.array(u0, dtype=np.float64)
    v = np.array(v0, dtype=np.float64)
    u_out = np.empty((len(keep), grid.nx, grid.ny))
    v_out = np.empty_like(u_out)
    slot = {int(s): i for i, s in enumerate(keep)}
    if 0 in slot:
        u_out[0], v_out[0] = u, v

    clip_total = 0
    max_u = float(np.max(u))
    mass0 = float(np.sum(u)) * grid.cell_area
    mass = mass0
    for n in range(nsteps):
        dW2 = W2r.sample_increment(dt) if W2r is not None else None
        v_next = step_v(v, u, p, dW2, dt, basis, mu=v_mu)
        dW1 = W1r.sample_increment(dt) if W1r is not None else None
        u_next, diag = step_u(u, v_next, u, p, mu, dW1, dt, grid)
        u, v = u_next, v_next
        clip_total += diag.clip_count
        max_u = max(max_u, diag.max_u)
        mass = diag.mass_after
        i = slot.get(n + 1)
        if i is not None:
            u_out[i], v_out[i] = u, v

    return PathTrajectory(
        times=keep * dt,
        u=u_out,
        v=v_out,
        noise_record=_noise_record(W1, W2),
        diagnostics=PathDiagnostics(
            steps=nsteps,
            clip_count=clip_total,
            clip_fraction=clip_total / (nsteps * grid.nx * grid.ny),
            max_u=max_u,
            mass_initial=mass0,
            mass_final=mass,
        ),
    )


def picard_iterate(u0, v0, W1, W2, p, schedule, basis, tol=None, max_iter=20, mu=None):
    """Iterate the solution operator to its fixed point on one noise path.

    Starts from the constant-in-time path ``eta_0(t) = u0`` and replays the
    same noise realization every iteration.  Returns the last trajectory and
    a :class:`FixedPointReport`; a distance that grows three times in a row
    aborts with :class:`~kspm.errors.FixedPointDivergenceError`.
    """
    if tol is None:
        tol = 1e-6 * (1.0 + sobolev2_norm(u0, -1.0, basis))
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    eta = np.broadcast_to(np.asarray(u0, dtype=np.float64),
                          (schedule.nsteps + 1, *basis.grid.shape))
    distances = []
    traj = None
    for iteration in range(1, max_iter + 1):
        traj = apply_T(eta, W1, W2, p, u0, v0, schedule, basis, mu=mu)
        distances.append(_sup_dual_distance(traj.u, eta, basis))
        if distances[-1] < tol:
            return traj, FixedPointReport(
                converged=True, iterations=iteration, distances=distances, tol=tol
            )
        if len(distances) >= 4 and distances[-1] > distances[-2] > distances[-3] > distances[-4]:
            raise FixedPointDivergenceError(
                f"distance grew for 3 consecutive iterations: {distances[-4:]}",
                report=FixedPointReport(
                    converged=False, iterations=iteration, distances=distances, tol=tol
                ),
            )
        eta = traj.u
    return traj, FixedPointReport(
        converged=False, iterations=max_iter, distances=distances, tol=tol
    )
