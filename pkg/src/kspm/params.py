"""Model coefficients and the uniform time schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the coupled system.

    Attributes
    ----------
    r_u : float
        Degenerate-diffusion rate of the density equation (> 0).
    r_v : float
        Diffusion rate of the attractant equation (> 0).
    chi : float
        Drift sensitivity multiplying ``div(eta grad v)`` (>= 0).
    alpha : float
        Attractant decay rate (>= 0); in the Ito form used here it is
        understood to already absorb any interpretation correction.
    beta : float
        Attractant production rate per unit density (>= 0).
    sigma_u, sigma_v : float
        Multiplicative noise amplitudes (>= 0).
    gamma : float
        Nonlinearity exponent of the odd power ``u |u|^(gamma-1)`` (> 1).
    """

    r_u: float
    r_v: float
    chi: float
    alpha: float
    beta: float
    sigma_u: float
    sigma_v: float
    gamma: float

    def __post_init__(self):
        problems = []
        for name in ("r_u", "r_v", "chi", "alpha", "beta", "sigma_u", "sigma_v", "gamma"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                problems.append(f"{name} must be a finite number, got {value!r}")
        if not problems:
            if self.r_u <= 0:
                problems.append(f"r_u must be positive, got {self.r_u}")
            if self.r_v <= 0:
                problems.append(f"r_v must be positive, got {self.r_v}")
            for name in ("chi", "alpha", "beta", "sigma_u", "sigma_v"):
                if getattr(self, name) < 0:
                    problems.append(f"{name} must be nonnegative, got {getattr(self, name)}")
            if self.gamma <= 1:
                problems.append(f"gamma must exceed 1, got {self.gamma}")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class Schedule:
    """Uniform integration schedule: ``nsteps`` steps of width ``dt``.

    The instants are ``t_n = n dt`` for ``n = 0 .. nsteps``; solvers store
    states at every instant unless told to keep snapshots only.
    """

    dt: float
    nsteps: int

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if self.nsteps < 1:
            raise ValueError(f"nsteps must be at least 1, got {self.nsteps}")

    @property
    def horizon(self):
        return self.nsteps * self.dt

    def times(self):
        return np.arange(self.nsteps + 1) * self.dt


def make_uniform_schedule(horizon, dt_target):
    """Schedule covering ``[0, horizon]`` with steps no wider than ``dt_target``.

    The step is shrunk so an integer number of steps lands exactly on the
    horizon.
    """
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be positive and finite, got {horizon}")
    if not (math.isfinite(dt_target) and dt_target > 0):
        raise ValueError(f"dt_target must be positive and finite, got {dt_target}")
    nsteps = max(1, math.ceil(horizon / dt_target - 1e-12))
    return Schedule(dt=horizon / nsteps, nsteps=nsteps)


def snapshot_indices(nsteps, count):
    """Indices of ``count + 1`` near-uniform snapshot instants in ``0..nsteps``."""
    if count < 1:
        raise ValueError(f"snapshot count must be at least 1, got {count}")
    idx = np.rint(np.linspace(0, nsteps, min(count, nsteps) + 1)).astype(np.int64)
    return np.unique(idx)
