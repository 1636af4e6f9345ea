"""Spatially colored Wiener increments on the cosine basis.

An increment over a step of width ``dt`` is the truncated sum

    dW(x) = sum_k q_k psi_k(x) xi_k sqrt(dt),    xi_k ~ N(0, 1) iid,

over modes ``k = (m1, m2)`` with ``max(m1, m2) <= kmax``, where ``psi_k``
are the L2-normalized cosine eigenfunctions and the spectral weights

    q_k = (1 + lam_k)^(-delta/2)

decay with the eigenvalue magnitude; the constant mode keeps weight 1.
Streams are counter-based (Philox keyed by ``(seed, stream)``), so any
path or process can be regenerated independently and in any order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .grid import eigenvalue, make_grid


@dataclass(frozen=True)
class NoiseSpec:
    """Parameters of one Wiener process.

    ``delta`` controls spatial regularity: the covariance is trace class in
    the spaces of interest for ``delta > 1``, which specs the admissible
    range; smaller values are accepted for experimentation but flagged.
    """

    sigma: float
    delta: float = 2.5
    kmax: int = 8
    seed: int = 0
    basis_kind: str = "neumann"

    def __post_init__(self):
        problems = []
        if not (isinstance(self.sigma, (int, float)) and math.isfinite(self.sigma) and self.sigma >= 0):
            problems.append(f"sigma must be finite and nonnegative, got {self.sigma!r}")
        if not (isinstance(self.delta, (int, float)) and math.isfinite(self.delta) and self.delta > 0):
            problems.append(f"delta must be finite and positive, got {self.delta!r}")
        if not (isinstance(self.kmax, (int, np.integer)) and not isinstance(self.kmax, bool) and self.kmax >= 0):
            problems.append(f"kmax must be a nonnegative integer, got {self.kmax!r}")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64):
            problems.append(f"seed must be a 64-bit nonnegative integer, got {self.seed!r}")
        if self.basis_kind not in ("neumann", "periodic"):
            problems.append(f"unknown basis kind {self.basis_kind!r}")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def regularity_ok(self):
        """True when ``delta`` lies in the trace-class range ``delta > 1``."""
        return self.delta > 1.0


def _mode_lambdas(kmax, kind):
    m = np.arange(kmax + 1, dtype=np.float64)
    return eigenvalue((1, 0), kind) * (m[:, None] ** 2 + m[None, :] ** 2)


def _weights(spec):
    return (1.0 + _mode_lambdas(spec.kmax, spec.basis_kind)) ** (-0.5 * spec.delta)


def _cosine_table(kmax, centers):
    # rows are the L2([0,1])-normalized profiles n_m cos(pi m x) at cell centers
    modes = np.arange(kmax + 1)[:, None]
    table = np.cos(math.pi * modes * centers[None, :])
    table[1:, :] *= math.sqrt(2.0)
    return table


class WienerSampler:
    """Stateful generator of increments for one Wiener process on one grid.

    Use :func:`build_sampler`.  ``restarted()`` returns an independent copy
    rewound to the first increment, which is how the fixed-point iteration
    replays one noise realization across iterations.
    """

    def __init__(self, spec, basis, stream):
        if spec.basis_kind != "neumann" or basis.kind != "neumann":
            raise ValueError(
                "increment sampling is implemented for the zero-flux cosine basis only; "
                "periodic mode supports eigenvalue queries"
            )
        grid = basis.grid
        if spec.kmax > min(grid.nx, grid.ny) - 1:
            raise ValueError(
                f"kmax={spec.kmax} exceeds the resolved per-axis modes of a "
                f"{grid.nx} x {grid.ny} grid"
            )
        if not spec.regularity_ok:
            warnings.warn(
                f"delta={spec.delta} is outside the trace-class range (delta > 1); "
                "the covariance diagnostic will report a divergent tail",
                stacklevel=3,
            )
        self.spec = spec
        self.basis = basis
        self.stream = int(stream)
        self.q = _weights(spec)
        x, y = grid.cell_centers()
        self._px = _cosine_table(spec.kmax, x)
        self._py = _cosine_table(spec.kmax, y)
        self.variance_density = (self._px**2).T @ (self.q**2) @ (self._py**2)
        self.regularity_warning = not spec.regularity_ok
        self.rng = self._fresh_rng()

    def _fresh_rng(self):
        return np.random.Generator(np.random.Philox(key=[self.spec.seed, self.stream]))

    def reset(self):
        """Rewind to the first increment of the stream."""
        self.rng = self._fresh_rng()

    def restarted(self):
        """Fresh sampler on the same (seed, stream), rewound to the start."""
        return WienerSampler(self.spec, self.basis, self.stream)

    def sample_increment(self, dt):
        """One increment field over a step of width ``dt``."""
        if not (math.isfinite(dt) and dt > 0):
            raise ValueError(f"dt must be positive and finite, got {dt}")
        k = self.spec.kmax + 1
        amplitudes = self.q * self.rng.standard_normal((k, k)) * math.sqrt(dt)
        return self._px.T @ amplitudes @ self._py


def build_sampler(spec, basis, stream=0):
    """Construct a :class:`WienerSampler` bound to ``basis`` on stream ``stream``."""
    return WienerSampler(spec, basis, stream)


def correction_mu(sampler, sigma):
    """Interpretation-correction field ``mu(x) = sigma^2/2 sum_k q_k^2 psi_k(x)^2``.

    Adding ``mu u dt`` to the Ito drift reproduces the Stratonovich reading
    of the multiplicative noise ``sigma u o dW``; with ``sigma = 0`` the
    correction vanishes identically.
    """
    return (0.5 * sigma * sigma) * sampler.variance_density


@dataclass(frozen=True)
class HSReport:
    """Partial covariance sums and a tail-convergence verdict.

    ``partial_sums[K]`` is ``sum_{max(m1,m2) <= K} q_k^2 |psi_k|_space^2``
    for ``K = 0 .. kmax``; the tail is declared converged when the last
    doubling ``K/2 -> K`` adds less than 1% of the total.
    """

    space: str
    delta: float
    kmax: int
    partial_sums: np.ndarray
    tail_ratio: float
    converged: bool


def hs_diagnostic(spec, space="L2", p=None, grid=None):
    """Summability diagnostic of the noise covariance in a target space.

    Parameters
    ----------
    spec : NoiseSpec
    space : str
        ``"L2"``, ``"H1"``, ``"Linf"``, or ``"Lp"`` (then ``p`` is required).
    p : float, optional
        Lebesgue exponent for ``space="Lp"``.
    grid : Grid, optional
        Quadrature grid for the ``Lp`` mode norms; a default fine enough to
        resolve ``kmax`` is built when omitted.
    """
    lam = _mode_lambdas(spec.kmax, spec.basis_kind)
    q2 = (1.0 + lam) ** (-spec.delta)
    if space == "L2":
        mode_norm2 = np.ones_like(lam)
    elif space == "H1":
        mode_norm2 = 1.0 + lam
    elif space == "Linf":
        peak = np.where(np.arange(spec.kmax + 1) > 0, 2.0, 1.0)
        mode_norm2 = np.outer(peak, peak)
    elif space == "Lp":
        if p is None:
            raise ValueError("space 'Lp' requires the exponent p")
        if grid is None:
            grid = make_grid(max(64, 2 * spec.kmax + 2))
        x, y = grid.cell_centers()
        sx = np.sum(np.abs(_cosine_table(spec.kmax, x)) ** p * grid.hx, axis=1)
        sy = np.sum(np.abs(_cosine_table(spec.kmax, y)) ** p * grid.hy, axis=1)
        mode_norm2 = np.outer(sx, sy) ** (2.0 / p)
    else:
        raise ValueError(f"unknown space tag {space!r}")

    terms = q2 * mode_norm2
    partial = np.cumsum(np.cumsum(terms, axis=0), axis=1).diagonal().copy()
    total = partial[-1]
    if spec.kmax == 0:
        tail_ratio = 0.0
    else:
        tail_ratio = float((total - partial[spec.kmax // 2]) / total)
    return HSReport(
        space=space if space != "Lp" else f"L{p:g}",
        delta=spec.delta,
        kmax=spec.kmax,
        partial_sums=partial,
        tail_ratio=tail_ratio,
        converged=bool(tail_ratio < 0.01),
    )
