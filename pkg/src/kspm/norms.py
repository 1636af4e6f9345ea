"""Discrete norms: Lebesgue, Sobolev-by-multiplier, Bessel, and gradient based.

Spectral quantities use the cosine-basis coefficients with the discrete
Parseval scaling of :mod:`kspm.grid`; stencil quantities use the shared
centered gradient.  Fractional smoothness is realized as the Fourier
multiplier ``(1 + lam_k)^(s/2)`` on the resolved modes, i.e. the norms are
those of the band-limited representative of a field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import gradient


def lp_norm(f, p, grid):
    """Discrete Lebesgue norm ``(sum |f|^p hx hy)^(1/p)``."""
    if not (math.isfinite(p) and p >= 1):
        raise ValueError(f"p must be a finite number >= 1, got {p}")
    return float(np.sum(np.abs(f) ** p) * grid.cell_area) ** (1.0 / p)


def max_abs(f):
    """Largest absolute cell value (discrete sup norm)."""
    return float(np.max(np.abs(f)))


def sobolev2_norm(f, s, basis):
    """L2-based Sobolev norm ``(sum (1 + lam_k)^s c_k^2)^(1/2)``.

    Negative ``s`` gives the dual-space norms used for the fixed-point
    distance; ``s = 0`` recovers the L2 norm exactly (Parseval).
    """
    c = basis.to_spectral(f)
    with np.errstate(over="ignore"):  # inf is the honest answer for huge fields
        return math.sqrt(float(np.sum((1.0 + basis.lam) ** s * c * c)))


def bessel_lp_norm(f, s, p, basis):
    """Lp norm of the smoothed field ``(I - lap)^(s/2) f`` (Bessel potential).

    The multiplier acts on the resolved cosine modes; the result is the
    ``H^s_p`` norm of the band-limited representative of ``f``.
    """
    smoothed = basis.from_spectral((1.0 + basis.lam) ** (0.5 * s) * basis.to_spectral(f))
    return lp_norm(smoothed, p, basis.grid)


def grad_lp_norm(f, p, grid):
    """Lp norm of the pointwise gradient magnitude ``|grad f|``."""
    gx, gy = gradient(f, grid)
    return lp_norm(np.hypot(gx, gy), p, grid)


def h1_norm(f, p, grid):
    """First-order Sobolev norm assembled as ``sqrt(|f|_Lp^2 + |grad f|_Lp^2)``."""
    return math.hypot(lp_norm(f, p, grid), grad_lp_norm(f, p, grid))


def runst_ratio(w, gamma, theta, basis):
    """Ratio probing the smoothness transfer of the odd power map.

    Returns ``|w|_{H^theta_{2 gamma}}^gamma / | |w|^gamma |_{H^1_2}``: the
    composition estimate for the power nonlinearity asserts this is bounded
    uniformly over nonnegative band-limited ``w`` whenever
    ``0 < theta < 1/gamma``.  Both sides are positively homogeneous of
    degree ``gamma``, so the ratio is scale invariant.
    """
    if gamma <= 1:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    if not 0 < theta < 1.0 / gamma:
        raise ValueError(f"theta must lie in (0, 1/gamma), got theta={theta} gamma={gamma}")
    grid = basis.grid
    numerator = bessel_lp_norm(w, theta, 2.0 * gamma, basis) ** gamma
    denominator = h1_norm(np.abs(w) ** gamma, 2, grid)
    if denominator == 0.0:
        raise ValueError("ratio undefined for identically zero w")
    return numerator / denominator


_KINDS = {
    "lp": ("p",),
    "sobolev2": ("s",),
    "bessel": ("s", "p"),
    "grad": ("p",),
    "h1": ("p",),
    "maxabs": (),
}


@dataclass(frozen=True)
class NormRequest:
    """One norm evaluation: ``kind`` plus whichever of ``s``, ``p`` it needs."""

    kind: str
    s: float | None = None
    p: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}; known: {sorted(_KINDS)}")
        needed = _KINDS[self.kind]
        for name in needed:
            if getattr(self, name) is None:
                raise ValueError(f"norm kind {self.kind!r} requires parameter {name}")
        for name in ("s", "p"):
            if name not in needed and getattr(self, name) is not None:
                raise ValueError(f"norm kind {self.kind!r} does not take parameter {name}")


def evaluate_norm(f, request, basis):
    """Evaluate a single :class:`NormRequest` on a field."""
    grid = basis.grid
    if request.kind == "lp":
        return lp_norm(f, request.p, grid)
    if request.kind == "sobolev2":
        return sobolev2_norm(f, request.s, basis)
    if request.kind == "bessel":
        return bessel_lp_norm(f, request.s, request.p, basis)
    if request.kind == "grad":
        return grad_lp_norm(f, request.p, grid)
    if request.kind == "h1":
        return h1_norm(f, request.p, grid)
    return max_abs(f)
