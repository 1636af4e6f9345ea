"""Backend selection for the stencil kernels.

At import time the compiled extension ``kspm._stencils`` is preferred; if it
is missing (source checkout without a build step) the pure-NumPy twin
``kspm._stencils_py`` is used instead.  Setting the environment variable
``KSPM_PURE_PYTHON=1`` forces the fallback.  Both backends implement the same
per-cell arithmetic; ``kspm.bench`` times one against the other.
"""

from __future__ import annotations

import os

import numpy as np

from . import _stencils_py

_BACKENDS = {"python": _stencils_py}
try:
    from . import _stencils

    _BACKENDS["compiled"] = _stencils
except ImportError:  # pragma: no cover - depends on the build
    pass

if os.environ.get("KSPM_PURE_PYTHON"):
    _active = "python"
else:
    _active = "compiled" if "compiled" in _BACKENDS else "python"


def backend_name():
    """Name of the active backend, ``"compiled"`` or ``"python"``."""
    return _active


def available_backends():
    return sorted(_BACKENDS)


def set_backend(name):
    """Switch the active backend (used by benchmarks and equivalence tests)."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    _active = name


def _as_field(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def laplacian(f, hx, hy):
    """Five-point zero-flux Laplacian of ``f`` on a cell-centered grid."""
    f = _as_field(f)
    out = np.empty_like(f)
    _BACKENDS[_active].neumann_laplacian(f, hx, hy, out)
    return out


def gradient(f, hx, hy):
    """Centered gradient ``(df/dx, df/dy)`` with reflected ghost cells."""
    f = _as_field(f)
    gx = np.empty_like(f)
    gy = np.empty_like(f)
    _BACKENDS[_active].central_gradient(f, hx, hy, gx, gy)
    return gx, gy


def chemo_flux_div(eta, v, hx, hy):
    """Upwind conservative divergence of ``eta * grad(v)``."""
    eta = _as_field(eta)
    v = _as_field(v)
    if eta.shape != v.shape:
        raise ValueError(f"shape mismatch: eta {eta.shape} vs v {v.shape}")
    out = np.empty_like(eta)
    _BACKENDS[_active].chemo_flux_div(eta, v, hx, hy, out)
    return out


def signed_power(x, gamma):
    """Odd power ``x |x|^(gamma-1)`` applied elementwise.

    Always evaluated with the NumPy power loop: the operation is pointwise
    (no stencil to fuse) and SIMD power differs from scalar ``pow`` in the
    last ulp, which would break bitwise agreement between backends.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    x = _as_field(x)
    out = np.empty_like(x)
    _stencils_py.signed_power(x, float(gamma), out)
    return out
