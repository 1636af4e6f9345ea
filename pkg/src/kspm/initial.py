"""Initial-condition selectors.

A selector is a plain tuple so it can ride inside configs and manifests:

    ("constant", c)
    ("cosine", m1, m2, amplitude[, offset])   offset defaults to |amplitude|
    ("barenblatt", mass, t0)
    ("file", path)

``build_ic`` materializes a selector on a grid and enforces nonnegativity,
which the density and attractant equations both require of their data.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .snapshots import read_snapshot
from .ustep import barenblatt_field


def build_ic(selector, grid, gamma=2.0):
    """Materialize an initial-condition selector as a field on ``grid``.

    ``gamma`` only matters for the ``barenblatt`` selector, whose profile is
    the self-similar solution for that nonlinearity exponent.
    """
    if not selector or selector[0] not in ("constant", "cosine", "barenblatt", "file"):
        raise ConfigError(f"unknown initial-condition selector {selector!r}")
    kind, *args = selector
    try:
        if kind == "constant":
            (c,) = args
            f = np.full(grid.shape, float(c))
        elif kind == "cosine":
            if len(args) == 3:
                m1, m2, amplitude = args
                offset = abs(float(amplitude))
            else:
                m1, m2, amplitude, offset = args
            x, y = grid.cell_centers()
            f = float(offset) + float(amplitude) * np.outer(
                np.cos(math.pi * int(m1) * x), np.cos(math.pi * int(m2) * y)
            )
        elif kind == "barenblatt":
            mass, t0 = args
            f = barenblatt_field(grid, gamma, float(mass), float(t0))
        else:
            (path,) = args
            f = read_snapshot(path)
            if f.shape != grid.shape:
                raise ConfigError(
                    f"snapshot {path} holds a {f.shape} field, grid is {grid.shape}"
                )
    except ConfigError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad initial-condition selector {selector!r}: {err}") from None
    if not np.isfinite(f).all():
        raise ConfigError(f"initial condition {selector!r} contains non-finite values")
    if float(np.min(f)) < 0.0:
        raise ConfigError(
            f"initial condition {selector!r} dips to {float(np.min(f)):g}; "
            "initial data must be nonnegative"
        )
    return f
