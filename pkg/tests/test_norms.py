import math

import numpy as np
import pytest

from kspm.grid import eigenvalue
from kspm.norms import (
    NormRequest,
    bessel_lp_norm,
    evaluate_norm,
    grad_lp_norm,
    h1_norm,
    lp_norm,
    max_abs,
    runst_ratio,
    sobolev2_norm,
)

from conftest import rough_field


def test_lp_closed_forms(grid32):
    c = np.full(grid32.shape, 0.7)
    for p in (1, 2, 3.5, 7):
        assert lp_norm(c, p, grid32) == pytest.approx(0.7, rel=1e-13)
    with pytest.raises(ValueError):
        lp_norm(c, 0.5, grid32)
    with pytest.raises(ValueError):
        lp_norm(c, math.inf, grid32)


def test_lp_unit_mode(grid32, basis32):
    # |cos(pi x)|_L2 = 1/sqrt(2); the orthonormal mode carries the sqrt(2)
    x, _ = grid32.cell_centers()
    f = np.outer(np.cos(math.pi * x), np.ones(grid32.ny))
    assert lp_norm(f, 2, grid32) == pytest.approx(1 / math.sqrt(2), rel=1e-12)
    assert lp_norm(basis32.eigenfunction(1, 0), 2, grid32) == pytest.approx(1.0, rel=1e-12)


def test_max_abs():
    f = np.array([[1.0, -3.0], [2.0, 0.5]])
    assert max_abs(f) == 3.0


def test_sobolev2_closed_forms(grid32, basis32):
    c = np.full(grid32.shape, 0.7)
    for s in (-2.0, -1.0, 0.0, 1.0, 2.0):
        assert sobolev2_norm(c, s, basis32) == pytest.approx(0.7, rel=1e-13)
    lam = eigenvalue((1, 0))
    psi = basis32.eigenfunction(1, 0)
    assert sobolev2_norm(psi, -1.0, basis32) == pytest.approx((1 + lam) ** -0.5, rel=1e-12)
    assert sobolev2_norm(psi, 1.0, basis32) == pytest.approx((1 + lam) ** 0.5, rel=1e-12)
    assert sobolev2_norm(psi, 0.0, basis32) == pytest.approx(lp_norm(psi, 2, grid32), rel=1e-12)


def test_sobolev2_monotone_in_s(grid32, basis32):
    f = rough_field(grid32, seed=11, low=-1.0, high=1.0)
    values = [sobolev2_norm(f, s, basis32) for s in (-2, -1, -0.5, 0, 0.5, 1, 2)]
    assert all(a <= b * (1 + 1e-12) for a, b in zip(values, values[1:]))


def test_bessel_reduces_to_lp_at_s0(grid32, basis32):
    f = rough_field(grid32, seed=12)
    for p in (2, 4):
        assert bessel_lp_norm(f, 0.0, p, basis32) == pytest.approx(
            lp_norm(f, p, grid32), rel=1e-12)


def test_bessel_p2_matches_multiplier_route(grid32, basis32):
    # two routes to the same norm: pointwise lift vs spectral multiplier
    f = rough_field(grid32, seed=13, low=-1.0, high=1.0)
    for s in (-1.0, 0.5, 1.0):
        assert bessel_lp_norm(f, s, 2, basis32) == pytest.approx(
            sobolev2_norm(f, s, basis32), rel=1e-10)


def test_grad_and_h1_closed_forms(grid32):
    c = np.full(grid32.shape, 0.7)
    assert grad_lp_norm(c, 2, grid32) == 0.0
    assert h1_norm(c, 4, grid32) == pytest.approx(0.7, rel=1e-13)
    xx, _ = grid32.mesh()
    f = 2.0 * xx
    # interior slope 2, wall cells see half of it through the mirror ghost
    expected_sq = 4.0 * (grid32.nx - 2) / grid32.nx + 2.0 * 1.0 / grid32.nx
    assert grad_lp_norm(f, 2, grid32) == pytest.approx(math.sqrt(expected_sq), rel=1e-12)
    assert h1_norm(f, 2, grid32) == pytest.approx(
        math.hypot(lp_norm(f, 2, grid32), grad_lp_norm(f, 2, grid32)), rel=1e-13)


def test_runst_ratio_validation(grid32, basis32):
    w = rough_field(grid32, seed=14)
    with pytest.raises(ValueError):
        runst_ratio(w, 1.0, 0.4, basis32)
    with pytest.raises(ValueError):
        runst_ratio(w, 2.0, 0.5, basis32)  # theta must stay below 1/gamma
    with pytest.raises(ValueError):
        runst_ratio(w, 2.0, 0.0, basis32)
    with pytest.raises(ValueError):
        runst_ratio(np.zeros(grid32.shape), 2.0, 0.4, basis32)


def test_runst_ratio_scale_invariant(grid32, basis32):
    w = rough_field(grid32, seed=15)
    base = runst_ratio(w, 2.0, 0.4, basis32)
    assert base > 0.0
    for c in (1e-3, 7.0, 1e4):
        assert runst_ratio(c * w, 2.0, 0.4, basis32) == pytest.approx(base, rel=1e-12)


def test_norm_request_validation():
    NormRequest(kind="lp", p=2.0)
    NormRequest(kind="maxabs")
    with pytest.raises(ValueError):
        NormRequest(kind="lp")
    with pytest.raises(ValueError):
        NormRequest(kind="lp", p=2.0, s=1.0)
    with pytest.raises(ValueError):
        NormRequest(kind="wavelet", p=2.0)


def test_evaluate_norm_dispatch(grid32, basis32):
    f = rough_field(grid32, seed=16)
    pairs = [
        (NormRequest(kind="lp", p=3.0), lp_norm(f, 3.0, grid32)),
        (NormRequest(kind="sobolev2", s=-1.0), sobolev2_norm(f, -1.0, basis32)),
        (NormRequest(kind="bessel", s=1.0, p=4.0), bessel_lp_norm(f, 1.0, 4.0, basis32)),
        (NormRequest(kind="grad", p=2.0), grad_lp_norm(f, 2.0, grid32)),
        (NormRequest(kind="h1", p=4.0), h1_norm(f, 4.0, grid32)),
        (NormRequest(kind="maxabs"), max_abs(f)),
    ]
    for request, direct in pairs:
        assert evaluate_norm(f, request, basis32) == direct
