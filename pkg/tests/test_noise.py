import math

import numpy as np
import pytest

from kspm.grid import SpectralBasis, eigenvalue, make_grid
from kspm.noise import NoiseSpec, WienerSampler, build_sampler, correction_mu, hs_diagnostic


def spec(**overrides):
    base = dict(sigma=0.2, delta=2.5, kmax=6, seed=42)
    base.update(overrides)
    return NoiseSpec(**base)


def test_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(sigma=-1.0, delta=2.5, kmax=4, seed=0)
    with pytest.raises(ValueError):
        NoiseSpec(sigma=0.1, delta=0.0, kmax=4, seed=0)
    with pytest.raises(ValueError):
        NoiseSpec(sigma=0.1, delta=2.5, kmax=-1, seed=0)
    with pytest.raises(ValueError):
        NoiseSpec(sigma=0.1, delta=2.5, kmax=4, seed=2**64)
    assert not spec(delta=1.0).regularity_ok
    assert spec(delta=1.01).regularity_ok


def test_sampler_requires_resolvable_modes():
    basis = SpectralBasis(make_grid(8))
    with pytest.raises(ValueError):
        build_sampler(spec(kmax=8), basis)
    build_sampler(spec(kmax=7), basis)


def test_rough_spectrum_warns():
    basis = SpectralBasis(make_grid(16))
    with pytest.warns(UserWarning):
        build_sampler(spec(delta=1.0), basis)


def test_mode_weights_closed_form():
    basis = SpectralBasis(make_grid(16))
    sampler = build_sampler(spec(delta=2.0, kmax=4), basis)
    assert sampler.q[0, 0] == 1.0
    assert sampler.q[1, 0] == pytest.approx((1 + eigenvalue((1, 0))) ** -1.0)
    assert sampler.q[2, 3] == pytest.approx((1 + eigenvalue((2, 3))) ** -1.0)
    flat = sampler.q.ravel()
    assert np.all(flat <= 1.0) and np.all(flat > 0.0)


def test_reproducible_and_stream_separated():
    basis = SpectralBasis(make_grid(16))
    a = build_sampler(spec(), basis, stream=0)
    b = build_sampler(spec(), basis, stream=0)
    c = build_sampler(spec(), basis, stream=1)
    da, db, dc = (s.sample_increment(1e-3) for s in (a, b, c))
    assert np.array_equal(da, db)
    assert not np.array_equal(da, dc)


def test_restarted_replays_and_leaves_original_alone():
    basis = SpectralBasis(make_grid(16))
    a = build_sampler(spec(), basis)
    first = a.sample_increment(1e-3)
    second = a.sample_increment(1e-3)
    replay = a.restarted()
    assert np.array_equal(replay.sample_increment(1e-3), first)
    assert np.array_equal(replay.sample_increment(1e-3), second)
    assert not np.array_equal(a.sample_increment(1e-3), first)


def test_reset_rewinds_in_place():
    basis = SpectralBasis(make_grid(16))
    a = build_sampler(spec(), basis)
    first = a.sample_increment(1e-3)
    a.reset()
    assert np.array_equal(a.sample_increment(1e-3), first)


def test_increment_rejects_bad_dt():
    basis = SpectralBasis(make_grid(16))
    a = build_sampler(spec(), basis)
    with pytest.raises(ValueError):
        a.sample_increment(0.0)
    with pytest.raises(ValueError):
        a.sample_increment(float("nan"))


def test_variance_density_brute_force():
    # independent route: sum q_k^2 psi_k(x)^2 assembled from basis
    # eigenfunctions one mode at a time
    grid = make_grid(16)
    basis = SpectralBasis(grid)
    sampler = build_sampler(spec(kmax=5, delta=2.0), basis)
    brute = np.zeros(grid.shape)
    for m1 in range(6):
        for m2 in range(6):
            q = (1.0 + eigenvalue((m1, m2))) ** -1.0
            brute += q**2 * basis.eigenfunction(m1, m2) ** 2
    assert np.max(np.abs(sampler.variance_density - brute)) < 1e-12


def test_increment_matches_spectral_formula():
    # dual route: replay the gaussian draws and synthesize the field directly
    grid = make_grid(16)
    basis = SpectralBasis(grid)
    sampler = build_sampler(spec(kmax=4), basis, stream=9)
    dt = 2e-3
    dw = sampler.sample_increment(dt)
    rng = sampler.restarted().rng
    xi = rng.standard_normal((5, 5))
    direct = np.zeros(grid.shape)
    for m1 in range(5):
        for m2 in range(5):
            direct += (sampler.q[m1, m2] * xi[m1, m2] * math.sqrt(dt)
                       * basis.eigenfunction(m1, m2))
    assert np.max(np.abs(dw - direct)) < 1e-12


def test_increment_variance_and_mean():
    grid = make_grid(16)
    basis = SpectralBasis(grid)
    sampler = build_sampler(spec(sigma=1.0, delta=2.0, kmax=4, seed=7), basis)
    dt, n = 0.01, 2000
    acc = np.zeros(grid.shape)
    acc2 = np.zeros(grid.shape)
    for _ in range(n):
        dw = sampler.sample_increment(dt)
        acc += dw
        acc2 += dw * dw
    target = dt * sampler.variance_density
    ratio = float(np.mean(acc2 / n) / np.mean(target))
    assert abs(ratio - 1.0) < 0.1
    assert float(np.max(np.abs(acc / n))) < 4.0 * math.sqrt(float(np.max(target)) / n)


def test_increment_scales_with_sqrt_dt():
    basis = SpectralBasis(make_grid(16))
    a = build_sampler(spec(), basis)
    b = a.restarted()
    da = a.sample_increment(1e-3)
    db = b.sample_increment(4e-3)
    assert np.allclose(db, 2.0 * da, atol=1e-15)


def test_correction_mu_formula():
    basis = SpectralBasis(make_grid(16))
    sampler = build_sampler(spec(), basis)
    mu = correction_mu(sampler, 0.3)
    assert np.allclose(mu, 0.5 * 0.09 * sampler.variance_density)
    assert np.max(np.abs(correction_mu(sampler, 0.0))) == 0.0


def test_hs_diagnostic_regimes():
    smooth = hs_diagnostic(NoiseSpec(sigma=1.0, delta=3.0, kmax=32, seed=0), space="L2")
    assert smooth.converged and smooth.tail_ratio < 0.01
    rough = hs_diagnostic(NoiseSpec(sigma=1.0, delta=1.5, kmax=64, seed=0), space="H1")
    assert not rough.converged
    trivial = hs_diagnostic(NoiseSpec(sigma=1.0, delta=2.0, kmax=0, seed=0), space="L2")
    assert trivial.converged and trivial.partial_sums[-1] == 1.0
    assert np.all(np.diff(smooth.partial_sums) >= 0)


def test_hs_diagnostic_l2_brute_force():
    report = hs_diagnostic(NoiseSpec(sigma=1.0, delta=2.0, kmax=3, seed=0), space="L2")
    brute = sum((1.0 + eigenvalue((m1, m2))) ** -2.0
                for m1 in range(4) for m2 in range(4))
    assert report.partial_sums[-1] == pytest.approx(brute, rel=1e-12)


def test_hs_diagnostic_h1_brute_force():
    report = hs_diagnostic(NoiseSpec(sigma=1.0, delta=2.0, kmax=3, seed=0), space="H1")
    brute = sum((1.0 + eigenvalue((m1, m2))) ** -2.0 * (1.0 + eigenvalue((m1, m2)))
                for m1 in range(4) for m2 in range(4))
    assert report.partial_sums[-1] == pytest.approx(brute, rel=1e-12)


def test_hs_diagnostic_lp_needs_p():
    with pytest.raises(ValueError):
        hs_diagnostic(NoiseSpec(sigma=1.0, delta=2.0, kmax=4, seed=0), space="Lp")
    report = hs_diagnostic(NoiseSpec(sigma=1.0, delta=2.0, kmax=4, seed=0), space="Lp", p=2.0)
    twin = hs_diagnostic(NoiseSpec(sigma=1.0, delta=2.0, kmax=4, seed=0), space="L2")
    # L2 quadrature route reproduces the exact-orthonormality route
    assert report.partial_sums[-1] == pytest.approx(twin.partial_sums[-1], rel=1e-6)


def test_hs_diagnostic_unknown_space():
    with pytest.raises(ValueError):
        hs_diagnostic(spec(), space="BMO")


def test_sampler_rejects_non_neumann_basis():
    basis = SpectralBasis(make_grid(16), kind="periodic")
    with pytest.raises(ValueError):
        WienerSampler(spec(), basis, 0)
