"""Ensemble machinery: per-path reproducibility, pairwise reduction, refinement."""

import math

import numpy as np
import pytest

from kspm.errors import NumericalError
from kspm.fixed_point import PathTrajectory
from kspm.grid import SpectralBasis, make_grid
from kspm.montecarlo import (
    TRACKED,
    EnsembleConfig,
    level_assets,
    path_functionals,
    refinement_study,
    resolve_workers,
    run_ensemble,
    simulate_path,
)
from kspm.noise import NoiseSpec
from kspm.ustep import PathDiagnostics

from conftest import default_params


def make_cfg(**overrides):
    seed = overrides.pop("base_seed", 777)
    base = dict(
        nx=32,
        ny=32,
        params=default_params(),
        w1=NoiseSpec(sigma=0.2, delta=2.5, kmax=8, seed=seed),
        w2=NoiseSpec(sigma=0.2, delta=2.5, kmax=8, seed=seed),
        u0=("cosine", 1, 1, 0.5, 1.0),
        v0=("constant", 0.5),
        horizon=0.005,
        num_paths=2,
        base_seed=seed,
        snapshots=10,
        workers=1,
    )
    base.update(overrides)
    return EnsembleConfig(**base)


def const_traj(c1, c2, horizon, k=6, shape=(8, 8)):
    times = np.linspace(0.0, horizon, k)
    u = np.broadcast_to(np.full(shape, c1), (k,) + shape).copy()
    v = np.broadcast_to(np.full(shape, c2), (k,) + shape).copy()
    diag = PathDiagnostics(
        steps=k - 1,
        clip_count=0,
        clip_fraction=0.0,
        max_u=c1,
        mass_initial=c1,
        mass_final=c1,
    )
    return PathTrajectory(times=times, u=u, v=v, noise_record={}, diagnostics=diag)


class TestConfigValidation:
    def test_all_problems_collected(self):
        with pytest.raises(ValueError) as err:
            make_cfg(nx=2, ny=2, method="euler", num_paths=0, horizon=-1.0)
        text = str(err.value)
        for fragment in ("4x4", "method", "num_paths", "horizon"):
            assert fragment in text

    def test_seed_mismatch_rejected(self):
        with pytest.raises(ValueError, match="base_seed"):
            make_cfg(w1=NoiseSpec(sigma=0.2, delta=2.5, kmax=8, seed=1))

    def test_bad_dt_and_snapshots(self):
        with pytest.raises(ValueError, match="dt"):
            make_cfg(dt=0.0)
        with pytest.raises(ValueError, match="snapshots"):
            make_cfg(snapshots=0)


class TestResolveWorkers:
    def test_explicit_request_wins(self, monkeypatch):
        monkeypatch.setenv("KSPM_THREADS", "7")
        assert resolve_workers(2, 100) == 2

    def test_env_used_when_unset(self, monkeypatch):
        monkeypatch.setenv("KSPM_THREADS", "3")
        assert resolve_workers(None, 100) == 3

    def test_capped_by_tasks_and_floor_one(self, monkeypatch):
        monkeypatch.delenv("KSPM_THREADS", raising=False)
        assert resolve_workers(16, 5) == 5
        assert resolve_workers(0, 5) == 1


class TestLevelAssets:
    def test_level_doubles_resolution(self):
        cfg = make_cfg()
        grid0, _, u0_0, _, _, _ = level_assets(cfg, 0)
        grid1, _, u0_1, _, _, _ = level_assets(cfg, 1)
        assert (grid0.nx, grid1.nx) == (32, 64)
        assert u0_1.shape == (64, 64)

    def test_explicit_dt_quartered_per_level(self):
        # 5e-4 divides the horizon at both levels, so no rounding interferes
        cfg = make_cfg(dt=5e-4)
        _, _, _, _, sched0, _ = level_assets(cfg, 0)
        _, _, _, _, sched1, _ = level_assets(cfg, 1)
        assert sched0.dt == pytest.approx(5e-4, rel=1e-12)
        assert sched1.dt == pytest.approx(1.25e-4, rel=1e-12)
        assert sched1.nsteps == 4 * sched0.nsteps

    def test_auto_dt_shrinks_with_level(self):
        cfg = make_cfg()
        _, _, _, _, sched0, _ = level_assets(cfg, 0)
        _, _, _, _, sched1, _ = level_assets(cfg, 1)
        assert sched1.dt < sched0.dt
        # explicit stability: the bound scales with the squared cell width
        assert sched1.dt == pytest.approx(sched0.dt / 4.0, rel=0.05)

    def test_snapshot_indices_span_schedule(self):
        cfg = make_cfg(snapshots=7)
        _, _, _, _, schedule, snap = level_assets(cfg, 0)
        assert snap[0] == 0 and snap[-1] == schedule.nsteps
        assert len(snap) <= 7 + 1
        assert np.all(np.diff(snap) > 0)


class TestPathFunctionals:
    def test_constant_trajectory_closed_forms(self):
        c1, c2, horizon, gamma = 0.7, 1.3, 0.25, 2.0
        grid = make_grid(8)
        basis = SpectralBasis(grid)
        traj = const_traj(c1, c2, horizon)
        out = path_functionals(traj, default_params(gamma=gamma), basis)

        lg = c1 ** (gamma + 1.0)
        assert out["q1_total"] == pytest.approx(lg, rel=1e-12)
        assert out["q1_energy"] == 0.0
        assert out["q1_energy_lowpow"] == 0.0
        assert out["q2_total"] == pytest.approx(c1**2 + horizon * lg, rel=1e-12)
        q3 = (horizon * c2 ** (gamma + 1.0)) ** (4.0 / (gamma + 1.0))
        assert out["q3_total"] == pytest.approx(q3, rel=1e-12)
        assert out["q3_alt"] == pytest.approx(horizon * c2**4, rel=1e-12)
        assert out["q4_total"] == pytest.approx(c2**4, rel=1e-12)
        assert out["v0_l4"] == pytest.approx(c2, rel=1e-12)
        assert out["l2_u_final"] == pytest.approx(c1, rel=1e-12)
        assert out["min_u"] == c1 and out["min_v"] == c2

    def test_gamma_enters_sup_exponent(self):
        grid = make_grid(8)
        basis = SpectralBasis(grid)
        traj = const_traj(0.5, 1.0, 0.1)
        a = path_functionals(traj, default_params(gamma=1.5), basis)
        b = path_functionals(traj, default_params(gamma=3.0), basis)
        assert a["q1_total"] == pytest.approx(0.5**2.5, rel=1e-12)
        assert b["q1_total"] == pytest.approx(0.5**4.0, rel=1e-12)


class TestSimulatePath:
    def test_repeat_is_bitwise(self):
        cfg = make_cfg()
        a = simulate_path(cfg, 1)
        b = simulate_path(cfg, 1)
        assert np.array_equal(a.u, b.u) and np.array_equal(a.v, b.v)

    def test_paths_differ(self):
        cfg = make_cfg()
        a = simulate_path(cfg, 0)
        b = simulate_path(cfg, 1)
        assert np.max(np.abs(a.u - b.u)) > 0

    def test_noise_record_streams(self):
        cfg = make_cfg()
        traj = simulate_path(cfg, 3)
        assert traj.noise_record["w1"]["stream"] == 6
        assert traj.noise_record["w2"]["stream"] == 7

    def test_picard_matches_direct(self):
        a = simulate_path(make_cfg(), 0)
        b = simulate_path(make_cfg(method="picard"), 0)
        assert np.array_equal(a.times, b.times)
        assert np.max(np.abs(a.u - b.u)) < 1e-8
        assert np.max(np.abs(a.v - b.v)) < 1e-8

    def test_nonconvergent_picard_is_numerical_error(self):
        cfg = make_cfg(method="picard", picard_tol=1e-300, picard_max_iter=2)
        with pytest.raises(NumericalError, match="not converged"):
            simulate_path(cfg, 0)


class TestRunEnsemble:
    def test_single_path_zero_se(self):
        est = run_ensemble(make_cfg(num_paths=1))
        assert est.completed == 1
        assert all(v == 0.0 for v in est.se.values())

    def test_mean_matches_manual_average(self):
        cfg = make_cfg(num_paths=3)
        est = run_ensemble(cfg)
        grids = level_assets(cfg, 0)
        basis = grids[1]
        manual = []
        for i in range(3):
            manual.append(path_functionals(simulate_path(cfg, i), cfg.params, basis))
        for key in TRACKED:
            column = [m[key] for m in manual]
            assert est.mean[key] == pytest.approx(np.mean(column), rel=1e-15)
            assert est.se[key] == pytest.approx(
                np.std(column, ddof=1) / math.sqrt(3), rel=1e-12
            )

    def test_serial_parallel_bitwise(self):
        serial = run_ensemble(make_cfg(num_paths=4, workers=1))
        parallel = run_ensemble(make_cfg(num_paths=4, workers=3))
        assert serial.mean == parallel.mean
        assert serial.se == parallel.se
        assert serial.records == parallel.records

    def test_blowup_paths_fail_ensemble(self):
        # dt roughly 30x over the diffusive stability bound: paths diverge
        cfg = make_cfg(
            params=default_params(r_u=1.0), dt=1e-3, num_paths=2, horizon=0.05
        )
        with pytest.raises(NumericalError, match="paths failed"):
            run_ensemble(cfg)

    def test_estimates_record_positivity(self):
        est = run_ensemble(make_cfg(num_paths=2))
        assert est.min_u >= 0.0
        assert est.clip_fraction_max >= est.clip_fraction_mean >= 0.0
        assert est.failures == []
        assert len(est.records) == 2

    def test_seed_shift_within_three_se(self):
        a = run_ensemble(make_cfg(base_seed=12345, num_paths=200, horizon=0.01))
        b = run_ensemble(make_cfg(base_seed=54321, num_paths=200, horizon=0.01))
        for key in TRACKED:
            joint = math.hypot(a.se[key], b.se[key])
            assert abs(a.mean[key] - b.mean[key]) <= 3.0 * joint, key


class TestRefinementStudy:
    def test_levels_must_be_positive(self):
        with pytest.raises(ValueError, match="levels"):
            refinement_study(make_cfg(), levels=0)

    def test_two_level_report_structure(self):
        cfg = make_cfg(nx=16, ny=16, horizon=0.004, num_paths=2)
        report = refinement_study(cfg, levels=2)
        assert [row["resolution"] for row in report.levels] == [(16, 16), (32, 32)]
        assert report.levels[1]["nsteps"] > report.levels[0]["nsteps"]
        assert len(report.rel_change) == 1
        for key in TRACKED:
            change = report.rel_change[0][key]
            assert math.isfinite(change) and change >= 0.0
