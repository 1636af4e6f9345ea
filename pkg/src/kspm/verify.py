"""Executable invariant battery.

Each check is a small deterministic experiment against a closed form or a
structural identity of the scheme (telescoping fluxes, exact discrete
eigenvectors, replayable noise).  The battery prints one PASS/FAIL line per
check and is cheap enough to run on every build.
"""

from __future__ import annotations

import math
import os
import sys
import tempfile

import numpy as np

from . import kernels
from .config import parse_config
from .errors import ConfigError, SnapshotFormatError
from .fixed_point import direct_coupled_solve, picard_iterate, xnorm_distance
from .grid import SpectralBasis, eigenvalue, make_grid
from .noise import NoiseSpec, build_sampler, correction_mu, hs_diagnostic
from .norms import bessel_lp_norm, h1_norm, lp_norm, runst_ratio, sobolev2_norm
from .params import ModelParams, make_uniform_schedule
from .snapshots import read_snapshot, write_snapshot
from .ustep import barenblatt_field, cfl_dt, solve_u_path
from .vstep import step_v


def _rng(tag=0):
    return np.random.default_rng(20240 + tag)


def _random_field(grid, tag=0):
    return _rng(tag).uniform(0.2, 1.0, grid.shape)


def check_transform_roundtrip():
    grid = make_grid(48, 40)
    basis = SpectralBasis(grid)
    f = _random_field(grid)
    err = float(np.max(np.abs(basis.from_spectral(basis.to_spectral(f)) - f)))
    return err < 1e-12, f"max abs error {err:.2e}"


def check_transform_routes_agree():
    grid = make_grid(32)
    fast = SpectralBasis(grid, transform="fft")
    slow = SpectralBasis(grid, transform="direct")
    f = _random_field(grid, 1)
    err = float(np.max(np.abs(fast.to_spectral(f) - slow.to_spectral(f))))
    return err < 1e-12, f"fft vs direct matrix route {err:.2e}"


def check_parseval():
    grid = make_grid(32)
    basis = SpectralBasis(grid)
    f = _random_field(grid, 2)
    lhs = lp_norm(f, 2, grid) ** 2
    rhs = float(np.sum(basis.to_spectral(f) ** 2))
    err = abs(lhs - rhs) / lhs
    return err < 1e-13, f"relative gap {err:.2e}"


def check_laplacian_eigenvector():
    # cell-centered cosines are exact eigenvectors of the reflected stencil
    grid = make_grid(32)
    basis = SpectralBasis(grid)
    m1, m2 = 3, 5
    psi = basis.eigenfunction(m1, m2)
    lam_disc = (4.0 * math.sin(0.5 * math.pi * m1 * grid.hx) ** 2 / grid.hx**2
                + 4.0 * math.sin(0.5 * math.pi * m2 * grid.hy) ** 2 / grid.hy**2)
    err = float(np.max(np.abs(kernels.laplacian(psi, grid.hx, grid.hy) + lam_disc * psi)))
    return err < 1e-9, f"stencil eigen-identity residual {err:.2e}"


def check_flux_telescoping():
    grid = make_grid(40)
    eta = _random_field(grid, 3)
    v = _random_field(grid, 4)
    total = float(np.sum(kernels.chemo_flux_div(eta, v, grid.hx, grid.hy))) * grid.cell_area
    return abs(total) < 1e-11, f"flux divergence integrates to {total:.2e}"


def check_backends_match():
    if "compiled" not in kernels.available_backends():
        return True, "compiled backend absent, python fallback active (skipped)"
    grid = make_grid(40)
    f = _random_field(grid, 5)
    v = _random_field(grid, 6)
    previous = kernels.backend_name()
    try:
        kernels.set_backend("compiled")
        a = (kernels.laplacian(f, grid.hx, grid.hy),
             kernels.chemo_flux_div(f, v, grid.hx, grid.hy),
             kernels.signed_power(f - 0.5, 2.5))
        kernels.set_backend("python")
        b = (kernels.laplacian(f, grid.hx, grid.hy),
             kernels.chemo_flux_div(f, v, grid.hx, grid.hy),
             kernels.signed_power(f - 0.5, 2.5))
    finally:
        kernels.set_backend(previous)
    same = all(np.array_equal(x, y) for x, y in zip(a, b))
    return same, "compiled and python kernels agree bitwise" if same else "backends differ"


def check_noise_replay():
    grid = make_grid(24)
    basis = SpectralBasis(grid)
    spec = NoiseSpec(sigma=0.2, delta=2.5, kmax=6, seed=99)
    a = build_sampler(spec, basis, stream=3)
    first = a.sample_increment(1e-3)
    second = a.restarted().sample_increment(1e-3)
    same = np.array_equal(first, second)
    return same, "restarted sampler replays increments bitwise" if same else "replay mismatch"


def check_noise_variance():
    grid = make_grid(16)
    basis = SpectralBasis(grid)
    spec = NoiseSpec(sigma=1.0, delta=2.0, kmax=4, seed=7)
    sampler = build_sampler(spec, basis)
    dt, n = 0.01, 1500
    acc = np.zeros(grid.shape)
    for _ in range(n):
        dw = sampler.sample_increment(dt)
        acc += dw * dw
    ratio = float(np.mean(acc / n) / (dt * np.mean(sampler.variance_density)))
    return abs(ratio - 1.0) < 0.1, f"sample/target variance ratio {ratio:.3f}"


def check_hs_diagnostic():
    fine = hs_diagnostic(NoiseSpec(sigma=1.0, delta=3.0, kmax=32, seed=0), space="L2")
    rough = hs_diagnostic(NoiseSpec(sigma=1.0, delta=1.5, kmax=64, seed=0), space="H1")
    ok = fine.converged and not rough.converged
    return ok, (f"L2 tail ratio {fine.tail_ratio:.2e} (converged), "
                f"H1 tail ratio {rough.tail_ratio:.2e} (diverging)")


def check_v_eigenmode_decay():
    grid = make_grid(32)
    basis = SpectralBasis(grid)
    p = ModelParams(r_u=1.0, r_v=1.0, chi=0.0, alpha=0.5, beta=0.0,
                    sigma_u=0.0, sigma_v=0.0, gamma=2.0)
    v = basis.eigenfunction(1, 0) + 2.0
    dt, nsteps, t = 1e-4, 200, 0.02
    eta = np.zeros(grid.shape)
    for _ in range(nsteps):
        v = step_v(v, eta, p, None, dt, basis)
    lam = eigenvalue((1, 0))
    expect = (basis.eigenfunction(1, 0) * math.exp(-(p.r_v * lam + p.alpha) * t)
              + 2.0 * math.exp(-p.alpha * t))
    err = float(np.max(np.abs(v - expect)) / np.max(np.abs(expect)))
    return err < 1e-3, f"two-mode decay error {err:.2e} at t={t}"


def check_mass_conservation():
    grid = make_grid(32)
    basis = SpectralBasis(grid)
    p = ModelParams(r_u=0.1, r_v=0.1, chi=0.5, alpha=0.5, beta=0.5,
                    sigma_u=0.0, sigma_v=0.2, gamma=2.0)
    u0 = _random_field(grid, 7)
    v0 = _random_field(grid, 8)
    schedule = make_uniform_schedule(0.01, cfl_dt(u0, v0, p, grid, dt_max=1e-3))
    w2 = build_sampler(NoiseSpec(sigma=0.2, delta=2.5, kmax=6, seed=11), basis, 1)
    traj = direct_coupled_solve(u0, v0, None, w2, p, schedule, basis)
    drift = abs(traj.diagnostics.mass_final - traj.diagnostics.mass_initial)
    drift /= traj.diagnostics.mass_initial
    return drift < 1e-12, f"relative mass drift {drift:.2e} over {schedule.nsteps} steps"


def check_barenblatt_short():
    grid = make_grid(64)
    basis = SpectralBasis(grid)
    p = ModelParams(r_u=1.0, r_v=0.1, chi=0.0, alpha=0.5, beta=0.5,
                    sigma_u=0.0, sigma_v=0.0, gamma=2.0)
    t0, horizon = 0.01, 0.02
    u0 = barenblatt_field(grid, p.gamma, 0.05, t0)
    v0 = np.full(grid.shape, 0.5)
    schedule = make_uniform_schedule(horizon, cfl_dt(u0, v0, p, grid, dt_max=1e-3))
    v_path = np.broadcast_to(v0, (schedule.nsteps + 1,) + grid.shape)
    eta_path = np.broadcast_to(u0, (schedule.nsteps,) + grid.shape)  # unused, chi = 0
    u_path, _ = solve_u_path(u0, v_path, eta_path, None, p, schedule, grid)
    exact = barenblatt_field(grid, p.gamma, 0.05, t0 + horizon)
    err = lp_norm(u_path[-1] - exact, 1, grid)
    return err < 5e-3, f"L1 error vs self-similar profile {err:.2e}"


def check_positivity_clip_free():
    grid = make_grid(32)
    basis = SpectralBasis(grid)
    p = ModelParams(r_u=0.1, r_v=0.1, chi=0.5, alpha=0.5, beta=0.5,
                    sigma_u=0.2, sigma_v=0.2, gamma=2.0)
    u0 = 1.0 + 0.5 * basis.eigenfunction(1, 1) / basis.eigenfunction(1, 1).max()
    v0 = np.full(grid.shape, 0.5)
    schedule = make_uniform_schedule(0.01, cfl_dt(u0, v0, p, grid, dt_max=1e-3))
    w1 = build_sampler(NoiseSpec(sigma=0.2, delta=2.5, kmax=6, seed=5), basis, 0)
    w2 = build_sampler(NoiseSpec(sigma=0.2, delta=2.5, kmax=6, seed=5), basis, 1)
    traj = direct_coupled_solve(u0, v0, w1, w2, p, schedule, basis,
                                mu=correction_mu(w1, p.sigma_u))
    ok = (traj.diagnostics.clip_fraction == 0.0
          and float(np.min(traj.v)) >= -1e-10 * float(np.max(traj.v)))
    return ok, (f"clip fraction {traj.diagnostics.clip_fraction:.1e}, "
                f"min v {float(np.min(traj.v)):.3e}")


def check_picard_decoupled():
    grid = make_grid(32)
    basis = SpectralBasis(grid)
    p = ModelParams(r_u=0.1, r_v=0.1, chi=0.0, alpha=0.5, beta=0.5,
                    sigma_u=0.2, sigma_v=0.2, gamma=2.0)
    u0 = _random_field(grid, 9)
    v0 = np.full(grid.shape, 0.5)
    schedule = make_uniform_schedule(0.01, 1e-3)
    w1 = build_sampler(NoiseSpec(sigma=0.2, delta=2.5, kmax=6, seed=21), basis, 0)
    w2 = build_sampler(NoiseSpec(sigma=0.2, delta=2.5, kmax=6, seed=21), basis, 1)
    traj, report = picard_iterate(u0, v0, w1, w2, p, schedule, basis)
    direct = direct_coupled_solve(u0, v0, w1, w2, p, schedule, basis)
    gap = xnorm_distance(traj, direct, basis)
    ok = report.converged and report.iterations == 2 and gap < 1e-12
    return ok, f"{report.iterations} iterations, gap to direct solve {gap:.2e}"


def check_norm_closed_forms():
    grid = make_grid(32)
    basis = SpectralBasis(grid)
    c = np.full(grid.shape, 0.7)
    errs = [
        abs(lp_norm(c, 3, grid) - 0.7),
        abs(sobolev2_norm(c, -1.0, basis) - 0.7),
        abs(h1_norm(c, 2, grid) - 0.7),
        abs(sobolev2_norm(basis.eigenfunction(1, 0), -1.0, basis)
            - (1.0 + eigenvalue((1, 0))) ** -0.5),
    ]
    f = _random_field(grid, 10)
    errs.append(float(np.max(np.abs(bessel_lp_norm(f, 0.0, 2, basis) - lp_norm(f, 2, grid)))))
    worst = max(errs)
    return worst < 1e-10, f"worst closed-form gap {worst:.2e}"


def check_runst_scale_invariance():
    grid = make_grid(32)
    basis = SpectralBasis(grid)
    w = _random_field(grid, 11)
    base = runst_ratio(w, 2.0, 0.4, basis)
    scaled = runst_ratio(123.456 * w, 2.0, 0.4, basis)
    err = abs(scaled - base) / base
    return err < 1e-12, f"ratio drift under rescaling {err:.2e}"


def check_snapshot_roundtrip():
    grid = make_grid(16, 24)
    f = _random_field(grid, 12)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "field.kspm")
        write_snapshot(path, f)
        g = read_snapshot(path)
        same = np.array_equal(f, g)
        try:
            with open(path, "rb") as handle:
                head = handle.read(10)
            with open(path, "wb") as handle:
                handle.write(head)
            read_snapshot(path)
            rejects = False
        except SnapshotFormatError:
            rejects = True
    ok = same and rejects
    return ok, "write/read bitwise, truncation rejected" if ok else "round trip broken"


def check_config_strictness():
    try:
        parse_config("gamma = 2\nnot_a_key = 1\n")
        strict = False
    except ConfigError as err:
        strict = any("unknown key" in p for p in err.problems)
    try:
        parse_config("gamma = 0.5\n")
        signed = False
    except ConfigError as err:
        signed = any("gamma must exceed 1" in p for p in err.problems)
    ok = strict and signed
    return ok, "unknown keys and sign violations rejected" if ok else "lax parsing"


CHECKS = [
    ("transform round trip", check_transform_roundtrip),
    ("transform routes agree", check_transform_routes_agree),
    ("discrete parseval", check_parseval),
    ("laplacian eigenvectors", check_laplacian_eigenvector),
    ("flux telescoping", check_flux_telescoping),
    ("kernel backends match", check_backends_match),
    ("noise replay", check_noise_replay),
    ("noise variance", check_noise_variance),
    ("covariance trace diagnostic", check_hs_diagnostic),
    ("attractant eigenmode decay", check_v_eigenmode_decay),
    ("mass conservation", check_mass_conservation),
    ("self-similar profile", check_barenblatt_short),
    ("positivity without clipping", check_positivity_clip_free),
    ("decoupled fixed point", check_picard_decoupled),
    ("norm closed forms", check_norm_closed_forms),
    ("ratio scale invariance", check_runst_scale_invariance),
    ("snapshot round trip", check_snapshot_roundtrip),
    ("config strictness", check_config_strictness),
]


def run_all(out=None):
    """Run every check, print one line per check, return the failure count."""
    if out is None:
        out = sys.stdout  # bound late so stream redirection is honored
    failures = 0
    for name, func in CHECKS:
        try:
            ok, detail = func()
        except Exception as err:  # a crashed check is a failed check
            ok, detail = False, f"raised {type(err).__name__}: {err}"
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=out)
        if not ok:
            failures += 1
    verdict = "all checks passed" if failures == 0 else f"{failures} check(s) failed"
    print(verdict, file=out)
    return failures


if __name__ == "__main__":
    raise SystemExit(3 if run_all() else 0)
