"""Backend benchmark: compiled stencils vs the NumPy fallback.

Times each stencil kernel and one short end-to-end path on both backends
and prints the speedup.  Run as ``python -m kspm.bench``; the numbers are
informational (no thresholds), the bitwise agreement of the two backends is
what the test suite asserts.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .fixed_point import direct_coupled_solve
from .grid import SpectralBasis, make_grid
from .noise import NoiseSpec, build_sampler, correction_mu
from .params import ModelParams, make_uniform_schedule
from .ustep import cfl_dt


def _median_time(func, repeats=9):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        func()
        samples.append(time.perf_counter() - t0)
    samples.sort()
    return samples[len(samples) // 2]


def bench_kernels(n=192, repeats=9):
    """Median per-call times for each stencil kernel, per backend."""
    grid = make_grid(n)
    rng = np.random.default_rng(42)
    f = rng.uniform(0.2, 1.0, grid.shape)
    v = rng.uniform(0.2, 1.0, grid.shape)
    cases = {
        "laplacian": lambda: kernels.laplacian(f, grid.hx, grid.hy),
        "gradient": lambda: kernels.gradient(f, grid.hx, grid.hy),
        "chemo_flux_div": lambda: kernels.chemo_flux_div(f, v, grid.hx, grid.hy),
    }
    rows = {}
    for backend in kernels.available_backends():
        kernels.set_backend(backend)
        for name, func in cases.items():
            func()  # warm up allocators and code paths
            rows.setdefault(name, {})[backend] = _median_time(func, repeats)
    return rows


def bench_path(n=64, horizon=0.01, repeats=3):
    """Median wall time of a short coupled path, per backend."""
    grid = make_grid(n)
    basis = SpectralBasis(grid)
    p = ModelParams(r_u=0.1, r_v=0.1, chi=0.5, alpha=0.5, beta=0.5,
                    sigma_u=0.2, sigma_v=0.2, gamma=2.0)
    rng = np.random.default_rng(7)
    u0 = rng.uniform(0.5, 1.5, grid.shape)
    v0 = np.full(grid.shape, 0.5)
    schedule = make_uniform_schedule(horizon, cfl_dt(u0, v0, p, grid, dt_max=1e-3))
    spec = NoiseSpec(sigma=0.2, delta=2.5, kmax=8, seed=3)

    def run():
        w1 = build_sampler(spec, basis, 0)
        w2 = build_sampler(spec, basis, 1)
        direct_coupled_solve(u0, v0, w1, w2, p, schedule, basis,
                             mu=correction_mu(w1, p.sigma_u),
                             snapshot_idx=np.array([0, schedule.nsteps]))

    times = {}
    for backend in kernels.available_backends():
        kernels.set_backend(backend)
        run()
        times[backend] = _median_time(run, repeats)
    return schedule.nsteps, times


def main():
    previous = kernels.backend_name()
    try:
        print(f"available backends: {', '.join(kernels.available_backends())}")
        if "compiled" not in kernels.available_backends():
            print("compiled extension not built; timing the fallback only")
        rows = bench_kernels()
        print("\nper-kernel median time on a 192x192 grid:")
        print(f"{'kernel':<16} " + " ".join(f"{b:>12}" for b in sorted(rows['laplacian'])))
        for name, per_backend in rows.items():
            cells = " ".join(f"{per_backend[b] * 1e6:>10.1f}us" for b in sorted(per_backend))
            line = f"{name:<16} {cells}"
            if len(per_backend) == 2:
                line += f"   x{per_backend['python'] / per_backend['compiled']:.1f}"
            print(line)
        nsteps, times = bench_path()
        print(f"\ncoupled path, 64x64, {nsteps} steps:")
        for backend in sorted(times):
            print(f"{backend:<16} {times[backend]:.3f} s")
        if len(times) == 2:
            print(f"speedup          x{times['python'] / times['compiled']:.1f}")
    finally:
        kernels.set_backend(previous)


if __name__ == "__main__":
    main()
