"""Command-line front end.

Five subcommands: ``simulate`` (one path, snapshots + summary.csv),
``ensemble`` (moment estimates, moments.csv + paths.csv), ``fixed-point``
(iteration history as iterations.csv), ``verify`` (invariant battery), and
``norms`` (norm batch on a stored field).  Every data run writes a
manifest.json whose embedded config text regenerates the outputs bitwise;
only the recorded wall clock differs between repeats.

Exit codes: 0 success, 1 usage or configuration problem, 2 numerical
failure, 3 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time

from . import __version__, kernels, verify
from .config import load_config
from .errors import ConfigError, KspmError, NumericalError
from .fixed_point import picard_iterate
from .grid import SpectralBasis, make_grid
from .montecarlo import (
    level_assets,
    path_functionals,
    path_samplers,
    run_ensemble,
    simulate_path,
)
from .noise import correction_mu
from .norms import NormRequest, evaluate_norm, lp_norm
from .snapshots import Manifest, read_snapshot, write_manifest, write_snapshot
from .ustep import barenblatt_field


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2 (2 means numerics here)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_run_flags(sub):
    sub.add_argument("--config", required=True, help="path to a key = value config file")
    sub.add_argument("--out", help="output directory (default: outdir from the config)")
    sub.add_argument("--seed", type=int, help="override the base seed")
    sub.add_argument("--paths", type=int, help="override the number of paths")
    sub.add_argument("--resolution", type=int, help="override the grid resolution")
    sub.add_argument("--method", choices=("direct", "picard"), help="override the solver")


def build_parser():
    parser = _Parser(prog="kspm", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"kspm {__version__}")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = subs.add_parser("simulate",
                          help="integrate a single path and store snapshots")
    _add_run_flags(sim)
    sim.set_defaults(func=cmd_simulate)

    ens = subs.add_parser("ensemble",
                          help="estimate the moment functionals over many paths")
    _add_run_flags(ens)
    ens.set_defaults(func=cmd_ensemble)

    fix = subs.add_parser("fixed-point",
                          help="run the solution-operator iteration and record distances")
    _add_run_flags(fix)
    fix.set_defaults(func=cmd_fixed_point)

    ver = subs.add_parser("verify",
                          help="run the invariant battery")
    ver.set_defaults(func=cmd_verify)

    nrm = subs.add_parser("norms",
                          help="evaluate norms of a stored field")
    nrm.add_argument("--snapshot", required=True, help="field file to measure")
    nrm.add_argument("--norm", action="append", required=True, metavar="SPEC",
                     help="norm spec like 'lp,p=2' or 'sobolev2,s=-1'; repeatable")
    nrm.add_argument("--out", help="write CSV here instead of stdout")
    nrm.set_defaults(func=cmd_norms)
    return parser


def _effective_config(args):
    """Config file with command-line overrides folded in."""
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.paths is not None:
        overrides["num_paths"] = args.paths
    if args.resolution is not None:
        overrides["resolution"] = args.resolution
    if args.method is not None:
        overrides["method"] = args.method
    if args.out is not None:
        overrides["outdir"] = args.out
    if overrides:
        cfg = cfg.replace(**overrides)
    cfg.to_ensemble()  # surface override-induced range problems before any work
    return cfg, overrides


def _start_manifest(command, cfg, overrides):
    return Manifest(
        command=command,
        package_version=__version__,
        backend=kernels.backend_name(),
        config_text=cfg.as_text(),
        overrides=overrides,
        grid=(cfg.resolution, cfg.resolution),
        seed=cfg.seed,
        num_paths=cfg.num_paths,
        method=cfg.method,
        wall_clock_s=0.0,
    )


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _finish(outdir, manifest, started):
    manifest.wall_clock_s = time.perf_counter() - started
    write_manifest(os.path.join(outdir, "manifest.json"), manifest)


def cmd_simulate(args):
    cfg, overrides = _effective_config(args)
    outdir = cfg.outdir
    os.makedirs(outdir, exist_ok=True)
    started = time.perf_counter()
    ens = cfg.to_ensemble(num_paths=1)
    manifest = _start_manifest("simulate", cfg, overrides)

    traj = simulate_path(ens, 0)
    grid, basis, *_ = level_assets(ens)
    record = path_functionals(traj, ens.params, basis)

    if cfg.u0[0] == "barenblatt" and cfg.chi == 0.0 and cfg.sigma_u == 0.0:
        # deterministic degenerate-diffusion oracle: the self-similar profile
        # advances by r_u * horizon in rescaled time
        _, mass, t0 = cfg.u0
        exact = barenblatt_field(grid, cfg.gamma, mass, t0 + cfg.r_u * cfg.horizon)
        record["barenblatt_l1_error"] = lp_norm(traj.u[-1] - exact, 1, grid)

    snapshot_rows = []
    for slot, t in enumerate(traj.times):
        u_name = f"u_{slot:04d}.kspm"
        v_name = f"v_{slot:04d}.kspm"
        write_snapshot(os.path.join(outdir, u_name), traj.u[slot])
        write_snapshot(os.path.join(outdir, v_name), traj.v[slot])
        manifest.add_output(u_name, os.path.join(outdir, u_name))
        manifest.add_output(v_name, os.path.join(outdir, v_name))
        snapshot_rows.append([slot, repr(float(t)), u_name, v_name])

    _write_csv(os.path.join(outdir, "snapshots.csv"),
               ["slot", "time", "u_file", "v_file"], snapshot_rows)
    manifest.add_output("snapshots.csv", os.path.join(outdir, "snapshots.csv"))

    header = list(record)
    _write_csv(os.path.join(outdir, "summary.csv"),
               header, [[repr(float(record[k])) for k in header]])
    manifest.add_output("summary.csv", os.path.join(outdir, "summary.csv"))
    manifest.extra["snapshot_count"] = len(traj.times)
    _finish(outdir, manifest, started)
    print(f"simulate: {len(traj.times)} snapshots and summary.csv in {outdir}")
    return 0


def cmd_ensemble(args):
    cfg, overrides = _effective_config(args)
    outdir = cfg.outdir
    os.makedirs(outdir, exist_ok=True)
    started = time.perf_counter()
    ens = cfg.to_ensemble()
    manifest = _start_manifest("ensemble", cfg, overrides)

    est = run_ensemble(ens)
    metrics = sorted(est.mean)
    _write_csv(os.path.join(outdir, "moments.csv"),
               ["metric", "mean", "se"],
               [[m, repr(est.mean[m]), repr(est.se[m])] for m in metrics])
    manifest.add_output("moments.csv", os.path.join(outdir, "moments.csv"))

    per_path_header = ["path"] + metrics
    rows = [[r["path"]] + [repr(float(r[m])) for m in metrics] for r in est.records]
    _write_csv(os.path.join(outdir, "paths.csv"), per_path_header, rows)
    manifest.add_output("paths.csv", os.path.join(outdir, "paths.csv"))

    manifest.failures = est.failures
    manifest.extra["completed"] = est.completed
    manifest.extra["min_u"] = est.min_u
    manifest.extra["min_v"] = est.min_v
    manifest.extra["clip_fraction_max"] = est.clip_fraction_max
    _finish(outdir, manifest, started)
    print(f"ensemble: {est.completed}/{ens.num_paths} paths, moments.csv in {outdir}")
    for key in ("q1_total", "q2_total", "q3_total", "q4_total"):
        print(f"  {key} = {est.mean[key]:.6g} (se {est.se[key]:.2g})")
    return 0


def cmd_fixed_point(args):
    cfg, overrides = _effective_config(args)
    outdir = cfg.outdir
    os.makedirs(outdir, exist_ok=True)
    started = time.perf_counter()
    ens = cfg.to_ensemble(num_paths=1)
    manifest = _start_manifest("fixed-point", cfg, overrides)

    grid, basis, u0, v0, schedule, _ = level_assets(ens)
    w1, w2 = path_samplers(ens, basis, 0)
    mu = correction_mu(w1, cfg.sigma_u) if w1 is not None else None
    traj, report = picard_iterate(u0, v0, w1, w2, ens.params, schedule, basis,
                                  tol=ens.picard_tol, max_iter=ens.picard_max_iter, mu=mu)

    _write_csv(os.path.join(outdir, "iterations.csv"),
               ["iteration", "sup_dual_distance"],
               [[i + 1, repr(d)] for i, d in enumerate(report.distances)])
    manifest.add_output("iterations.csv", os.path.join(outdir, "iterations.csv"))
    write_snapshot(os.path.join(outdir, "u_final.kspm"), traj.u[-1])
    manifest.add_output("u_final.kspm", os.path.join(outdir, "u_final.kspm"))
    manifest.extra["converged"] = report.converged
    manifest.extra["iterations"] = report.iterations
    manifest.extra["tol"] = report.tol
    _finish(outdir, manifest, started)
    state = "converged" if report.converged else "NOT converged"
    print(f"fixed-point: {state} after {report.iterations} iterations "
          f"(tol {report.tol:.3e}), history in {outdir}/iterations.csv")
    return 0 if report.converged else 2


def cmd_verify(args):
    failures = verify.run_all()
    return 3 if failures else 0


def _parse_norm_spec(spec):
    tokens = [t.strip() for t in spec.split(",") if t.strip()]
    if not tokens:
        raise ConfigError(f"empty norm spec {spec!r}")
    kind, params = tokens[0], {}
    for token in tokens[1:]:
        if "=" not in token:
            raise ConfigError(f"norm spec {spec!r}: expected name=value, got {token!r}")
        name, value = (part.strip() for part in token.split("=", 1))
        try:
            params[name] = float(value)
        except ValueError:
            raise ConfigError(f"norm spec {spec!r}: {name} needs a number") from None
    try:
        return NormRequest(kind=kind, **params)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"norm spec {spec!r}: {err}") from None


def cmd_norms(args):
    requests = [_parse_norm_spec(spec) for spec in args.norm]
    try:
        f = read_snapshot(args.snapshot)
    except OSError as err:
        raise ConfigError(f"cannot read snapshot {args.snapshot}: {err}") from None
    basis = SpectralBasis(make_grid(*f.shape))
    rows = []
    for spec, request in zip(args.norm, requests):
        rows.append([spec, repr(float(evaluate_norm(f, request, basis)))])
    if args.out:
        _write_csv(args.out, ["norm", "value"], rows)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["norm", "value"])
        writer.writerows(rows)
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"kspm: configuration error: {err}", file=sys.stderr)
        return 1
    except NumericalError as err:
        print(f"kspm: numerical failure: {err}", file=sys.stderr)
        return 2
    except KspmError as err:
        print(f"kspm: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
