"""Command-line entry point ``maxenergy``.

Exit codes: 0 success, 1 failed verification, 2 usage or configuration
error, 3 infeasible problem or non-stationary run, 4 energy trace failed
the monotonicity re-check.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

import numpy as np

from maxenergy import __version__, energy, oracles, pointset, rearrange
from maxenergy.energy import DensityField
from maxenergy.geometry import Domain
from maxenergy.kernels import KernelSpec
from maxenergy.runner import io
from maxenergy.runner.config import ConfigError, DiscreteConfig, ExperimentConfig, build_domain, load_json, resolve_bounds

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_MONOTONE = 0, 1, 2, 3, 4


class RunError(RuntimeError):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _out_dir(cli_out: str | None, cfg_out: str | None, config_path: str) -> str:
    out = cli_out or cfg_out or os.path.join("out", os.path.splitext(os.path.basename(config_path))[0])
    os.makedirs(out, exist_ok=True)
    return out


def _initial_density(cfg: ExperimentConfig, domain: Domain, rp: float, rm: float) -> DensityField:
    s = cfg.solver
    if s["init"] == "random":
        return rearrange.random_admissible_init(domain, rp, rm, s["seed"])
    if s["init"] == "uniform":
        return rearrange.uniform_init(domain, rp, rm)
    if s["init"] == "blob":
        return rearrange.blob_init(domain, s["blob_centre"], rp, rm)
    values = io.read_field_csv(os.path.join(cfg.base_dir, s["init_file"]), domain.n_nodes)
    rho = DensityField(values, rm, rp)
    try:
        rho.validate(domain, mass_tol=1e-9, bang_bang=False)
    except ValueError as exc:
        raise RunError(f"init_file is not admissible: {exc}", EXIT_USAGE) from exc
    return rho


def run_solve_density(
    cfg: ExperimentConfig,
    out_dir: str,
    snapshot_every: int | None = None,
    threads: int | None = None,
) -> tuple[DensityField, rearrange.SolveReport]:
    """Run the rearrangement iteration for one config and write all artifacts."""
    try:
        domain = build_domain(cfg.domain)
        rp, rm = resolve_bounds(cfg.bounds, domain)
        cfg.kernel.validate_for_dim(domain.intrinsic_dim)
    except ValueError as exc:
        code = EXIT_INFEASIBLE if "infeasible" in str(exc) else EXIT_USAGE
        raise RunError(str(exc), code) from exc
    init = _initial_density(cfg, domain, rp, rm)
    every = cfg.output["snapshot_every"] if snapshot_every is None else snapshot_every
    snap_dir = os.path.join(out_dir, "snapshots")

    def snapshot(s: int, rho: DensityField, _phi) -> None:
        if every and s % every == 0:
            os.makedirs(snap_dir, exist_ok=True)
            io.write_domain_csv(os.path.join(snap_dir, f"density_{s:04d}.csv"), domain, rho.values)
            io.write_pgm(os.path.join(snap_dir, f"density_{s:04d}.pgm"), domain, rho)

    s = cfg.solver
    rho, report = rearrange.solve(
        domain, cfg.kernel, rp, rm, init=init, tol=s["tol"], max_iter=s["max_iter"],
        method=s["method"], threads=threads, callback=snapshot,
    )
    violations = rearrange.monotonicity_violations(report)
    if violations:
        raise RunError("energy trace is not monotone:\n  " + "\n  ".join(violations), EXIT_MONOTONE)

    h_weight = float(np.median(domain.weights))
    summary = {
        **report.to_dict(),
        "domain": {**domain.descriptor, "n_nodes": domain.n_nodes, "total_measure": domain.total_measure,
                   "intrinsic_dim": domain.intrinsic_dim, "metric": domain.metric},
        "kernel": cfg.kernel.to_dict(),
        "kernel_completely_monotone": cfg.kernel.completely_monotone,
        "rho_plus": rp,
        "rho_minus": rm,
        "final_energy": report.energies[-1],
        "fractional_nodes": [int(i) for i in rho.fractional],
        "kkt_violating_cells": report.kkt_violating_mass / h_weight,
        "tie_break": "ascending node index",
        "init": s["init"],
        "seed": s["seed"],
    }
    io.write_domain_csv(os.path.join(out_dir, "density.csv"), domain, rho.values)
    io.write_pgm(os.path.join(out_dir, "density.pgm"), domain, rho)
    io.write_trace_csv(os.path.join(out_dir, "trace.csv"), report)
    io.write_json(os.path.join(out_dir, "report.json"), summary)
    io.write_json(os.path.join(out_dir, "config.echo.json"), cfg.to_dict())
    return rho, report


def run_solve_discrete(cfg: DiscreteConfig, out_dir: str) -> dict:
    """Exhaustive search for the best n points on an interval; writes CSV + JSON."""
    params = pointset.AdmissibleParams(cfg.r, cfg.R, 1)
    a, b = cfg.interval
    try:
        best = pointset.brute_force_interval(cfg.n, params, cfg.kernel, cfg.coarse, cfg.refine_levels, a, b)
    except pointset.InfeasibleError as exc:
        raise RunError(str(exc), EXIT_INFEASIBLE) from exc
    from maxenergy.geometry import build_interval

    domain = build_interval(a, b, 2000)
    ok, margins = pointset.is_admissible(best.configuration, params, domain)
    report = {
        "n": cfg.n,
        "r": cfg.r,
        "R": cfg.R,
        "kernel": cfg.kernel.to_dict(),
        "energy": best.energy,
        "points": best.configuration.points[:, 0].tolist(),
        "final_step": best.step,
        "n_admissible_coarse": best.n_admissible,
        "admissible": ok,
        "margins": margins._asdict(),
        "separation": pointset.separation(best.configuration),
        "covering_radius": pointset.covering_radius(best.configuration, domain),
    }
    if cfg.n == 4 and (a, b) == (-1.0, 1.0):
        X = oracles.interval4_optimum(cfg.r, cfg.R)
        report["reference"] = {
            "case": oracles.interval4_case(cfg.r, cfg.R),
            "points": X.points[:, 0].tolist(),
            "energy": pointset.discrete_energy(X, cfg.kernel),
        }
    io.write_configuration_csv(os.path.join(out_dir, "configuration.csv"), best.configuration)
    io.write_json(os.path.join(out_dir, "report.json"), report)
    io.write_json(os.path.join(out_dir, "config.echo.json"), cfg.to_dict())
    return report


# -- argument handling ----------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--threads", type=int, metavar="N", help="worker threads for the mat-vec")
    common.add_argument("--snapshot-every", type=int, metavar="K", help="dump the density every K iterations")

    p = argparse.ArgumentParser(prog="maxenergy", description="Bounded-density kernel energy maximization.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve-density", parents=[common], help="run the rearrangement iteration")
    s.add_argument("config")
    s = sub.add_parser("solve-discrete", parents=[common], help="brute-force small-n point sets on an interval")
    s.add_argument("config")
    s = sub.add_parser("verify-analytic", parents=[common], help="check numerical solvers against closed forms")
    s.add_argument("suite", nargs="?", default="all")
    s = sub.add_parser("eval-energy", parents=[common], help="energy of a density stored on a domain")
    s.add_argument("domain_csv")
    s.add_argument("density_csv")
    s.add_argument("kernel_json")
    return p


def _cmd_solve_density(args) -> int:
    raw = load_json(args.config)
    cfg = ExperimentConfig.from_dict(raw, base_dir=os.path.dirname(os.path.abspath(args.config)))
    out = _out_dir(args.out, cfg.output["dir"], args.config)
    rho, report = run_solve_density(cfg, out, args.snapshot_every, args.threads)
    print(f"{report.stop_reason} after {report.iterations} iterations; E = {report.energies[-1]!r}; output in {out}")
    return EXIT_OK if report.stop_reason in ("stationary_set", "l1_below_tol") else EXIT_INFEASIBLE


def _cmd_solve_discrete(args) -> int:
    cfg = DiscreteConfig.from_dict(load_json(args.config))
    out = _out_dir(args.out, cfg.output["dir"], args.config)
    report = run_solve_discrete(cfg, out)
    print(f"E = {report['energy']!r} at {report['points']}; output in {out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from maxenergy.runner.verify import SUITES, run_suites

    if args.suite != "all" and args.suite not in SUITES:
        print(f"maxenergy: unknown suite {args.suite!r}; choose from all, {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    rows = [c.to_dict() for c in run_suites(args.suite)]
    table = {"suite": args.suite, "passed": all(r["passed"] for r in rows), "checks": rows}
    text = json.dumps(table, indent=2, sort_keys=True)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        io.write_json(os.path.join(args.out, "verify.json"), table)
    return EXIT_OK if table["passed"] else EXIT_FAIL


def _cmd_eval_energy(args) -> int:
    domain = io.read_domain_csv(args.domain_csv)
    values = io.read_field_csv(args.density_csv, domain.n_nodes)
    kernel = KernelSpec.from_dict(load_json(args.kernel_json))
    e = energy.energy(domain, kernel, values, threads=args.threads)
    mass = float(np.sum(values * domain.weights))
    print(json.dumps({"energy": e, "mass": mass, "n_nodes": domain.n_nodes}, sort_keys=True))
    return EXIT_OK


_COMMANDS = {
    "solve-density": _cmd_solve_density,
    "solve-discrete": _cmd_solve_discrete,
    "verify-analytic": _cmd_verify,
    "eval-energy": _cmd_eval_energy,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except RunError as exc:
        print(f"maxenergy: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, FileNotFoundError) as exc:
        print(f"maxenergy: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"maxenergy: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
