"""Command-line front end.

Exit codes: 0 success, 1 strict-mode predicate failed after a completed run,
2 bad input (config syntax, unknown keys, disconnected graph, empty sweep),
3 parameter range or strict gain-bound violation, 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import config as cfgmod
from . import scenarios
from .config import ConfigError, RunConfig
from .errors import (
    AssumptionError,
    ConnectivityError,
    ConvexityError,
    NumericalError,
    ParameterError,
    ValidationError,
)
from .oracle import centralized_minimize
from .sim import simulate, summarize, write_csv


EXIT_OK = 0
EXIT_PREDICATE = 1
EXIT_INPUT = 2
EXIT_PARAMS = 3
EXIT_DIVERGED = 4

SWEEP_PARAMS = ("T_m", "c", "p", "eta")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load_config(args) -> RunConfig:
    if args.config:
        cfg = cfgmod.load(args.config)
    else:
        cfg = RunConfig(scenario="numerical_A")
    cfg = cfgmod.apply_overrides(cfg, args.set or [])
    if getattr(args, "output_dir", None):
        cfg.output_dir = args.output_dir
    return cfg


def _format_config_error(exc: ConfigError) -> str:
    if exc.line is not None:
        return f"{exc} [line {exc.line}, column {exc.column}]"
    return str(exc)


def execute(cfg: RunConfig, out_dir: Path) -> dict:
    """Validate, simulate and write one run into ``out_dir``; return the summary dict."""
    sc = cfgmod.build_scenario(cfg)
    report = scenarios.validation_report(sc, strict=False)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "validation.txt").write_text(report.render() + "\n")
    (out_dir / "config.toml").write_text(cfg.to_toml())
    if cfg.strict and not report.passed:
        failed = ", ".join(f"{c.name} = {c.actual:g} < {c.required:g}" for c in report.checks if not c.passed)
        raise CliError(f"gain bounds violated in strict mode: {failed}", EXIT_PARAMS)

    t0 = time.perf_counter()
    traj = simulate(sc)
    wall = time.perf_counter() - t0
    summary = summarize(sc, traj, wall_clock=wall)
    write_csv(traj, out_dir / "trajectory.csv")
    header = "\n".join(f"# {line}" for line in report.render().splitlines())
    meta = "\n".join(f"# {k} = {v}" for k, v in sorted(sc.metadata.items()))
    (out_dir / "summary.txt").write_text(f"{header}\n{meta}\n{summary.render(timing=False)}\n")
    (out_dir / "summary.json").write_text(summary.to_json(timing=False) + "\n")
    result = summary.as_dict()
    result["validation_passed"] = report.passed
    result["_trajectory"] = traj
    result["_reference"] = sc.reference
    return result


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = cfg.resolved_output_dir()
    if args.print_config:
        sys.stdout.write(cfg.to_toml())
    res = execute(cfg, out)
    print(f"scenario {res['scenario']} ({res['variant']}): settle_time = {res['settle_time']:.4g} s, "
          f"final error = {res['final_error']:.3e}, wall clock = {res['wall_clock']:.2f} s")
    if res["variant"] == "time_varying":
        print(f"smoothness: max per-step jump = {res['max_step_diag']:.4g}, "
              f"control total variation = {res['control_total_variation']:.4g}"
              f" (boundary layer {'on' if res['boundary_layer'] else 'off'})")
    print(f"outputs written to {out}")
    if cfg.strict and not res["within_Tm"]:
        print(f"strict mode: settle_time {res['settle_time']:.4g} exceeds T_m = {res['T_m']:g}",
              file=sys.stderr)
        return EXIT_PREDICATE
    return EXIT_OK


def _sweep_worker(job):
    cfg_dict, out_dir = job
    cfg = cfgmod.from_dict(cfg_dict)
    try:
        res = execute(cfg, Path(out_dir))
    except CliError as exc:
        return {"error": str(exc), "code": exc.code}
    except ParameterError as exc:
        return {"error": str(exc), "code": EXIT_PARAMS}
    except NumericalError as exc:
        return {"error": str(exc), "code": EXIT_DIVERGED}
    except (ValidationError, ConnectivityError, ConvexityError, AssumptionError) as exc:
        return {"error": str(exc), "code": EXIT_INPUT}
    traj, ref = res.pop("_trajectory"), res.pop("_reference")
    res["series"] = (traj.times, traj.consensus_err, traj.errors_to(ref))
    return res


def _parse_values(raw: str) -> list:
    items = [v for v in (s.strip() for s in raw.split(",")) if v]
    values = []
    for v in items:
        try:
            values.append(float(v))
        except ValueError:
            raise CliError(f"sweep value {v!r} is not a number", EXIT_INPUT) from None
    return values


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    values = _parse_values(args.values)
    if not values:
        raise CliError("sweep needs at least one value", EXIT_INPUT)
    root = cfg.resolved_output_dir() / f"sweep_{args.param}"
    jobs = []
    for v in values:
        sub = cfgmod.apply_overrides(cfg, [f"{args.param}={v!r}"])
        sub.output_dir = str(root / f"{args.param}={v:g}")
        jobs.append((sub.to_dict(), sub.output_dir))

    workers = max(1, min(args.workers, len(jobs)))
    if workers == 1:
        results = [_sweep_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))

    # merge in value order on the main thread
    root.mkdir(parents=True, exist_ok=True)
    failures = [(v, r) for v, r in zip(values, results) if "error" in r]
    with (root / "sweep_summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([args.param, "settle_time", "within_Tm", "final_error", "final_consensus_err", "status"])
        for v, r in zip(values, results):
            if "error" in r:
                w.writerow([f"{v:.17g}", "", "", "", "", "failed"])
            else:
                w.writerow([f"{v:.17g}", f"{r['settle_time']:.17g}", r["within_Tm"],
                            f"{r['final_error']:.17g}", f"{r['final_consensus_err']:.17g}", "ok"])
    with (root / "sweep_series.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([args.param, "t", "consensus_err", "distance_to_optimum"])
        for v, r in zip(values, results):
            if "error" in r:
                continue
            for t, ce, d in zip(*r["series"]):
                w.writerow([f"{v:.17g}", f"{t:.17g}", f"{ce:.17g}", f"{d:.17g}"])

    for v, r in zip(values, results):
        if "error" in r:
            print(f"{args.param} = {v:g}: FAILED ({r['error']})")
        else:
            print(f"{args.param} = {v:g}: settle_time = {r['settle_time']:.4g} s "
                  f"(T_m = {r['T_m']:g}), final error = {r['final_error']:.3e}")
    print(f"sweep outputs written to {root}")
    if failures:
        v, r = failures[0]
        print(f"sub-run {args.param} = {v:g} failed: {r['error']}", file=sys.stderr)
        return r["code"] or 1
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    sc = cfgmod.build_scenario(cfg)
    report = scenarios.validation_report(sc, strict=False)
    print(f"scenario {sc.name}, {sc.n_agents} agents, topology {sc.metadata.get('topology', '?')}")
    print(report.render())
    print("minimal gains: " + ", ".join(f"{k} >= {v:.6g}" for k, v in report.minimal_gains().items()))
    if cfg.strict and not report.passed:
        return EXIT_PARAMS
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _load_config(args)
    sc = cfgmod.build_scenario(cfg)
    if any(f.time_varying for f in sc.costs):
        print(f"scenario {sc.name}: time-varying optimum")
        for t in np.linspace(0.0, sc.t_end, args.samples):
            sol = centralized_minimize(sc.costs, sc.reference(t), t=t)
            print(f"t = {t:8.4f}  x* = [{', '.join(f'{v:.10g}' for v in sol.x_star)}]  "
                  f"residual = {sol.residual:.2e}")
        return EXIT_OK
    sol = centralized_minimize(sc.costs, sc.x0.mean(axis=0))
    print(f"scenario {sc.name}")
    print(f"x* = [{', '.join(f'{v:.10g}' for v in sol.x_star)}]")
    print(f"residual = {sol.residual:.3e}, Newton iterations = {sol.iterations}")
    return EXIT_OK


def cmd_list(args) -> int:
    width = max(len(n) for n in scenarios.SCENARIOS)
    for name in scenarios.SCENARIOS:
        print(f"{name.ljust(width)}  {scenarios.DESCRIPTIONS.get(name, '')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zgsopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, outputs=True):
        p.add_argument("set", nargs="*", metavar="KEY=VALUE",
                       help="dotted-key overrides, e.g. scenario=encirclement T_m=4 boundary_layer=true")
        p.add_argument("-c", "--config", help="TOML config file")
        if outputs:
            p.add_argument("-o", "--output-dir",
                           help=f"output directory (default ${cfgmod.OUTPUT_DIR_ENV} or ./{cfgmod.DEFAULT_OUTPUT_DIR})")

    p = sub.add_parser("run", help="simulate one scenario and write CSV/summary/validation files")
    common(p)
    p.add_argument("--print-config", action="store_true", help="echo the effective config as TOML")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat a run over values of one parameter")
    common(p)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--workers", type=int, default=min(4, os.cpu_count() or 1),
                   help="parallel sub-runs (default min(4, cpus))")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="print sampled constants and gain bounds")
    common(p, outputs=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="print the centralized optimum")
    common(p, outputs=False)
    p.add_argument("--samples", type=int, default=5, help="time samples for time-varying costs")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("list", help="list built-in scenarios")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"error: {_format_config_error(exc)}", file=sys.stderr)
        return EXIT_INPUT
    except ParameterError as exc:
        print(f"error: parameter out of range: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except ConnectivityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValidationError, ConvexityError, AssumptionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
