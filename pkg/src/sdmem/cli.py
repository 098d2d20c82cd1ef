"""Command-line entry points.

Exit codes: 0 success, 2 configuration error, 3 simulation failure,
4 estimation did not converge (report still written), 5 coefficient
cross-validation breach.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, SdmemError, SimulationError
from .estimate import fit
from .harness import (ExperimentConfig, coeff_check, compute_fit_bands,
                      read_dataset_csv, run_mc, write_dataset_csv,
                      write_effects_csv, write_fit_bands_csv, write_report)
from .models import ParameterVector, get_model
from .simulate import make_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_NO_CONVERGENCE = 4
EXIT_COEFF_BREACH = 5


def _cmd_simulate(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset, effects = make_dataset(config.plan())
    write_dataset_csv(out / "data.csv", dataset)
    write_effects_csv(out / "truth.csv", effects,
                      config.model().effect_names)
    print(f"wrote {out / 'data.csv'} ({dataset.n_rows} rows, "
          f"{dataset.n_units} units) and {out / 'truth.csv'}")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    model = config.model()
    method = args.method or config.methods[0]
    dataset = read_dataset_csv(args.data, model)
    start = ParameterVector(theta=config.theta, psi=config.psi,
                            bounds=tuple(model.param_bounds))
    report = fit(method, model, dataset, start, options=config.fit_options)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"report_{method}.json"
    write_report(path, report, model, design=config.to_dict()["design"])
    print(f"wrote {path} (log-likelihood {report.log_likelihood:.6g}, "
          f"{report.outer_evaluations} evaluations)")
    if not report.converged:
        print("estimation did not converge", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _cmd_mc(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    summaries = run_mc(config, args.reps, out_dir=args.out,
                       n_jobs=args.jobs)
    for method, entry in summaries.items():
        s = entry["summary"]
        print(f"[{method}] {s.n_used} used, {s.n_failed} failed")
        for i, name in enumerate(s.names):
            print(f"  {name:>10s}  mean {s.mean[i]: .6g}   "
                  f"95% [{s.q025[i]: .6g}, {s.q975[i]: .6g}]")
    return EXIT_OK


def _cmd_fitbands(args) -> int:
    raw = json.loads(Path(args.report).read_text())
    model = get_model(raw["model"])
    theta = np.array([raw["theta"][n] for n in model.theta_names])
    psi = np.array([raw["psi"][n] for n in model.psi_names])
    design = raw.get("design")
    if design is None:
        config = ExperimentConfig.from_json(args.config) if args.config else None
        if config is None:
            raise ConfigError("report carries no design; pass --config")
        grid = np.asarray(config.sample_times, dtype=float)
        t0, t_end = config.t0, config.t_end
        x0, scheme, step = config.x0, config.scheme, config.internal_step
    else:
        grid = np.asarray(design["sample_times"], dtype=float)
        t0, t_end = design["t0"], design["t_end"]
        x0 = np.asarray(design["x0"], dtype=float)
        scheme, step = design["scheme"], design["internal_step"]
    bands = compute_fit_bands(model, theta, psi, x0, t0, t_end, step, scheme,
                              grid, n_sims=args.sims, seed=args.seed)
    write_fit_bands_csv(args.out, bands)
    print(f"wrote {args.out} ({args.sims} simulated trajectories)")
    return EXIT_OK


def _cmd_coeff_check(args) -> int:
    worst = coeff_check(args.model, n_points=args.points, seed=args.seed)
    breach = False
    for name, dev in worst.items():
        flag = "ok" if dev < 1e-8 else "FAIL"
        print(f"{args.model} {name}: max relative deviation {dev:.3e}  [{flag}]")
        breach = breach or dev >= 1e-8
    return EXIT_COEFF_BREACH if breach else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdmem",
        description="Simulate and estimate SDE mixed-effects models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate one dataset from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="fit one dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["cfe2", "cfe1", "eum", "exact-ou"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("mc", help="Monte Carlo simulate-and-estimate study")
    p.add_argument("--config", required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int,
                   default=int(os.environ.get("SDMEM_JOBS", "1")),
                   help="parallel replications (default: $SDMEM_JOBS or 1)")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("fitbands", help="trajectory bands at fitted parameters")
    p.add_argument("--report", required=True)
    p.add_argument("--config", help="config supplying the design if the "
                                    "report lacks one")
    p.add_argument("--sims", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fitbands)

    p = sub.add_parser("coeff-check",
                       help="generic engine vs hand-coded coefficients")
    p.add_argument("--model", required=True,
                   choices=["growth", "ou2d", "cir"])
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_coeff_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as err:
        print(f"simulation error: {err}", file=sys.stderr)
        return EXIT_SIMULATION
    except SdmemError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(f"file not found: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
