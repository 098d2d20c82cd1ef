"""Experiment harness: configs, file formats, the Monte Carlo driver and
summary statistics.

File formats
------------
* data CSV: header ``unit,time,x1[,x2,...]``, one row per (unit, time),
  units sorted and times ascending within unit, values written with 17
  significant digits so a write-read round trip is exact.
* effects CSV: header ``unit,<effect names>``; the effects actually
  drawn during simulation.
* report JSON: natural-scale estimates, determined parameters obtained
  through the moment relations, per-unit effect estimates and solver
  diagnostics.
* config JSON: sections model / truth / design / estimation / seeds
  (see ``ExperimentConfig.from_dict``).

Replications of a Monte Carlo run own independent RNG substreams
derived from the base seed and the replication index, so results are
reproducible at any parallelism level.  Summary statistics use type-7
(linear interpolation) quantiles and the non-excess kurtosis convention
(normal = 3).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from .density import get_coeffs
from .effects import derived_moments
from .errors import ConfigError, SimulationError
from .estimate import EstimationReport, FitOptions, fit
from .expansion import gauss_legendre_01, generic_coeffs
from .models import (ModelSpec, ParameterVector, PopulationDataset,
                     UnitSeries, get_model)
from .simulate import SimPlan, make_dataset, sample_at, simulate_path

__all__ = [
    "ExperimentConfig",
    "McSummary",
    "FitBands",
    "paper_truth",
    "paper_config",
    "write_dataset_csv",
    "read_dataset_csv",
    "write_effects_csv",
    "read_effects_csv",
    "report_to_dict",
    "write_report",
    "determined_parameters",
    "summarize",
    "run_replication",
    "run_mc",
    "compute_fit_bands",
    "write_fit_bands_csv",
    "coeff_check",
]

ORANGE_GRID = (118.0, 484.0, 664.0, 1004.0, 1231.0, 1372.0, 1582.0)


# -- configuration ------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation-estimation experiment at fixed truth and design."""

    model_id: str
    model_options: dict
    theta: np.ndarray
    psi: np.ndarray
    n_units: int
    sample_times: tuple
    t0: float
    t_end: float
    x0: np.ndarray
    scheme: str
    internal_step: float
    methods: tuple[str, ...]
    data_seed: int
    start_seed: int
    start_perturbation: float = 0.2
    fit_options: FitOptions = field(default_factory=FitOptions)

    def model(self) -> ModelSpec:
        return get_model(self.model_id, **self.model_options)

    def plan(self, rep: int | None = None) -> SimPlan:
        seed = self.data_seed if rep is None else _substream_seed(self.data_seed, rep)
        return SimPlan(model=self.model(), theta=self.theta, psi=self.psi,
                       x0=self.x0, t0=self.t0, t_end=self.t_end,
                       internal_step=self.internal_step, scheme=self.scheme,
                       sample_times=self.sample_times, n_units=self.n_units,
                       rng_seed=seed)

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        try:
            model_sec = raw["model"]
            truth = raw["truth"]
            design = raw["design"]
        except KeyError as err:
            raise ConfigError(f"config missing section {err}") from None
        model_id = model_sec["id"] if isinstance(model_sec, dict) else str(model_sec)
        options = dict(model_sec.get("options", {})) if isinstance(model_sec, dict) else {}
        if "support" in options:
            options["support"] = tuple(options["support"])
        model = get_model(model_id, **options)

        def named_vector(section: dict, names, label: str) -> np.ndarray:
            missing = [n for n in names if n not in section]
            if missing:
                raise ConfigError(f"truth.{label} missing entries {missing}")
            return np.array([float(section[n]) for n in names])

        theta = named_vector(truth.get("theta", {}), model.theta_names, "theta")
        psi = named_vector(truth.get("psi", {}), model.psi_names, "psi")

        for key in ("n_units", "t0", "t_end", "x0"):
            if key not in design:
                raise ConfigError(f"design missing field {key!r}")
        sample_times = design.get("sample_times")
        if sample_times is None:
            n_obs = design.get("n_obs")
            if n_obs is None:
                raise ConfigError("design needs sample_times or n_obs")
            sample_times = tuple(np.linspace(design["t0"], design["t_end"],
                                             int(n_obs)))
        else:
            sample_times = tuple(float(t) for t in sample_times)

        est = raw.get("estimation", {})
        opts = FitOptions(
            inner_grad_tol=float(est.get("inner_grad_tol", 1e-8)),
            inner_max_iter=int(est.get("inner_max_iter", 100)),
            outer_xatol=float(est.get("outer_xatol", 1e-6)),
            outer_fatol=float(est.get("outer_fatol", 1e-6)),
            max_outer_evals=int(est.get("max_outer_evals", 2000)))
        seeds = raw.get("seeds", {})
        return ExperimentConfig(
            model_id=model_id, model_options=options, theta=theta, psi=psi,
            n_units=int(design["n_units"]), sample_times=sample_times,
            t0=float(design["t0"]), t_end=float(design["t_end"]),
            x0=np.asarray(design["x0"], dtype=float),
            scheme=str(design.get("scheme", "euler")),
            internal_step=float(design.get("internal_step", 1e-3)),
            methods=tuple(est.get("methods", ["cfe2"])),
            data_seed=int(seeds.get("data", 0)),
            start_seed=int(seeds.get("start", 1)),
            start_perturbation=float(est.get("start_perturbation", 0.2)),
            fit_options=opts)

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as err:
            raise ConfigError(f"config {path}: invalid JSON ({err})") from None
        return ExperimentConfig.from_dict(raw)

    def to_dict(self) -> dict:
        model = self.model()
        return {
            "model": {"id": self.model_id, "options": dict(self.model_options)},
            "truth": {
                "theta": dict(zip(model.theta_names, self.theta.tolist())),
                "psi": dict(zip(model.psi_names, self.psi.tolist())),
            },
            "design": {
                "n_units": self.n_units,
                "t0": self.t0, "t_end": self.t_end,
                "x0": np.asarray(self.x0).tolist(),
                "scheme": self.scheme, "internal_step": self.internal_step,
                "sample_times": list(self.sample_times),
            },
            "estimation": {
                "methods": list(self.methods),
                "start_perturbation": self.start_perturbation,
                **{k: getattr(self.fit_options, k)
                   for k in ("inner_grad_tol", "inner_max_iter", "outer_xatol",
                             "outer_fatol", "max_outer_evals")},
            },
            "seeds": {"data": self.data_seed, "start": self.start_seed},
        }


def paper_truth(model_id: str) -> tuple[np.ndarray, np.ndarray]:
    """True parameter values of the three reference simulation studies."""
    if model_id == "growth":
        return np.array([195.0, 350.0, 0.08]), np.array([25.0, 52.5])
    if model_id == "ou2d":
        return (np.array([1.0, 1.5, 3.0, 2.5, 1.8, 2.0, 0.3, 0.5]),
                np.array([45.0, 100.0, 100.0, 25.0]))
    if model_id == "cir":
        return np.array([3.0]), np.array([5.0, 0.0, 0.25, 0.1, 0.3])
    raise ConfigError(f"unknown model id {model_id!r}")


def paper_config(model_id: str, n_units: int, n_obs: int,
                 methods=("cfe2",), data_seed: int = 0, start_seed: int = 1,
                 fit_options: FitOptions | None = None,
                 start_perturbation: float = 0.2) -> ExperimentConfig:
    """Reference designs of the simulation studies.

    The growth design with (M, n+1) = (5, 7) samples on the original
    orange-tree measurement grid; every other design is equally spaced.
    """
    theta, psi = paper_truth(model_id)
    if model_id == "growth":
        t0, t_end, x0 = 118.0, 1582.0, np.array([30.0])
        scheme, step = "milstein", 1.0
        if (n_units, n_obs) == (5, 7):
            grid = ORANGE_GRID
        else:
            grid = tuple(np.linspace(t0, t_end, n_obs))
    elif model_id == "ou2d":
        t0, t_end, x0 = 0.0, 1.0, np.array([3.0, 3.0])
        scheme, step = "euler", 1e-3
        grid = tuple(np.linspace(t0, t_end, n_obs))
    elif model_id == "cir":
        t0, t_end, x0 = 0.0, 1.0, np.array([1.0])
        scheme, step = "euler", 1e-3
        grid = tuple(np.linspace(t0, t_end, n_obs))
    else:
        raise ConfigError(f"unknown model id {model_id!r}")
    return ExperimentConfig(
        model_id=model_id, model_options={}, theta=theta, psi=psi,
        n_units=n_units, sample_times=grid, t0=t0, t_end=t_end, x0=x0,
        scheme=scheme, internal_step=step, methods=tuple(methods),
        data_seed=data_seed, start_seed=start_seed,
        start_perturbation=start_perturbation,
        fit_options=fit_options or FitOptions())


def _substream_seed(base: int, index: int) -> int:
    words = np.random.SeedSequence(entropy=base,
                                   spawn_key=(index,)).generate_state(4)
    return int.from_bytes(words.tobytes(), "little")


# -- CSV / JSON formats --------------------------------------------------


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_dataset_csv(path, dataset: PopulationDataset) -> None:
    d = dataset.units[0].dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["unit", "time"] + [f"x{h + 1}" for h in range(d)])
        for unit in dataset.units:
            for j in range(unit.times.shape[0]):
                writer.writerow([unit.unit_id, _fmt(unit.times[j])]
                                + [_fmt(v) for v in unit.obs[j]])


def read_dataset_csv(path, model: ModelSpec | None = None) -> PopulationDataset:
    rows: dict[int, list[tuple[float, list[float]]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["unit", "time"]:
            raise ConfigError(f"{path}: expected header 'unit,time,x1,...'")
        d = len(header) - 2
        if d < 1:
            raise ConfigError(f"{path}: no state columns")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != d + 2 or any(cell.strip() == "" for cell in row):
                raise ConfigError(f"{path}: missing value in row {lineno}")
            try:
                unit = int(row[0])
                t = float(row[1])
                xs = [float(v) for v in row[2:]]
            except ValueError:
                raise ConfigError(
                    f"{path}: non-numeric value in row {lineno}") from None
            if any(math.isnan(v) for v in xs) or math.isnan(t):
                raise ConfigError(f"{path}: missing value in row {lineno}")
            rows.setdefault(unit, []).append((t, xs))
    units = []
    for unit_id in sorted(rows):
        entries = rows[unit_id]
        times = np.array([e[0] for e in entries])
        obs = np.array([e[1] for e in entries])
        units.append(UnitSeries(unit_id=unit_id, times=times, obs=obs))
    dataset = PopulationDataset(units=tuple(units),
                                model_id=model.model_id if model else "")
    if model is not None:
        dataset.validate(model)
    return dataset


def write_effects_csv(path, effects: np.ndarray, names) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["unit"] + list(names))
        for i, row in enumerate(np.atleast_2d(effects)):
            writer.writerow([i] + [_fmt(v) for v in row])


def read_effects_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [[float(v) for v in row[1:]] for row in reader]
    return np.array(rows)


def determined_parameters(model: ModelSpec, psi) -> dict[str, float]:
    """Population values implied by the effect-distribution parameters
    through the moment relations (square-root model: beta and sigma)."""
    if model.model_id != "cir":
        return {}
    moments = derived_moments(model.effect_prior(np.asarray(psi, dtype=float)))
    return {"beta": moments[1][0], "sigma": moments[2][0]}


def report_to_dict(report: EstimationReport, model: ModelSpec,
                   design: dict | None = None) -> dict:
    return {
        "model": report.model_id,
        "method": report.method,
        **({"design": design} if design is not None else {}),
        "theta": dict(zip(model.theta_names, report.theta_hat.tolist())),
        "psi": dict(zip(model.psi_names, report.psi_hat.tolist())),
        "determined": determined_parameters(model, report.psi_hat),
        "log_likelihood": report.log_likelihood,
        "converged": report.converged,
        "outer_evaluations": report.outer_evaluations,
        "wall_time_s": report.wall_time,
        "message": report.message,
        "unit_effects": [
            {"unit": sol.unit_id,
             "b": dict(zip(model.effect_names, sol.b_hat.tolist())),
             "iterations": sol.iterations,
             "converged": sol.converged,
             "grad_norm": sol.grad_norm}
            for sol in report.unit_solutions],
    }


def write_report(path, report: EstimationReport, model: ModelSpec,
                 design: dict | None = None) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report, model, design),
                                     indent=2))


# -- summary statistics ---------------------------------------------------


@dataclass(frozen=True)
class McSummary:
    """Columnwise Monte Carlo summary of R replications."""

    names: tuple[str, ...]
    mean: np.ndarray
    q025: np.ndarray
    q975: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray
    n_used: int
    n_failed: int = 0

    def as_dict(self) -> dict:
        def clean(a):
            return [None if not np.isfinite(v) else float(v) for v in a]
        return {
            "n_used": self.n_used, "n_failed": self.n_failed,
            "parameters": {
                name: {"mean": float(self.mean[i]),
                       "q025": float(self.q025[i]),
                       "q975": float(self.q975[i]),
                       "skewness": clean(self.skewness)[i],
                       "kurtosis": clean(self.kurtosis)[i]}
                for i, name in enumerate(self.names)},
        }


def summarize(estimates: np.ndarray, names, n_failed: int = 0) -> McSummary:
    """Mean, type-7 empirical 2.5/97.5% quantiles, sample skewness and
    non-excess kurtosis per column.  Constant columns report NaN shape
    statistics."""
    est = np.atleast_2d(np.asarray(estimates, dtype=float))
    if est.shape[0] < 1:
        raise ConfigError("summary needs at least one replication")
    names = tuple(names)
    if est.shape[1] != len(names):
        raise ConfigError("summary names must match the column count")
    mean = est.mean(axis=0)
    q025 = np.quantile(est, 0.025, axis=0, method="linear")
    q975 = np.quantile(est, 0.975, axis=0, method="linear")
    spread = est.std(axis=0)
    skew = np.full(est.shape[1], np.nan)
    kurt = np.full(est.shape[1], np.nan)
    ok = spread > 0
    if np.any(ok):
        skew[ok] = stats.skew(est[:, ok], axis=0, bias=True)
        kurt[ok] = stats.kurtosis(est[:, ok], axis=0, fisher=False, bias=True)
    return McSummary(names=names, mean=mean, q025=q025, q975=q975,
                     skewness=skew, kurtosis=kurt,
                     n_used=est.shape[0], n_failed=n_failed)


# -- Monte Carlo driver ----------------------------------------------------


def perturbed_start(model: ModelSpec, theta, psi, magnitude: float,
                    rng: np.random.Generator) -> ParameterVector:
    """Truth jittered by +-magnitude relative uniform noise (absolute for
    near-zero entries), clipped into the model bounds."""
    values = np.concatenate([np.asarray(theta, float), np.asarray(psi, float)])
    out = values.copy()
    for i, v in enumerate(values):
        u = rng.uniform(-magnitude, magnitude)
        out[i] = v * (1.0 + u) if abs(v) > 1e-3 else v + 0.1 * u
        lo, hi = model.param_bounds[i]
        out[i] = min(max(out[i], lo), hi)
    theta_new, psi_new = model.split_params(out)
    return ParameterVector(theta=theta_new, psi=psi_new,
                           bounds=tuple(model.param_bounds))


def run_replication(config: ExperimentConfig, rep: int,
                    out_dir: Path | None = None) -> dict:
    """Simulate one dataset and fit it with every configured method."""
    model = config.model()
    dataset, effects = make_dataset(config.plan(rep))
    if out_dir is not None:
        rep_dir = Path(out_dir) / f"rep{rep:04d}"
        rep_dir.mkdir(parents=True, exist_ok=True)
        write_dataset_csv(rep_dir / "data.csv", dataset)
        write_effects_csv(rep_dir / "truth.csv", effects, model.effect_names)
    start_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=config.start_seed, spawn_key=(rep,))))
    start = perturbed_start(model, config.theta, config.psi,
                            config.start_perturbation, start_rng)
    results = {}
    for method in config.methods:
        try:
            report = fit(method, model, dataset, start,
                         options=config.fit_options)
        except Exception as err:   # failed replications are counted, not fatal
            results[method] = {"error": f"{type(err).__name__}: {err}"}
            continue
        entry = {
            "params": report.params_hat,
            "determined": determined_parameters(model, report.psi_hat),
            "log_likelihood": report.log_likelihood,
            "converged": report.converged,
            "effects_hat": np.array([s.b_hat for s in report.unit_solutions]),
        }
        results[method] = entry
        if out_dir is not None:
            write_report(rep_dir / f"report_{method}.json", report, model,
                         design=config.to_dict()["design"])
    return {"rep": rep, "results": results, "true_effects": effects}


def run_mc(config: ExperimentConfig, reps: int, out_dir=None,
           n_jobs: int = 1) -> dict:
    """Simulate-and-estimate ``reps`` replications (in parallel when
    n_jobs > 1) and summarize each method's estimates."""
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    if n_jobs == 1:
        rep_results = [run_replication(config, r, out_path)
                       for r in range(reps)]
    else:
        rep_results = Parallel(n_jobs=n_jobs)(
            delayed(run_replication)(config, r, out_path)
            for r in range(reps))

    model = config.model()
    names = list(model.param_names)
    det_names = sorted(determined_parameters(model, config.psi))
    all_names = names + det_names
    summaries = {}
    for method in config.methods:
        rows, failures = [], 0
        for rr in rep_results:
            entry = rr["results"][method]
            if "error" in entry:
                failures += 1
                continue
            det = entry["determined"]
            rows.append(np.concatenate(
                [entry["params"], [det[k] for k in det_names]]))
        if not rows:
            raise SimulationError(
                f"all {reps} replications failed for method {method}")
        estimates = np.array(rows)
        summary = summarize(estimates, all_names, n_failed=failures)
        summaries[method] = {
            "summary": summary,
            "estimates": estimates,
            "effects_hat": [rr["results"][method].get("effects_hat")
                            for rr in rep_results
                            if "error" not in rr["results"][method]],
        }
        if out_path is not None:
            with open(out_path / f"estimates_{method}.csv", "w",
                      newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["rep"] + all_names)
                k = 0
                for rr in rep_results:
                    if "error" in rr["results"][method]:
                        continue
                    writer.writerow([rr["rep"]] + [_fmt(v)
                                                   for v in estimates[k]])
                    k += 1
            (out_path / f"summary_{method}.json").write_text(
                json.dumps(summary.as_dict(), indent=2))
    if out_path is not None and len(config.methods) > 1:
        _write_method_comparison(out_path / "comparison.csv", summaries,
                                 all_names)
    return summaries


def _write_method_comparison(path, summaries: dict, names) -> None:
    """Side-by-side per-parameter table: mean and 95% interval for every
    method."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["parameter"]
        for method in summaries:
            header += [f"mean_{method}", f"q025_{method}", f"q975_{method}"]
        writer.writerow(header)
        for i, name in enumerate(names):
            row = [name]
            for method in summaries:
                s = summaries[method]["summary"]
                row += [_fmt(s.mean[i]), _fmt(s.q025[i]), _fmt(s.q975[i])]
            writer.writerow(row)


# -- fit bands --------------------------------------------------------------


@dataclass(frozen=True)
class FitBands:
    """Pointwise trajectory summary at fitted parameters: empirical mean
    and central 95% band over fresh simulated paths."""

    times: np.ndarray
    mean: np.ndarray     # (n_times, d)
    lower: np.ndarray
    upper: np.ndarray
    examples: np.ndarray  # (n_examples, n_times, d)


def compute_fit_bands(model: ModelSpec, theta, psi, x0, t0, t_end,
                      internal_step, scheme, grid, n_sims: int,
                      seed: int = 0, n_examples: int = 3) -> FitBands:
    prior = model.effect_prior(np.asarray(psi, dtype=float))
    theta = np.asarray(theta, dtype=float)
    grid = np.asarray(grid, dtype=float)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    draws = np.empty((n_sims, grid.shape[0], model.dim_d))
    for s in range(n_sims):
        for _ in range(1000):
            b = prior.sample(rng)
            if model.constraint_check(theta, list(b)):
                break
        else:
            raise SimulationError("no admissible effects for fit bands")
        times, values = simulate_path(model, theta, b, x0, t0, t_end,
                                      internal_step, scheme, rng)
        draws[s] = sample_at(times, values, grid)
    return FitBands(
        times=grid,
        mean=draws.mean(axis=0),
        lower=np.quantile(draws, 0.025, axis=0),
        upper=np.quantile(draws, 0.975, axis=0),
        examples=draws[:min(n_examples, n_sims)].copy())


def write_fit_bands_csv(path, bands: FitBands) -> None:
    d = bands.mean.shape[1]
    ex = bands.examples.shape[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["time"]
        for h in range(d):
            header += [f"mean_x{h + 1}", f"lower_x{h + 1}", f"upper_x{h + 1}"]
        for k in range(ex):
            header += [f"example{k + 1}_x{h + 1}" for h in range(d)]
        writer.writerow(header)
        for j in range(bands.times.shape[0]):
            row = [_fmt(bands.times[j])]
            for h in range(d):
                row += [_fmt(bands.mean[j, h]), _fmt(bands.lower[j, h]),
                        _fmt(bands.upper[j, h])]
            for k in range(ex):
                row += [_fmt(bands.examples[k, j, h]) for h in range(d)]
            writer.writerow(row)


# -- coefficient cross-validation -------------------------------------------


def _admissible_points(model_id: str, n_points: int, seed: int):
    """Random (y_j, y_jm1, theta, b) tuples in the working range of each
    model, constraint-checked."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    model = get_model(model_id)
    theta0, psi0 = paper_truth(model_id)
    prior = model.effect_prior(psi0)
    points = []
    while len(points) < n_points:
        theta = theta0 * (1.0 + rng.uniform(-0.2, 0.2, size=theta0.shape))
        b = prior.sample(rng)
        if not model.constraint_check(theta, list(b)):
            continue
        if model_id == "growth":
            x = rng.uniform(20.0, 380.0, size=2)
        elif model_id == "cir":
            x = rng.uniform(0.5, 6.0, size=2)
        else:
            x = rng.uniform(-0.5, 3.5, size=(2, 2))
        if model_id == "ou2d":
            yj = model.lamperti([x[0, 0], x[0, 1]], theta, list(b))
            ym = model.lamperti([x[1, 0], x[1, 1]], theta, list(b))
        else:
            yj = model.lamperti([x[0]], theta, list(b))
            ym = model.lamperti([x[1]], theta, list(b))
        points.append((yj, ym, theta, list(b)))
    return points


def coeff_check(model_id: str, n_points: int = 20, seed: int = 0,
                quad_order: int = 20) -> dict[str, float]:
    """Maximum relative deviation between the generic-recursion
    coefficients and the hand-coded closed forms, per coefficient."""
    model = get_model(model_id)
    hand = get_coeffs(model_id)
    gen = generic_coeffs(model, gauss_legendre_01(quad_order))
    worst = {"cm1": 0.0, "c0": 0.0, "c1": 0.0, "c2": 0.0}
    for yj, ym, theta, b in _admissible_points(model_id, n_points, seed):
        for name in worst:
            hv = hand.by_order({"cm1": -1, "c0": 0, "c1": 1, "c2": 2}[name])(
                yj, ym, theta, b)
            gv = gen.by_order({"cm1": -1, "c0": 0, "c1": 1, "c2": 2}[name])(
                yj, ym, theta, b)
            rel = abs(gv - hv) / max(1.0, abs(hv))
            worst[name] = max(worst[name], float(rel))
    return worst
