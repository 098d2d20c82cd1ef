"""Path simulation and dataset generation.

Trajectories run on a uniform internal grid with the Euler-Maruyama or
Milstein scheme (the Milstein correction uses the analytic state
derivative of the diffusion supplied by the model).  Observations are
then read off by linear interpolation at the requested sampling times.

For square-root-noise models a negative proposal is reflected when the
overshoot is smaller than step * c^2 (c the diffusion proportionality
constant); larger excursions abort the path, which restarts with a
fresh Brownian draw.  Effects violating the model constraint are
redrawn up to a cap.

Every unit owns an RNG substream derived deterministically from the
plan seed and the unit index, so datasets are bit-reproducible no
matter how the work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConstraintError, SimulationError
from .models import ModelSpec, PopulationDataset, UnitSeries

__all__ = ["SimPlan", "simulate_path", "sample_at", "make_dataset"]

_REDRAW_CAP = 1000
_RESTART_CAP = 200


@dataclass(frozen=True)
class SimPlan:
    """Everything needed to generate one synthetic population dataset."""

    model: ModelSpec
    theta: np.ndarray
    psi: np.ndarray
    x0: np.ndarray            # (d,) shared or (M, d) per unit
    t0: float
    t_end: float
    internal_step: float
    scheme: str               # "euler" | "milstein"
    sample_times: tuple       # one array shared by all units, or M arrays
    n_units: int
    rng_seed: int

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float))
        x0 = np.asarray(self.x0, dtype=float)
        if x0.ndim == 0:
            x0 = x0[None]
        object.__setattr__(self, "x0", x0)
        if x0.shape[-1] != self.model.dim_d:
            raise ConfigError(
                f"x0 has dimension {x0.shape[-1]}, model {self.model.model_id} "
                f"needs {self.model.dim_d}")
        if x0.ndim == 2 and x0.shape[0] != self.n_units:
            raise ConfigError("per-unit x0 must list one vector per unit")
        if self.scheme not in ("euler", "milstein"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.internal_step <= 0:
            raise ConfigError("internal_step must be positive")
        if self.n_units < 1:
            raise ConfigError("need at least one unit")
        grids = self.unit_grids()
        for g in grids:
            if g[0] < self.t0 - 1e-12 or g[-1] > self.t_end + 1e-12:
                raise ConfigError("sample times must lie inside [t0, t_end]")
            if np.any(np.diff(g) <= 0):
                raise ConfigError("sample times must be strictly increasing")
            if self.internal_step > np.min(np.diff(g)) + 1e-12:
                raise ConfigError("internal_step must not exceed the smallest "
                                  "sampling gap")

    def unit_grids(self) -> list[np.ndarray]:
        st = self.sample_times
        if isinstance(st, np.ndarray) or (len(st) and np.isscalar(st[0])):
            grid = np.asarray(st, dtype=float)
            return [grid] * self.n_units
        grids = [np.asarray(g, dtype=float) for g in st]
        if len(grids) != self.n_units:
            raise ConfigError("per-unit sample_times must list one grid per unit")
        return grids

    def unit_x0(self, i: int) -> np.ndarray:
        if self.x0.ndim == 2:
            return self.x0[i]
        return self.x0


class _PathRestart(Exception):
    pass


def _step_state(model, x, theta, b, step, dw, scheme):
    mu = model.drift(list(x), theta, b)
    diag = model.diffusion_diag(list(x), theta, b)
    out = np.empty_like(x)
    if scheme == "milstein" and model.diffusion_dx_diag is not None:
        dsig = model.diffusion_dx_diag(list(x), theta, b)
        for h in range(x.shape[0]):
            out[h] = (x[h] + mu[h] * step + diag[h] * dw[h]
                      + 0.5 * diag[h] * dsig[h] * (dw[h] ** 2 - step))
    else:
        for h in range(x.shape[0]):
            out[h] = x[h] + mu[h] * step + diag[h] * dw[h]
    return out


def simulate_path(model: ModelSpec, theta, b, x0, t0, t_end, step,
                  scheme: str, rng: np.random.Generator):
    """Simulate one dense trajectory on the uniform internal grid.

    Returns (times, values) with values of shape (n_steps + 1, d).
    """
    theta = np.asarray(theta, dtype=float)
    b = list(np.asarray(b, dtype=float))
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if not model.constraint_check(theta, b):
        raise ConstraintError(f"{model.model_id}: effects violate the "
                              "admissibility constraint")
    if not model.state_space_check(x0[None, :]):
        raise ConfigError(f"{model.model_id}: x0 outside the state space")

    n = int(round((t_end - t0) / step))
    if n < 1:
        raise ConfigError("time span shorter than one internal step")
    times = t0 + step * np.arange(n + 1)
    sqrt_step = np.sqrt(step)
    thr = 0.0
    if model.positive_state and model.sqrt_diffusion_scale is not None:
        thr = step * model.sqrt_diffusion_scale(theta, b) ** 2

    for _ in range(_RESTART_CAP):
        values = np.empty((n + 1, x0.shape[0]))
        values[0] = x0
        dws = rng.normal(0.0, sqrt_step, size=(n, x0.shape[0]))
        try:
            x = x0.copy()
            for k in range(n):
                x = _step_state(model, x, theta, b, step, dws[k], scheme)
                if model.positive_state:
                    for h in range(x.shape[0]):
                        if x[h] <= 0.0:
                            if 0.0 < -x[h] < thr:
                                x[h] = -x[h]
                            else:
                                raise _PathRestart
                values[k + 1] = x
            return times, values
        except _PathRestart:
            continue
    raise SimulationError(
        f"{model.model_id}: path left the state space in {_RESTART_CAP} "
        "consecutive attempts; reduce the internal step")


def sample_at(times: np.ndarray, values: np.ndarray,
              sample_times) -> np.ndarray:
    """Linear interpolation of a dense trajectory at the sampling times."""
    sample_times = np.asarray(sample_times, dtype=float)
    if sample_times.min() < times[0] or sample_times.max() > times[-1]:
        raise ConfigError("sample times outside the simulated span")
    out = np.empty((sample_times.shape[0], values.shape[1]))
    for h in range(values.shape[1]):
        out[:, h] = np.interp(sample_times, times, values[:, h])
    return out


def _unit_rng(seed: int, unit: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=(unit,))))


def make_dataset(plan: SimPlan) -> tuple[PopulationDataset, np.ndarray]:
    """Generate the full multi-unit dataset plus the effects actually
    drawn (for recovery studies)."""
    model = plan.model
    prior = model.effect_prior(plan.psi)
    grids = plan.unit_grids()
    units = []
    effects = np.empty((plan.n_units, model.dim_q))
    for i in range(plan.n_units):
        rng = _unit_rng(plan.rng_seed, i)
        for attempt in range(_REDRAW_CAP):
            b = prior.sample(rng)
            if model.constraint_check(plan.theta, list(b)):
                break
        else:
            raise ConfigError(
                f"{model.model_id}: no admissible effects in {_REDRAW_CAP} draws; "
                "the constraint region has negligible prior mass under psi="
                f"{plan.psi}")
        times, values = simulate_path(model, plan.theta, b, plan.unit_x0(i),
                                      plan.t0, plan.t_end, plan.internal_step,
                                      plan.scheme, rng)
        obs = sample_at(times, values, grids[i])
        units.append(UnitSeries(unit_id=i, times=grids[i], obs=obs))
        effects[i] = b
    dataset = PopulationDataset(units=tuple(units), model_id=model.model_id)
    dataset.validate(model)
    return dataset, effects
