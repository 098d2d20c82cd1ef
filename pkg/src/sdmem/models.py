"""Model family definitions and the multi-unit dataset containers.

A :class:`ModelSpec` bundles the callbacks describing one SDE
mixed-effects family: drift, diffusion, the transform to unit diffusion
and the drift of the transformed process, admissibility checks, the
parameter layout (fixed effects ``theta``, effect-distribution
parameters ``psi``) and the map from ``psi`` to the joint effect prior.

All callbacks are written against the generic arithmetic in
:mod:`sdmem.autodiff`, so the same code runs on floats, numpy arrays
(vectorized over transitions) and dual numbers.  States are passed as
sequences of per-coordinate values; random effects as sequences of
scalars.  Parameters are flat vectors with a named-index map, so the
outer optimizer stays generic over families.

Three families ship built in: the logistic growth model with
square-root noise, the two-dimensional mean-reverting (OU) model with
multiplicative Gamma effects, and the square-root (CIR) model with Beta
and log-normal effects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import autodiff as ad
from .effects import (EffectPrior, GammaUnitMean, LogNormal, NormalZeroMean,
                      SymmetricBeta)
from .errors import ConfigError, DomainError

__all__ = [
    "ModelSpec",
    "ParameterVector",
    "UnitSeries",
    "PopulationDataset",
    "make_growth_model",
    "make_ou2d_model",
    "make_cir_model",
    "get_model",
    "MODEL_BUILDERS",
]


@dataclass(frozen=True)
class ModelSpec:
    """One SDE mixed-effects family.  Immutable; safe to share."""

    model_id: str
    dim_d: int
    dim_p: int
    dim_q: int
    theta_names: tuple[str, ...]
    psi_names: tuple[str, ...]
    effect_names: tuple[str, ...]
    drift: Callable                 # (x_cols, theta, b) -> d-list
    diffusion_diag: Callable        # (x_cols, theta, b) -> d-list (diagonal)
    lamperti: Callable              # (x_cols, theta, b) -> d-list
    lamperti_inverse: Callable      # (y_cols, theta, b) -> d-list
    drift_y: Callable               # (y_cols, theta, b) -> d-list
    state_space_check: Callable     # (obs array (..., d)) -> bool
    constraint_check: Callable      # (theta, b) -> bool
    effect_prior: Callable          # (psi) -> EffectPrior
    diffusion_dx_diag: Callable | None = None   # d sigma_hh / d x_h, for Milstein
    sqrt_diffusion_scale: Callable | None = None  # c with sigma(x) = c sqrt(x)
    positive_state: bool = False
    # natural-scale bounds and log-scale flags for theta ++ psi
    positive_params: tuple[bool, ...] = ()
    param_bounds: tuple[tuple[float, float], ...] = ()

    def diffusion(self, x_cols, theta, b):
        """Full d x d diffusion matrix as nested lists (all built-in
        families are diagonal)."""
        diag = self.diffusion_diag(x_cols, theta, b)
        d = self.dim_d
        return [[diag[i] if i == j else 0.0 for j in range(d)] for i in range(d)]

    @property
    def param_names(self) -> tuple[str, ...]:
        return self.theta_names + self.psi_names

    def split_params(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        values = np.asarray(values, dtype=float)
        return values[:self.dim_p], values[self.dim_p:]

    def default_parameters(self, theta, psi) -> "ParameterVector":
        theta = np.asarray(theta, dtype=float)
        psi = np.asarray(psi, dtype=float)
        if theta.shape != (self.dim_p,):
            raise ConfigError(
                f"{self.model_id}: theta must have {self.dim_p} entries, got {theta.shape}")
        if psi.shape != (len(self.psi_names),):
            raise ConfigError(
                f"{self.model_id}: psi must have {len(self.psi_names)} entries, got {psi.shape}")
        return ParameterVector(theta=theta, psi=psi,
                               bounds=tuple(self.param_bounds))


@dataclass(frozen=True)
class ParameterVector:
    """Fixed effects, effect-distribution parameters and their
    natural-scale box bounds."""

    theta: np.ndarray
    psi: np.ndarray
    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        full = self.full
        if len(self.bounds) != full.shape[0]:
            raise ConfigError("bounds length must match theta+psi length")
        for v, (lo, hi) in zip(full, self.bounds):
            if not (lo <= v <= hi):
                raise ConfigError(f"parameter value {v} outside bounds [{lo}, {hi}]")

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([self.theta, self.psi])


@dataclass(frozen=True)
class UnitSeries:
    """Observations of one experimental unit: strictly increasing times
    and an (n_i + 1) x d state matrix with no missing values."""

    unit_id: int
    times: np.ndarray
    obs: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        obs = np.asarray(self.obs, dtype=float)
        if obs.ndim == 1:
            obs = obs[:, None]
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "obs", obs)
        if times.ndim != 1 or obs.shape[0] != times.shape[0]:
            raise ConfigError(
                f"unit {self.unit_id}: times and observations have mismatched lengths")
        if np.any(~np.isfinite(times)) or np.any(~np.isfinite(obs)):
            raise ConfigError(f"unit {self.unit_id}: missing or non-finite values")
        if np.any(np.diff(times) <= 0):
            raise ConfigError(f"unit {self.unit_id}: times must be strictly increasing")

    @property
    def n_transitions(self) -> int:
        return self.times.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.obs.shape[1]


@dataclass(frozen=True)
class PopulationDataset:
    """All units of one experiment."""

    units: tuple[UnitSeries, ...]
    model_id: str

    def __post_init__(self):
        if len(self.units) < 1:
            raise ConfigError("dataset needs at least one unit")
        object.__setattr__(self, "units", tuple(self.units))

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def n_rows(self) -> int:
        return sum(u.times.shape[0] for u in self.units)

    def validate(self, model: ModelSpec) -> None:
        for u in self.units:
            if u.dim != model.dim_d:
                raise ConfigError(
                    f"unit {u.unit_id}: dimension {u.dim} != model dimension {model.dim_d}")
            if not model.state_space_check(u.obs):
                raise DomainError(
                    f"unit {u.unit_id}: observation outside the state space")


def _positive_rows(obs: np.ndarray) -> bool:
    return bool(np.all(np.asarray(obs) > 0.0))


_WIDE = (-1e8, 1e8)
_POS = (1e-8, 1e8)


def make_growth_model() -> ModelSpec:
    """Logistic growth with level-proportional variance.

    dX = X (p1 + p1_i - X) / ((p1 + p1_i)(p3 + p3_i)) dt + sigma sqrt(X) dW,
    effects p1_i, p3_i centered normal.  theta = (phi1, phi3, sigma),
    psi = (sd_phi1, sd_phi3), state space x > 0.
    """

    def drift(x, theta, b):
        a = theta[0] + b[0]
        g = theta[1] + b[1]
        return [x[0] * (a - x[0]) / (a * g)]

    def diffusion_diag(x, theta, b):
        return [theta[2] * ad.sqrt(x[0])]

    def diffusion_dx_diag(x, theta, b):
        return [0.5 * theta[2] / ad.sqrt(x[0])]

    def lamperti(x, theta, b):
        return [2.0 * ad.sqrt(x[0]) / theta[2]]

    def lamperti_inverse(y, theta, b):
        return [(theta[2] * y[0]) ** 2 / 4.0]

    def drift_y(y, theta, b):
        a = theta[0] + b[0]
        g = theta[1] + b[1]
        s = theta[2]
        return [y[0] * (a - s * s * y[0] ** 2 / 4.0) / (2.0 * g * a)
                - 1.0 / (2.0 * y[0])]

    def constraint_check(theta, b):
        return theta[0] + b[0] > 0.0 and theta[1] + b[1] > 0.0

    def effect_prior(psi):
        return EffectPrior((NormalZeroMean(psi[0]), NormalZeroMean(psi[1])))

    return ModelSpec(
        model_id="growth", dim_d=1, dim_p=3, dim_q=2,
        theta_names=("phi1", "phi3", "sigma"),
        psi_names=("sd_phi1", "sd_phi3"),
        effect_names=("phi1_i", "phi3_i"),
        drift=drift, diffusion_diag=diffusion_diag,
        diffusion_dx_diag=diffusion_dx_diag,
        lamperti=lamperti, lamperti_inverse=lamperti_inverse, drift_y=drift_y,
        state_space_check=_positive_rows, constraint_check=constraint_check,
        effect_prior=effect_prior,
        sqrt_diffusion_scale=lambda theta, b: theta[2],
        positive_state=True,
        positive_params=(True, True, True, True, True),
        param_bounds=(_POS, _POS, _POS, _POS, _POS),
    )


def make_ou2d_model() -> ModelSpec:
    """Two-dimensional mean-reverting model with multiplicative Gamma
    effects on the rate matrix.

    dX = (B * b)(alpha - X) dt + diag(sigma1, sigma2) dW, where * is the
    elementwise product and each b_ll' has a Gamma law with mean one.
    The rate matrix B * b must have eigenvalues with positive real
    parts.
    """

    def _rate(theta, b):
        return (theta[2] * b[0], theta[3] * b[1],
                theta[4] * b[2], theta[5] * b[3])

    def drift(x, theta, b):
        a11, a12, a21, a22 = _rate(theta, b)
        d1 = x[0] - theta[0]
        d2 = x[1] - theta[1]
        return [-(a11 * d1 + a12 * d2), -(a21 * d1 + a22 * d2)]

    def diffusion_diag(x, theta, b):
        return [theta[6], theta[7]]

    def lamperti(x, theta, b):
        return [x[0] / theta[6], x[1] / theta[7]]

    def lamperti_inverse(y, theta, b):
        return [theta[6] * y[0], theta[7] * y[1]]

    def drift_y(y, theta, b):
        k11, k12, k21, k22 = ou2d_kappa(theta, b)
        e1 = theta[0] / theta[6]
        e2 = theta[1] / theta[7]
        d1 = e1 - y[0]
        d2 = e2 - y[1]
        return [k11 * d1 + k12 * d2, k21 * d1 + k22 * d2]

    def constraint_check(theta, b):
        a11, a12, a21, a22 = _rate(theta, b)
        # both eigenvalues have positive real part iff trace > 0, det > 0
        return (a11 + a22) > 0.0 and (a11 * a22 - a12 * a21) > 0.0

    def effect_prior(psi):
        return EffectPrior(tuple(GammaUnitMean(nu) for nu in psi))

    return ModelSpec(
        model_id="ou2d", dim_d=2, dim_p=8, dim_q=4,
        theta_names=("alpha1", "alpha2", "beta11", "beta12",
                     "beta21", "beta22", "sigma1", "sigma2"),
        psi_names=("nu11", "nu12", "nu21", "nu22"),
        effect_names=("b11", "b12", "b21", "b22"),
        drift=drift, diffusion_diag=diffusion_diag,
        lamperti=lamperti, lamperti_inverse=lamperti_inverse, drift_y=drift_y,
        state_space_check=lambda obs: bool(np.all(np.isfinite(obs))),
        constraint_check=constraint_check, effect_prior=effect_prior,
        positive_params=(False, False, True, True, True, True, True, True,
                         True, True, True, True),
        # the effect-precision profile often increases without bound at
        # small M; cap nu near the value the reference tables saturate at
        param_bounds=(_WIDE, _WIDE, _POS, _POS, _POS, _POS, _POS, _POS,
                      (1e-2, 2e2), (1e-2, 2e2), (1e-2, 2e2), (1e-2, 2e2)),
    )


def ou2d_rate_matrix(theta, b) -> np.ndarray:
    """Elementwise product of the rate parameters and the effects."""
    return np.array([[theta[2] * b[0], theta[3] * b[1]],
                     [theta[4] * b[2], theta[5] * b[3]]])


def ou2d_kappa(theta, b):
    """Rate matrix of the unit-diffusion process: sigma^-1 (B*b) sigma,
    returned as the flat tuple (k11, k12, k21, k22)."""
    s1, s2 = theta[6], theta[7]
    return (theta[2] * b[0], theta[3] * b[1] * s2 / s1,
            theta[4] * b[2] * s1 / s2, theta[5] * b[3])


def make_cir_model(support: tuple[float, float] = (0.1, 5.0)) -> ModelSpec:
    """Square-root (CIR-type) model with unit-specific reversion level
    offset, speed and volatility.

    dX = -beta_i (X - alpha - alpha_i) dt + sigma_i sqrt(X) dW with
    alpha_i symmetric-Beta on ``support``, beta_i and sigma_i
    log-normal.  Positivity requires
    2 (alpha + alpha_i) beta_i / sigma_i^2 >= 1.
    """
    lo, hi = float(support[0]), float(support[1])
    if not lo < hi:
        raise ConfigError(f"beta-effect support needs lo < hi, got [{lo}, {hi}]")

    def drift(x, theta, b):
        return [-b[1] * (x[0] - theta[0] - b[0])]

    def diffusion_diag(x, theta, b):
        return [b[2] * ad.sqrt(x[0])]

    def diffusion_dx_diag(x, theta, b):
        return [0.5 * b[2] / ad.sqrt(x[0])]

    def lamperti(x, theta, b):
        return [2.0 * ad.sqrt(x[0]) / b[2]]

    def lamperti_inverse(y, theta, b):
        return [(b[2] * y[0]) ** 2 / 4.0]

    def drift_y(y, theta, b):
        q = cir_exponent(theta, b)
        return [(2.0 * q + 1.0) / (2.0 * y[0]) - b[1] * y[0] / 2.0]

    def constraint_check(theta, b):
        level = theta[0] + b[0]
        return (level > 0.0 and b[1] > 0.0 and b[2] > 0.0
                and 2.0 * level * b[1] / b[2] ** 2 >= 1.0)

    def effect_prior(psi):
        return EffectPrior((SymmetricBeta(psi[0], lo, hi),
                            LogNormal(psi[1], psi[2]),
                            LogNormal(psi[3], psi[4])))

    return ModelSpec(
        model_id="cir", dim_d=1, dim_p=1, dim_q=3,
        theta_names=("alpha",),
        psi_names=("p_alpha", "p_beta1", "p_beta2", "p_sigma1", "p_sigma2"),
        effect_names=("alpha_i", "beta_i", "sigma_i"),
        drift=drift, diffusion_diag=diffusion_diag,
        diffusion_dx_diag=diffusion_dx_diag,
        lamperti=lamperti, lamperti_inverse=lamperti_inverse, drift_y=drift_y,
        state_space_check=_positive_rows, constraint_check=constraint_check,
        effect_prior=effect_prior,
        sqrt_diffusion_scale=lambda theta, b: b[2],
        positive_state=True,
        positive_params=(True, True, False, True, False, True),
        param_bounds=(_POS, (1e-2, 1e3), _WIDE, (1e-3, 1e2), _WIDE, (1e-3, 1e2)),
    )


def cir_exponent(theta, b):
    """Stationary-density exponent q = 2 beta_i (alpha + alpha_i) /
    sigma_i^2 - 1 of the square-root model."""
    return 2.0 * b[1] * (theta[0] + b[0]) / b[2] ** 2 - 1.0


MODEL_BUILDERS: dict[str, Callable[..., ModelSpec]] = {
    "growth": make_growth_model,
    "ou2d": make_ou2d_model,
    "cir": make_cir_model,
}


def get_model(model_id: str, **kwargs) -> ModelSpec:
    try:
        builder = MODEL_BUILDERS[model_id]
    except KeyError:
        raise ConfigError(f"unknown model id {model_id!r}; "
                          f"known: {sorted(MODEL_BUILDERS)}") from None
    return builder(**kwargs)
