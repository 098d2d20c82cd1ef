"""Random-effect distributions: log-densities, samplers, moments and the
unconstrained reparameterizations used by the inner optimizer.

Each distribution is a small frozen dataclass.  ``log_pdf`` accepts dual
arguments so the per-unit objective can be differentiated w.r.t. the
effects; samplers take an explicit numpy ``Generator`` so parallel Monte
Carlo runs own independent streams.

The inner maximization over effects runs on an unconstrained scale (log
for positive supports, a scaled logit for bounded ones) with the change
of variables Jacobian folded into the objective, so the Newton steps are
never clipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

from . import autodiff as ad
from .errors import ConfigError

__all__ = [
    "NormalZeroMean",
    "GammaUnitMean",
    "LogNormal",
    "SymmetricBeta",
    "EffectPrior",
    "log_pdf",
    "sample",
    "mean_of",
    "variance_of",
    "derived_moments",
    "to_unconstrained",
    "from_unconstrained",
    "log_jacobian",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class NormalZeroMean:
    """N(0, sd^2) effect, support all reals."""
    sd: float

    def __post_init__(self):
        if self.sd <= 0:
            raise ConfigError(f"normal effect needs sd > 0, got {self.sd}")


@dataclass(frozen=True)
class GammaUnitMean:
    """Gamma(nu, 1/nu): shape nu, scale 1/nu, hence mean 1 and
    variance 1/nu.  Support (0, inf)."""
    nu: float

    def __post_init__(self):
        if self.nu <= 0:
            raise ConfigError(f"gamma effect needs nu > 0, got {self.nu}")


@dataclass(frozen=True)
class LogNormal:
    """log z ~ N(log_mean, log_sd^2).  Support (0, inf)."""
    log_mean: float
    log_sd: float

    def __post_init__(self):
        if self.log_sd <= 0:
            raise ConfigError(f"log-normal effect needs log_sd > 0, got {self.log_sd}")


@dataclass(frozen=True)
class SymmetricBeta:
    """Symmetric Beta(c, c) stretched onto the fixed interval [lo, hi]."""
    concentration: float
    lo: float
    hi: float

    def __post_init__(self):
        if self.concentration <= 0:
            raise ConfigError(
                f"beta effect needs concentration > 0, got {self.concentration}")
        if not self.lo < self.hi:
            raise ConfigError(f"beta support needs lo < hi, got [{self.lo}, {self.hi}]")


EffectDistribution = NormalZeroMean | GammaUnitMean | LogNormal | SymmetricBeta


def _in_support(dist, z) -> bool:
    if isinstance(dist, NormalZeroMean):
        return True
    if isinstance(dist, SymmetricBeta):
        return dist.lo < z < dist.hi
    return z > 0


def log_pdf(dist: EffectDistribution, z):
    """Log-density of one effect component.

    ``z`` may be a float or a dual; floats outside the support return
    ``-inf`` rather than raising.
    """
    if not isinstance(z, (ad.Dual1, ad.Dual2)) and not _in_support(dist, z):
        return -math.inf
    if isinstance(dist, NormalZeroMean):
        s = dist.sd
        return -0.5 * (z / s) ** 2 - math.log(s) - 0.5 * _LOG_2PI
    if isinstance(dist, GammaUnitMean):
        nu = dist.nu
        return (nu * math.log(nu) - gammaln(nu)) + (nu - 1.0) * ad.log(z) - nu * z
    if isinstance(dist, LogNormal):
        lz = ad.log(z)
        return (-lz - math.log(dist.log_sd) - 0.5 * _LOG_2PI
                - 0.5 * ((lz - dist.log_mean) / dist.log_sd) ** 2)
    if isinstance(dist, SymmetricBeta):
        c, lo, hi = dist.concentration, dist.lo, dist.hi
        return (-betaln(c, c) - (2.0 * c - 1.0) * math.log(hi - lo)
                + (c - 1.0) * (ad.log(z - lo) + ad.log(hi - z)))
    raise TypeError(f"unknown effect distribution {dist!r}")


def sample(dist: EffectDistribution, rng: np.random.Generator) -> float:
    """Draw one value with the distribution's law."""
    if isinstance(dist, NormalZeroMean):
        return float(rng.normal(0.0, dist.sd))
    if isinstance(dist, GammaUnitMean):
        return float(rng.gamma(dist.nu, 1.0 / dist.nu))
    if isinstance(dist, LogNormal):
        return float(rng.lognormal(dist.log_mean, dist.log_sd))
    if isinstance(dist, SymmetricBeta):
        u = rng.beta(dist.concentration, dist.concentration)
        return float(dist.lo + (dist.hi - dist.lo) * u)
    raise TypeError(f"unknown effect distribution {dist!r}")


def mean_of(dist: EffectDistribution) -> float:
    if isinstance(dist, NormalZeroMean):
        return 0.0
    if isinstance(dist, GammaUnitMean):
        return 1.0
    if isinstance(dist, LogNormal):
        return math.exp(dist.log_mean + dist.log_sd ** 2 / 2.0)
    if isinstance(dist, SymmetricBeta):
        return 0.5 * (dist.lo + dist.hi)
    raise TypeError(f"unknown effect distribution {dist!r}")


def variance_of(dist: EffectDistribution) -> float:
    if isinstance(dist, NormalZeroMean):
        return dist.sd ** 2
    if isinstance(dist, GammaUnitMean):
        return 1.0 / dist.nu
    if isinstance(dist, LogNormal):
        s2 = dist.log_sd ** 2
        return (math.exp(s2) - 1.0) * math.exp(2.0 * dist.log_mean + s2)
    if isinstance(dist, SymmetricBeta):
        return (dist.hi - dist.lo) ** 2 / (4.0 * (2.0 * dist.concentration + 1.0))
    raise TypeError(f"unknown effect distribution {dist!r}")


# -- unconstrained reparameterization ---------------------------------


def to_unconstrained(dist: EffectDistribution, value: float) -> float:
    if isinstance(dist, NormalZeroMean):
        return float(value)
    if isinstance(dist, (GammaUnitMean, LogNormal)):
        if value <= 0:
            raise ConfigError(f"positive effect value required, got {value}")
        return math.log(value)
    if isinstance(dist, SymmetricBeta):
        t = (value - dist.lo) / (dist.hi - dist.lo)
        if not 0.0 < t < 1.0:
            raise ConfigError(f"effect value {value} outside [{dist.lo}, {dist.hi}]")
        return math.log(t / (1.0 - t))
    raise TypeError(f"unknown effect distribution {dist!r}")


def from_unconstrained(dist: EffectDistribution, u):
    """Map an unconstrained coordinate back into the support; works on
    duals."""
    if isinstance(dist, NormalZeroMean):
        return u
    if isinstance(dist, (GammaUnitMean, LogNormal)):
        return ad.exp(u)
    if isinstance(dist, SymmetricBeta):
        s = 1.0 / (1.0 + ad.exp(-u))
        return dist.lo + (dist.hi - dist.lo) * s
    raise TypeError(f"unknown effect distribution {dist!r}")


def log_jacobian(dist: EffectDistribution, u):
    """log |d value / d u| of the map above; works on duals."""
    if isinstance(dist, NormalZeroMean):
        return 0.0
    if isinstance(dist, (GammaUnitMean, LogNormal)):
        return u
    if isinstance(dist, SymmetricBeta):
        s = 1.0 / (1.0 + ad.exp(-u))
        return math.log(dist.hi - dist.lo) + ad.log(s) + ad.log(1.0 - s)
    raise TypeError(f"unknown effect distribution {dist!r}")


@dataclass(frozen=True)
class EffectPrior:
    """Joint law of the q effects: independent components, one
    distribution each."""

    components: tuple[EffectDistribution, ...]

    @property
    def dim(self) -> int:
        return len(self.components)

    def log_pdf(self, b):
        total = log_pdf(self.components[0], b[0])
        for dist, z in zip(self.components[1:], b[1:]):
            total = total + log_pdf(dist, z)
        return total

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return np.array([sample(d, rng) for d in self.components])

    def means(self) -> np.ndarray:
        return np.array([mean_of(d) for d in self.components])

    def to_unconstrained(self, b) -> np.ndarray:
        return np.array([to_unconstrained(d, v)
                         for d, v in zip(self.components, b)])

    def from_unconstrained(self, u) -> list:
        return [from_unconstrained(d, v) for d, v in zip(self.components, u)]

    def log_jacobian(self, u):
        total = log_jacobian(self.components[0], u[0])
        for dist, v in zip(self.components[1:], u[1:]):
            total = total + log_jacobian(dist, v)
        return total


def derived_moments(prior: EffectPrior) -> list[tuple[float, float]]:
    """Analytic (mean, variance) of each component, used to turn
    distribution-parameter estimates into determined population values."""
    return [(mean_of(d), variance_of(d)) for d in prior.components]
