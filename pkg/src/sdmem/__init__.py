"""sdmem: maximum-likelihood estimation of SDE mixed-effects models.

Multi-unit SDE data simulation, closed-form transition density
expansions, Laplace-approximated marginal likelihood with exact
forward-mode AD Hessians, and a nested optimizer for the population
parameters.
"""

from .errors import (ConfigError, ConstraintError, DomainError, SdmemError,
                     SimulationError)
from .models import (ModelSpec, ParameterVector, PopulationDataset,
                     UnitSeries, get_model, make_cir_model, make_growth_model,
                     make_ou2d_model)
from .effects import (EffectPrior, GammaUnitMean, LogNormal, NormalZeroMean,
                      SymmetricBeta, derived_moments)
from .density import (cfe_log_density, euler_log_density,
                      exact_ou_log_density, get_coeffs)
from .simulate import SimPlan, make_dataset, sample_at, simulate_path
from .estimate import (EstimationReport, FitOptions, InnerSolution,
                       LaplaceObjective, fit, laplace_unit,
                       marginal_negloglik, recover_effects, unit_cond_loglik)
from .harness import (ExperimentConfig, McSummary, coeff_check,
                      compute_fit_bands, paper_config, paper_truth,
                      read_dataset_csv, run_mc, summarize, write_dataset_csv)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConstraintError", "DomainError", "SdmemError",
    "SimulationError",
    "ModelSpec", "ParameterVector", "PopulationDataset", "UnitSeries",
    "get_model", "make_cir_model", "make_growth_model", "make_ou2d_model",
    "EffectPrior", "GammaUnitMean", "LogNormal", "NormalZeroMean",
    "SymmetricBeta", "derived_moments",
    "cfe_log_density", "euler_log_density", "exact_ou_log_density",
    "get_coeffs",
    "SimPlan", "make_dataset", "sample_at", "simulate_path",
    "EstimationReport", "FitOptions", "InnerSolution", "LaplaceObjective",
    "fit", "laplace_unit", "marginal_negloglik", "recover_effects",
    "unit_cond_loglik",
    "ExperimentConfig", "McSummary", "coeff_check", "compute_fit_bands",
    "paper_config", "paper_truth", "read_dataset_csv", "run_mc", "summarize",
    "write_dataset_csv",
]
