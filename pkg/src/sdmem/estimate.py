"""Laplace-approximated maximum likelihood for SDE mixed-effects models.

Estimation is a nested optimization.  The inner step maximizes, for one
unit, the joint log-density of its observations and effects,

    f(b) = log p(x_unit | b, theta) + log p_prior(b | psi),

over the effects using Newton iterations with exact forward-mode
gradient and Hessian and trust-region safeguarding.  The marginal
log-likelihood contribution of the unit is then the Laplace value

    f(b_hat) + (q/2) log(2 pi) - 1/2 log |-H(b_hat)|.

The outer step minimizes the summed negative log-likelihood over
(theta, psi) with a bounded Nelder-Mead simplex on an internally
transformed scale (log where a parameter is positive); inner solves are
warm-started from the previous outer iteration's maximizers.

Effects with constrained supports are optimized on the unconstrained
scale provided by :mod:`sdmem.effects`, with the Jacobian folded into
the objective, so the Newton steps are never clipped.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import autodiff as ad
from .density import (cfe_log_density, euler_log_density,
                      exact_ou_log_density, get_coeffs)
from .errors import ConfigError, ConstraintError, DomainError
from .models import ModelSpec, ParameterVector, PopulationDataset, UnitSeries

__all__ = [
    "METHODS",
    "FitOptions",
    "LaplaceObjective",
    "InnerSolution",
    "EstimationReport",
    "unit_cond_loglik",
    "laplace_unit",
    "marginal_negloglik",
    "fit",
    "recover_effects",
]

METHODS = ("cfe2", "cfe1", "eum", "exact-ou")

_LOG_2PI = np.log(2.0 * np.pi)


def _check_method(method: str, model: ModelSpec) -> str:
    if method not in METHODS:
        raise ConfigError(f"unknown density method {method!r}; known: {METHODS}")
    if method == "exact-ou" and model.model_id != "ou2d":
        raise ConfigError("method 'exact-ou' is only valid for the ou2d model")
    return method


@dataclass
class FitOptions:
    """Solver tolerances.

    The inner gradient tolerance sits well below the outer simplex
    tolerance on purpose: the objective seen by the outer search is
    computed through the inner solves, and residual inner error acts as
    evaluation noise that stalls the simplex contraction once function
    differences shrink to that scale.
    """

    inner_grad_tol: float = 1e-10
    inner_max_iter: int = 100
    outer_xatol: float = 1e-6
    outer_fatol: float = 1e-6
    max_outer_evals: int = 2000
    penalty: float = 1e10


def unit_cond_loglik(method: str, model: ModelSpec, unit: UnitSeries,
                     theta, b):
    """Conditional log-likelihood of one unit given its effects: the sum
    of transition log-densities, with the initial state conditioned on."""
    _check_method(method, model)
    if unit.n_transitions < 1:
        raise ConfigError(f"unit {unit.unit_id} has no transitions")
    xj = unit.obs[1:]
    xm = unit.obs[:-1]
    delta = np.diff(unit.times)
    return _transition_loglik_sum(method, model, xj, xm, delta, theta, b,
                                  unit.unit_id)


def _transition_loglik_sum(method, model, xj, xm, delta, theta, b, unit_id):
    try:
        if method == "cfe2" or method == "cfe1":
            terms = cfe_log_density(model, get_coeffs(model.model_id), xj, xm,
                                    delta, theta, b,
                                    order=2 if method == "cfe2" else 1)
        elif method == "eum":
            terms = euler_log_density(model, xj, xm, delta, theta, b)
        else:
            terms = exact_ou_log_density(xj, xm, delta, theta, b)
    except (DomainError, ConstraintError) as err:
        raise type(err)(f"unit {unit_id}: {err}") from None
    if isinstance(terms, ad.Dual2):
        return terms.sum()
    return float(np.sum(terms))


class LaplaceObjective:
    """Per-unit objective f on the unconstrained effect scale, callable
    with plain floats or lifted duals interchangeably."""

    def __init__(self, model: ModelSpec, method: str, unit: UnitSeries,
                 theta, psi):
        self.model = model
        self.method = _check_method(method, model)
        self.unit = unit
        self.theta = np.asarray(theta, dtype=float)
        self.prior = model.effect_prior(np.asarray(psi, dtype=float))
        self._xj = unit.obs[1:]
        self._xm = unit.obs[:-1]
        self._delta = np.diff(unit.times)

    def start_from_prior_mean(self) -> np.ndarray:
        return self.prior.to_unconstrained(self.prior.means())

    def __call__(self, u):
        """Evaluate f at unconstrained coordinates; generic over duals."""
        b = self.prior.from_unconstrained(u)
        bv = [ad.value_of(v) for v in b]
        if not self.model.constraint_check(self.theta, bv):
            raise ConstraintError(
                f"{self.model.model_id}: effects violate the constraint")
        ll = _transition_loglik_sum(self.method, self.model, self._xj,
                                    self._xm, self._delta, self.theta, b,
                                    self.unit.unit_id)
        return ll + self.prior.log_pdf(b) + self.prior.log_jacobian(u)

    def value(self, u) -> float:
        res = self(list(np.asarray(u, dtype=float)))
        return float(res.val if isinstance(res, ad.Dual2) else res)

    def value_grad_hess(self, u):
        res = self(ad.lift(np.asarray(u, dtype=float)))
        if isinstance(res, ad.Dual2):
            return float(res.val), res.grad.copy(), res.hess_matrix()
        q = self.prior.dim
        return float(res), np.zeros(q), np.zeros((q, q))


@dataclass
class InnerSolution:
    """Result of one per-unit maximization (unconstrained scale Hessian,
    natural-scale effects)."""

    unit_id: int
    b_hat: np.ndarray
    u_hat: np.ndarray
    f_at_max: float
    hess: np.ndarray
    laplace: float
    iterations: int
    converged: bool
    grad_norm: float
    pd_failed: bool = False


def _solve_trust_region(g: np.ndarray, h: np.ndarray, radius: float) -> np.ndarray:
    """Minimize g.p + p.H.p/2 subject to ||p|| <= radius (exact solve
    via the eigendecomposition; dimensions here are tiny)."""
    w, q = np.linalg.eigh(h)
    gq = q.T @ g
    if w[0] > 0.0:
        p = q @ (-gq / w)
        if np.linalg.norm(p) <= radius:
            return p

    def norm_at(lam: float) -> float:
        return float(np.linalg.norm(gq / (w + lam)))

    lam_lo = max(0.0, -w[0])
    eps = 1e-12 * max(1.0, abs(w[0]))
    lam = lam_lo + eps
    if norm_at(lam) < radius:
        # hard case: step along the most negative curvature direction
        p = q @ (-gq / (w + lam))
        v = q[:, 0]
        resid = radius ** 2 - float(p @ p)
        if resid > 0:
            p = p + np.sqrt(resid) * v
        return p
    hi = lam + 1.0
    while norm_at(hi) > radius:
        hi = 2.0 * hi + 1.0
    lo = lam
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if norm_at(mid) > radius:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    return q @ (-gq / (w + hi))


def laplace_unit(objective: LaplaceObjective, u_start=None,
                 options: FitOptions | None = None) -> InnerSolution:
    """Maximize the per-unit objective by trust-region Newton steps and
    return the maximizer together with its Laplace contribution."""
    opts = options or FitOptions()
    u0 = (np.asarray(u_start, dtype=float) if u_start is not None
          else objective.start_from_prior_mean())

    u, f, g, h, iters, converged = _maximize(objective, u0, opts)

    pd_failed = False
    neg_h = -h
    try:
        chol = np.linalg.cholesky(neg_h)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    except np.linalg.LinAlgError:
        # retry once from the prior mean, then fall back flagged
        u2, f2, g2, h2, it2, conv2 = _maximize(
            objective, objective.start_from_prior_mean(), opts)
        try:
            chol = np.linalg.cholesky(-h2)
            logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
            u, f, g, h, iters, converged = u2, f2, g2, h2, iters + it2, conv2
        except np.linalg.LinAlgError:
            pd_failed = True
            converged = False
            eig = np.abs(np.linalg.eigvalsh(neg_h))
            eig = np.maximum(eig, 1e-300)
            logdet = float(np.sum(np.log(eig)))

    q = u.shape[0]
    laplace = f + 0.5 * q * _LOG_2PI - 0.5 * logdet
    b_hat = np.array([ad.value_of(v)
                      for v in objective.prior.from_unconstrained(u)])
    return InnerSolution(unit_id=objective.unit.unit_id, b_hat=b_hat,
                         u_hat=u, f_at_max=f, hess=h, laplace=laplace,
                         iterations=iters, converged=converged,
                         grad_norm=float(np.max(np.abs(g))),
                         pd_failed=pd_failed)


def _maximize(objective, u0, opts: FitOptions):
    u = np.asarray(u0, dtype=float).copy()
    f, g, h = objective.value_grad_hess(u)
    if not np.isfinite(f):
        raise DomainError("objective not finite at the inner starting point")
    radius = 1.0
    converged = False
    iters = 0
    for _ in range(opts.inner_max_iter):
        if np.max(np.abs(g)) < opts.inner_grad_tol * max(1.0, abs(f)):
            converged = True
            break
        iters += 1
        p = _solve_trust_region(-g, -h, radius)
        pnorm = float(np.linalg.norm(p))
        predicted = float(g @ p + 0.5 * p @ h @ p)  # model increase of f
        try:
            f_trial = objective.value(u + p)
        except (DomainError, ConstraintError):
            f_trial = -np.inf
        actual = f_trial - f
        ratio = actual / predicted if predicted > 0 else -np.inf
        if not np.isfinite(f_trial):
            ratio = -np.inf
        if ratio < 0.25:
            radius *= 0.25
        elif ratio > 0.75 and pnorm >= 0.99 * radius:
            radius *= 2.0
        if np.isfinite(f_trial) and actual > 0.0:
            u = u + p
            f, g, h = objective.value_grad_hess(u)
        if radius < 1e-13:
            # cannot resolve further improvement in double precision;
            # accept if the gradient is small on the documented scale
            converged = bool(np.max(np.abs(g)) < 1e-6 * max(1.0, abs(f)))
            break
    return u, f, g, h, iters, converged


@dataclass
class MarginalDiagnostics:
    inner_iterations: int = 0
    flagged_units: list = field(default_factory=list)
    penalized: bool = False


def marginal_negloglik(method: str, model: ModelSpec,
                       dataset: PopulationDataset, theta, psi,
                       warm_starts: dict | None = None,
                       options: FitOptions | None = None):
    """Negative Laplace-approximated marginal log-likelihood of the whole
    dataset.

    Returns (value, refreshed warm starts, diagnostics).  A domain or
    constraint failure at an inner starting point yields the finite
    penalty value so a derivative-free outer loop can retreat.
    """
    opts = options or FitOptions()
    warm_starts = warm_starts or {}
    diag = MarginalDiagnostics()
    total = 0.0
    warm_out = dict(warm_starts)
    for unit in dataset.units:
        objective = LaplaceObjective(model, method, unit, theta, psi)
        u0 = warm_starts.get(unit.unit_id)
        try:
            sol = laplace_unit(objective, u_start=u0, options=opts)
        except (DomainError, ConstraintError):
            if u0 is not None:
                try:
                    sol = laplace_unit(objective, u_start=None, options=opts)
                except (DomainError, ConstraintError):
                    diag.penalized = True
                    return opts.penalty, dict(warm_starts), diag
            else:
                diag.penalized = True
                return opts.penalty, dict(warm_starts), diag
        total += sol.laplace
        warm_out[unit.unit_id] = sol.u_hat
        diag.inner_iterations += sol.iterations
        if sol.pd_failed or not sol.converged:
            diag.flagged_units.append(unit.unit_id)
    if not np.isfinite(total):
        diag.penalized = True
        return opts.penalty, dict(warm_starts), diag
    return -total, warm_out, diag


@dataclass
class EstimationReport:
    """Fit result on the natural parameter scale."""

    model_id: str
    method: str
    theta_hat: np.ndarray
    psi_hat: np.ndarray
    log_likelihood: float
    unit_solutions: list[InnerSolution]
    outer_evaluations: int
    converged: bool
    wall_time: float
    best_trace: list[float]
    message: str = ""

    @property
    def params_hat(self) -> np.ndarray:
        return np.concatenate([self.theta_hat, self.psi_hat])


def _to_internal(values: np.ndarray, mask) -> np.ndarray:
    out = np.array(values, dtype=float)
    for i, positive in enumerate(mask):
        if positive:
            if out[i] <= 0:
                raise ConfigError(
                    f"parameter {i} must be positive for the log transform")
            out[i] = np.log(out[i])
    return out


def _from_internal(z: np.ndarray, mask) -> np.ndarray:
    out = np.array(z, dtype=float)
    for i, positive in enumerate(mask):
        if positive:
            out[i] = np.exp(out[i])
    return out


def fit(method: str, model: ModelSpec, dataset: PopulationDataset,
        start: ParameterVector, options: FitOptions | None = None) -> EstimationReport:
    """Bounded Nelder-Mead over (theta, psi), each evaluation running the
    warm-started inner Laplace solves."""
    opts = options or FitOptions()
    _check_method(method, model)
    dataset.validate(model)
    t_begin = time.perf_counter()

    mask = model.positive_params
    z0 = _to_internal(start.full, mask)
    bounds = []
    for (lo, hi), positive in zip(start.bounds, mask):
        if positive:
            bounds.append((np.log(lo) if lo > 0 else -50.0,
                           np.log(hi) if np.isfinite(hi) else 50.0))
        else:
            bounds.append((lo, hi))

    warm: dict = {}
    best_trace: list[float] = []

    def objective(z: np.ndarray) -> float:
        theta, psi = model.split_params(_from_internal(z, mask))
        value, warm_next, _ = marginal_negloglik(method, model, dataset,
                                                 theta, psi, warm, opts)
        warm.clear()
        warm.update(warm_next)
        best_trace.append(min(best_trace[-1], value) if best_trace else value)
        return value

    res = minimize(objective, z0, method="Nelder-Mead", bounds=bounds,
                   options={"xatol": opts.outer_xatol,
                            "fatol": opts.outer_fatol,
                            "maxfev": opts.max_outer_evals,
                            "maxiter": opts.max_outer_evals,
                            "adaptive": len(z0) >= 8})
    theta_hat, psi_hat = model.split_params(_from_internal(res.x, mask))

    # refresh the per-unit maximizers at the reported optimum
    value, warm_final, _ = marginal_negloglik(method, model, dataset,
                                              theta_hat, psi_hat, warm, opts)
    solutions = []
    for unit in dataset.units:
        objective_u = LaplaceObjective(model, method, unit, theta_hat, psi_hat)
        solutions.append(laplace_unit(objective_u,
                                      u_start=warm_final.get(unit.unit_id),
                                      options=opts))
    return EstimationReport(
        model_id=model.model_id, method=method,
        theta_hat=theta_hat, psi_hat=psi_hat,
        log_likelihood=-value, unit_solutions=solutions,
        outer_evaluations=res.nfev, converged=bool(res.success),
        wall_time=time.perf_counter() - t_begin,
        best_trace=best_trace, message=str(res.message))


def recover_effects(method: str, model: ModelSpec,
                    dataset: PopulationDataset, theta_hat, psi_hat,
                    options: FitOptions | None = None) -> list[InnerSolution]:
    """Per-unit empirical Bayes maximizers at fitted parameters (cold
    starts from the prior mean)."""
    opts = options or FitOptions()
    out = []
    for unit in dataset.units:
        objective = LaplaceObjective(model, method, unit, theta_hat, psi_hat)
        out.append(laplace_unit(objective, options=opts))
    return out
