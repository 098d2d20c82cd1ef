"""Transition log-density engines.

Three interchangeable approximations of the one-step transition density
of an SDE given its parameters and one unit's effects:

* ``cfe_log_density`` — the order-K closed-form expansion of the log
  transition density built from the hand-coded coefficient sets below
  (K = 1 or 2).
* ``euler_log_density`` — the one-step Gaussian approximation with mean
  x + mu(x) dt and covariance v(x) dt, adequate only for small gaps.
* ``exact_ou_log_density`` — the exact bivariate normal transition of
  the two-dimensional mean-reverting model, via the closed-form 2x2
  Lyapunov solution and matrix exponential.

All evaluators accept single transitions or batches (one array entry
per transition) and dual-number effects, so the same transcription
serves plain evaluation and the Laplace Hessians.

The coefficient transcriptions follow the published closed forms with
three corrections, each cross-checked symbolically against the generic
recursion and enforced numerically by ``sdmem.expansion`` (see
``coeff_check``):

* growth C1: the middle numerator term is the homogeneous quartic sum
  ``3 (y^4 + y^3 y0 + y^2 y0^2 + y y0^3 + y0^4)`` (the printed source
  drops exponents);
* OU C1: the product in the fifth line reads
  ``kappa11 kappa12 + kappa21 kappa22`` (operator missing in print);
* OU C2: the last factor reads
  ``kappa22^2 + kappa12^2 - kappa11^2 - kappa21^2`` (sign typo on the
  last term in print).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, ConstraintError, DomainError
from .models import ModelSpec, cir_exponent, ou2d_kappa, ou2d_rate_matrix

__all__ = [
    "CoeffSet",
    "growth_coeffs",
    "ou2d_coeffs",
    "cir_coeffs",
    "get_coeffs",
    "cfe_log_density",
    "euler_log_density",
    "exact_ou_log_density",
    "lyapunov_2x2",
    "expm_2x2",
    "ou_transition_moments",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class CoeffSet:
    """Evaluators of the expansion coefficients on the unit-diffusion
    scale.  Each takes (y_j, y_jm1, theta, b) with states as d-lists of
    scalars/arrays/duals and returns one scalar of the same kind."""

    cm1: Callable
    c0: Callable
    c1: Callable
    c2: Callable

    def by_order(self, k: int) -> Callable:
        return {-1: self.cm1, 0: self.c0, 1: self.c1, 2: self.c2}[k]


# -- growth model (d = 1) ---------------------------------------------


def _growth_cm1(y, y0, theta, b):
    return -0.5 * (y[0] - y0[0]) ** 2


def _growth_c0(y, y0, theta, b):
    a = theta[0] + b[0]
    g = theta[1] + b[1]
    s2 = theta[2] ** 2
    yj, ym = y[0], y0[0]
    return (-s2 * (yj ** 2 + ym ** 2) * (yj ** 2 - ym ** 2) / (32.0 * g * a)
            + (yj ** 2 - ym ** 2) / (4.0 * g)
            - 0.5 * ad.log(yj / ym))


def _growth_c1(y, y0, theta, b):
    a = theta[0] + b[0]
    g = theta[1] + b[1]
    s2 = theta[2] ** 2
    yj, ym = y[0], y0[0]
    p = yj * ym
    s_2 = yj ** 2 + p + ym ** 2                  # homogeneous quadratic sum
    s_4 = yj ** 4 + p * s_2 + ym ** 4            # y^4 + y^3 y0 + y^2 y0^2 + y y0^3 + y0^4
    s_6 = yj ** 6 + p * s_4 + ym ** 6
    return (-s2 * s2 * s_6 / (896.0 * g ** 2 * a ** 2)
            + s2 * (10.0 * g * s_2 + 3.0 * s_4) / (240.0 * g ** 2 * a)
            - (9.0 * g ** 2 + p * s_2) / (24.0 * p * g ** 2))


def _growth_c2(y, y0, theta, b):
    a = theta[0] + b[0]
    g = theta[1] + b[1]
    s2 = theta[2] ** 2
    yj, ym = y[0], y0[0]
    p = yj * ym
    sq = yj ** 2 + ym ** 2
    return (-s2 * s2 * (5.0 * (yj ** 4 + ym ** 4) + 8.0 * p * sq + 9.0 * p ** 2)
            / (896.0 * g ** 2 * a ** 2)
            + s2 * (9.0 * sq + 12.0 * p + 10.0 * g) / (240.0 * g ** 2 * a)
            - (p ** 2 + 9.0 * g ** 2) / (24.0 * p ** 2 * g ** 2))


def growth_coeffs() -> CoeffSet:
    return CoeffSet(_growth_cm1, _growth_c0, _growth_c1, _growth_c2)


# -- two-dimensional OU model ------------------------------------------


def _ou2d_cm1(y, y0, theta, b):
    return -0.5 * (y[0] - y0[0]) ** 2 - 0.5 * (y[1] - y0[1]) ** 2


def _ou2d_c0(y, y0, theta, b):
    k11, k12, k21, k22 = ou2d_kappa(theta, b)
    e1 = theta[0] / theta[6]
    e2 = theta[1] / theta[7]
    u1 = y[0] + y0[0] - 2.0 * e1
    u2 = y[1] + y0[1] - 2.0 * e2
    return (-0.5 * (y[0] - y0[0]) * (u1 * k11 + u2 * k12)
            - 0.5 * (y[1] - y0[1]) * (u1 * k21 + u2 * k22))


def _ou2d_c1(y, y0, theta, b):
    k11, k12, k21, k22 = ou2d_kappa(theta, b)
    e1 = theta[0] / theta[6]
    e2 = theta[1] / theta[7]
    w1 = y0[0] - e1
    w2 = y0[1] - e2
    d1 = y[0] - y0[0]
    d2 = y[1] - y0[1]
    m = k11 * k12 + k21 * k22
    r11 = k11 ** 2 + k21 ** 2
    r22 = k12 ** 2 + k22 ** 2
    return (0.5 * (k11 - (w1 * k11 + w2 * k12) ** 2)
            + 0.5 * (k22 - (w1 * k21 + w2 * k22) ** 2)
            - 0.5 * d1 * (w1 * r11 + w2 * m)
            + d1 ** 2 * (-4.0 * k11 ** 2 + k12 ** 2 - 2.0 * k12 * k21
                         - 3.0 * k21 ** 2) * (1.0 / 24.0)
            - 0.5 * d2 * (w1 * m + w2 * r22)
            + d2 ** 2 * (-4.0 * k22 ** 2 + k21 ** 2 - 2.0 * k12 * k21
                         - 3.0 * k12 ** 2) * (1.0 / 24.0)
            - d1 * d2 * m * (1.0 / 3.0))


def _ou2d_c2(y, y0, theta, b):
    k11, k12, k21, k22 = ou2d_kappa(theta, b)
    e1 = theta[0] / theta[6]
    e2 = theta[1] / theta[7]
    w1 = y0[0] - e1
    w2 = y0[1] - e2
    d1 = y[0] - y0[0]
    d2 = y[1] - y0[1]
    rot = k12 - k21
    m = k11 * k12 + k21 * k22
    r11 = k11 ** 2 + k21 ** 2
    r22 = k12 ** 2 + k22 ** 2
    return (-(2.0 * k11 ** 2 + 2.0 * k22 ** 2 + (k12 + k21) ** 2) * (1.0 / 12.0)
            + d1 * rot * (w1 * m + w2 * r22) * (1.0 / 6.0)
            + d1 ** 2 * rot * m * (1.0 / 12.0)
            - d2 ** 2 * rot * m * (1.0 / 12.0)
            - d2 * rot * (w1 * r11 + w2 * m) * (1.0 / 6.0)
            + d1 * d2 * rot * (r22 - r11) * (1.0 / 12.0))


def ou2d_coeffs() -> CoeffSet:
    return CoeffSet(_ou2d_cm1, _ou2d_c0, _ou2d_c1, _ou2d_c2)


# -- square-root model (d = 1) -----------------------------------------


def _cir_cm1(y, y0, theta, b):
    return -0.5 * (y[0] - y0[0]) ** 2


def _cir_c0(y, y0, theta, b):
    q = cir_exponent(theta, b)
    bt = b[1]
    return (q + 0.5) * ad.log(y[0] / y0[0]) - 0.25 * bt * (y[0] ** 2 - y0[0] ** 2)


def _cir_c1(y, y0, theta, b):
    q = cir_exponent(theta, b)
    bt = b[1]
    p = y[0] * y0[0]
    s_2 = y[0] ** 2 + p + y0[0] ** 2
    return -(-12.0 * bt * p * (q + 1.0) + bt ** 2 * p * s_2
             + 12.0 * q ** 2 - 3.0) / (24.0 * p)


def _cir_c2(y, y0, theta, b):
    q = cir_exponent(theta, b)
    bt = b[1]
    p2 = (y[0] * y0[0]) ** 2
    return -(bt ** 2 * p2 + 12.0 * q ** 2 - 3.0) / (24.0 * p2)


def cir_coeffs() -> CoeffSet:
    return CoeffSet(_cir_cm1, _cir_c0, _cir_c1, _cir_c2)


_COEFFS = {"growth": growth_coeffs, "ou2d": ou2d_coeffs, "cir": cir_coeffs}


def get_coeffs(model_id: str) -> CoeffSet:
    try:
        return _COEFFS[model_id]()
    except KeyError:
        raise ConfigError(f"no hand-coded coefficients for model {model_id!r}") from None


# -- assembly -----------------------------------------------------------


def _as_cols(x, d: int) -> list:
    """Normalize a state argument to a list of d per-coordinate columns."""
    arr = np.asarray(x, dtype=float)
    if d == 1:
        if arr.ndim == 0:
            return [float(arr)]
        if arr.ndim == 1:
            return [arr]
        if arr.ndim == 2 and arr.shape[1] == 1:
            return [arr[:, 0]]
    else:
        if arr.ndim == 1 and arr.shape[0] == d:
            return [float(v) for v in arr]
        if arr.ndim == 2 and arr.shape[1] == d:
            return [arr[:, h] for h in range(d)]
    raise ConfigError(f"state argument with shape {arr.shape} does not match d={d}")


def _check_admissible(model: ModelSpec, cols, theta, b) -> None:
    obs = np.column_stack([np.atleast_1d(np.asarray(c, dtype=float)) for c in cols])
    if not model.state_space_check(obs):
        raise DomainError(f"{model.model_id}: state outside the state space")
    bv = [ad.value_of(v) for v in b]
    if not model.constraint_check(np.asarray(theta, dtype=float), bv):
        raise ConstraintError(f"{model.model_id}: (theta, b) violates the "
                              "admissibility constraint")


def cfe_log_density(model: ModelSpec, coeffs: CoeffSet, x_j, x_jm1, delta,
                    theta, b, order: int = 2):
    """Order-K closed-form expansion of the log transition density,
    assembled on the observation scale."""
    if order not in (1, 2):
        raise ConfigError(f"expansion order {order} unsupported (use 1 or 2)")
    d = model.dim_d
    xj = _as_cols(x_j, d)
    xm = _as_cols(x_jm1, d)
    _check_admissible(model, xj, theta, b)
    _check_admissible(model, xm, theta, b)
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise DomainError("time gap must be positive")

    yj = model.lamperti(xj, theta, b)
    ym = model.lamperti(xm, theta, b)
    diag = model.diffusion_diag(xj, theta, b)

    out = -0.5 * d * (_LOG_2PI + np.log(delta))
    for h in range(d):
        out = out - ad.log(diag[h])
    out = out + coeffs.cm1(yj, ym, theta, b) / delta
    out = out + coeffs.c0(yj, ym, theta, b)
    out = out + coeffs.c1(yj, ym, theta, b) * delta
    if order >= 2:
        out = out + coeffs.c2(yj, ym, theta, b) * (0.5 * delta ** 2)
    return out


def euler_log_density(model: ModelSpec, x_j, x_jm1, delta, theta, b):
    """One-step Gaussian log-density: mean x + mu(x) dt, variance
    v(x) dt, with v diagonal for all built-in families."""
    d = model.dim_d
    xj = _as_cols(x_j, d)
    xm = _as_cols(x_jm1, d)
    _check_admissible(model, xj, theta, b)
    _check_admissible(model, xm, theta, b)
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise DomainError("time gap must be positive")

    mu = model.drift(xm, theta, b)
    diag = model.diffusion_diag(xm, theta, b)
    out = -0.5 * d * _LOG_2PI
    for h in range(d):
        var = diag[h] ** 2 * delta
        resid = xj[h] - (xm[h] + mu[h] * delta)
        out = out - 0.5 * ad.log(var) - resid ** 2 / (2.0 * var)
    return out


# -- exact OU transition ------------------------------------------------


def _m2_mul(a, c):
    return (a[0] * c[0] + a[1] * c[2], a[0] * c[1] + a[1] * c[3],
            a[2] * c[0] + a[3] * c[2], a[2] * c[1] + a[3] * c[3])


def _m2_t(a):
    return (a[0], a[2], a[1], a[3])


def lyapunov_2x2(a, q):
    """Closed-form solution L of a L + L a^T = q for 2x2 matrices, both
    given as flat (11, 12, 21, 22) tuples, q symmetric."""
    tr = a[0] + a[3]
    det = a[0] * a[3] - a[1] * a[2]
    shifted = (a[0] - tr, a[1], a[2], a[3] - tr)
    inner = _m2_mul(_m2_mul(shifted, q), _m2_t(shifted))
    denom = 2.0 * tr * det
    if ad.value_of(denom) == 0.0:
        raise DomainError("rate matrix with zero trace or determinant has "
                          "no stationary covariance")
    return tuple((det * q[i] + inner[i]) / denom for i in range(4))


def expm_2x2(a, scale=1.0):
    """Matrix exponential of ``-a * scale`` for a 2x2 flat tuple.

    ``scale`` may be a positive scalar or an array of time gaps; the
    branch on the eigenvalue discriminant of ``a`` is shared by every
    gap, which keeps the computation dual-friendly.
    """
    tau = 0.5 * (a[0] + a[3])
    det = a[0] * a[3] - a[1] * a[2]
    disc = tau * tau - det
    dv = ad.value_of(disc)
    tol = 1e-12 * max(1.0, abs(ad.value_of(tau)) ** 2 + abs(ad.value_of(det)))
    if dv > tol:
        s = ad.sqrt(disc)
        ep = ad.exp(s * scale)
        em = 1.0 / ep
        ch = 0.5 * (ep + em)
        shc = 0.5 * (ep - em) / s
    elif dv < -tol:
        s = ad.sqrt(-disc)
        ch = ad.cos(s * scale)
        shc = ad.sin(s * scale) / s
    else:
        w = disc * scale ** 2
        ch = 1.0 + w * 0.5 + w ** 2 * (1.0 / 24.0)
        shc = scale * (1.0 + w * (1.0 / 6.0) + w ** 2 * (1.0 / 120.0))
    damp = ad.exp(-tau * scale)
    off = (a[0] - tau, a[1], a[2], a[3] - tau)
    return (damp * (ch - shc * off[0]), damp * (-shc * off[1]),
            damp * (-shc * off[2]), damp * (ch - shc * off[3]))


def ou_transition_moments(x_jm1, delta, theta, b):
    """Mean vector and covariance (flat 2x2) of the exact OU transition."""
    a = (theta[2] * b[0], theta[3] * b[1], theta[4] * b[2], theta[5] * b[3])
    q = (theta[6] ** 2, 0.0, 0.0, theta[7] ** 2)
    lam = lyapunov_2x2(a, q)
    e = expm_2x2(a, scale=delta)
    r1 = x_jm1[0] - theta[0]
    r2 = x_jm1[1] - theta[1]
    m1 = theta[0] + e[0] * r1 + e[1] * r2
    m2 = theta[1] + e[2] * r1 + e[3] * r2
    elam = _m2_mul(e, lam)
    omega = tuple(lam[i] - v for i, v in enumerate(_m2_mul(elam, _m2_t(e))))
    return (m1, m2), omega


def exact_ou_log_density(x_j, x_jm1, delta, theta, b):
    """Exact bivariate normal log transition density of the OU model."""
    theta = np.asarray(theta, dtype=float)
    xj = _as_cols(x_j, 2)
    xm = _as_cols(x_jm1, 2)
    bv = [ad.value_of(v) for v in b]
    rate = ou2d_rate_matrix(theta, bv)
    if not ((rate[0, 0] + rate[1, 1]) > 0 and np.linalg.det(rate) > 0):
        raise ConstraintError("ou2d: rate matrix must have eigenvalues with "
                              "positive real parts")
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise DomainError("time gap must be positive")

    (m1, m2), om = ou_transition_moments(xm, delta, theta, b)
    det = om[0] * om[3] - om[1] * om[2]
    dv, o0 = ad.value_of(det), ad.value_of(om[0])
    if np.any(np.asarray(dv) <= 0) or np.any(np.asarray(o0) <= 0):
        raise DomainError("ou2d: transition covariance not positive definite")
    r1 = xj[0] - m1
    r2 = xj[1] - m2
    quad = (om[3] * r1 ** 2 - (om[1] + om[2]) * r1 * r2 + om[0] * r2 ** 2) / det
    return -_LOG_2PI - 0.5 * ad.log(det) - 0.5 * quad
