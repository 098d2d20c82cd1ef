"""Generic order-K coefficient engine for reducible SDEs.

Implements the general recursion for the log-density expansion
coefficients of a unit-diffusion process: line integrals over [0, 1]
are evaluated by Gauss-Legendre quadrature and the state derivatives of
the integrands by nested first-order duals (differentiation under the
integral sign, valid for the smooth drifts handled here).

The engine exists to validate the hand-coded coefficient sets in
:mod:`sdmem.density` at arbitrary points — it is the arbiter used to
reconcile misprints in the published closed forms — and to make new
reducible models usable without hand transcription.  It is evaluated on
plain floats; the production path stays with the hand-coded sets.

Also provided: the necessary-and-sufficient reducibility check based on
the cross-partial identity of the inverse diffusion matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .autodiff import Dual1, new_level, value_of
from .density import CoeffSet
from .errors import DomainError
from .models import ModelSpec

__all__ = [
    "QuadratureRule",
    "gauss_legendre_01",
    "ReducedModel",
    "reduced_from_model",
    "c0",
    "g1",
    "c_k",
    "generic_coeffs",
    "check_reducible",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on [0, 1]; exact for polynomials up to degree
    2 * order - 1."""

    nodes: tuple[float, ...]
    weights: tuple[float, ...]
    order: int


def gauss_legendre_01(order: int = 20) -> QuadratureRule:
    x, w = np.polynomial.legendre.leggauss(order)
    return QuadratureRule(nodes=tuple(0.5 * (x + 1.0)),
                          weights=tuple(0.5 * w), order=order)


_DEFAULT_RULE = gauss_legendre_01(20)


@dataclass(frozen=True)
class ReducedModel:
    """Unit-diffusion process: dY = mu_y(Y) dt + dW."""

    dim: int
    mu_y: Callable  # (y_list, theta, b) -> d-list, generic over scalars


def reduced_from_model(model: ModelSpec) -> ReducedModel:
    return ReducedModel(dim=model.dim_d, mu_y=model.drift_y)


def _path_point(y, y0, u):
    return [y0[h] + u * (y[h] - y0[h]) for h in range(len(y))]


def _grad_part(x, level):
    return x.grad[0] if isinstance(x, Dual1) and x.level == level else 0.0


def _val_part(x, level):
    return x.val if isinstance(x, Dual1) and x.level == level else x


def _d1_dir(f, y, h):
    """First partial of scalar f(list) in direction h."""
    level = new_level()
    z = list(y)
    z[h] = Dual1(y[h], (1.0,), level)
    return _grad_part(f(z), level)


def _val_d1_d2_dir(f, y, h):
    """(f, df/dy_h, d2f/dy_h^2) in one nested-dual evaluation using two
    fresh levels."""
    inner = new_level()
    outer = new_level()
    z = list(y)
    z[h] = Dual1(Dual1(y[h], (1.0,), inner), (1.0,), outer)
    r = f(z)
    r_val = _val_part(r, outer)
    r_grad = _grad_part(r, outer)
    v = _val_part(r_val, inner)
    d1 = _grad_part(r_val, inner)
    d2 = _grad_part(r_grad, inner)
    return v, d1, d2


def c0(reduced: ReducedModel, y, y0, theta, b,
       quad: QuadratureRule = _DEFAULT_RULE):
    """Line integral of the reduced drift along the segment [y0, y]:
    sum_h (y_h - y0_h) * int_0^1 mu_y^(h)(y0 + u (y - y0)) du."""
    acc = [0.0] * reduced.dim
    for u, w in zip(quad.nodes, quad.weights):
        mu = reduced.mu_y(_path_point(y, y0, u), theta, b)
        for h in range(reduced.dim):
            acc[h] = acc[h] + w * mu[h]
    total = 0.0
    for h in range(reduced.dim):
        total = total + (y[h] - y0[h]) * acc[h]
    return total


def g1(reduced: ReducedModel, y, y0, theta, b,
       quad: QuadratureRule = _DEFAULT_RULE):
    """First correction integrand, built from the reduced drift and the
    derivatives of c0."""
    def c0f(z):
        return c0(reduced, z, y0, theta, b, quad)

    mu = reduced.mu_y(list(y), theta, b)
    total = 0.0
    for h in range(reduced.dim):
        dmu = _d1_dir(lambda z: reduced.mu_y(z, theta, b)[h], y, h)
        _, dc0, d2c0 = _val_d1_d2_dir(c0f, y, h)
        total = total - dmu - mu[h] * dc0 + 0.5 * (d2c0 + dc0 * dc0)
    return total


def c_k(reduced: ReducedModel, y, y0, theta, b, k: int,
        quad: QuadratureRule = _DEFAULT_RULE):
    """k-th expansion coefficient, k in {1, 2}:
    C^(k)(y|y0) = k * int_0^1 G^(k)(y0 + u(y - y0) | y0) u^(k-1) du."""
    if k == 1:
        total = 0.0
        for u, w in zip(quad.nodes, quad.weights):
            total = total + w * g1(reduced, _path_point(y, y0, u),
                                   y0, theta, b, quad)
        return total
    if k != 2:
        raise DomainError(f"generic engine supports k <= 2, got {k}")

    def c0f(z):
        return c0(reduced, z, y0, theta, b, quad)

    def c1f(z):
        return c_k(reduced, z, y0, theta, b, 1, quad)

    def g2(w_pt):
        mu = reduced.mu_y(list(w_pt), theta, b)
        tot = 0.0
        for h in range(reduced.dim):
            _, dc1, d2c1 = _val_d1_d2_dir(c1f, w_pt, h)
            dc0 = _d1_dir(c0f, w_pt, h)
            tot = tot - mu[h] * dc1 + 0.5 * d2c1 + dc0 * dc1
        return tot

    total = 0.0
    for u, w in zip(quad.nodes, quad.weights):
        total = total + 2.0 * w * u * g2(_path_point(y, y0, u))
    return total


def generic_coeffs(model: ModelSpec,
                   quad: QuadratureRule = _DEFAULT_RULE) -> CoeffSet:
    """A CoeffSet backed by the generic engine (plain floats only);
    drop-in oracle for the hand-coded sets."""
    reduced = reduced_from_model(model)

    def cm1(y, y0, theta, b):
        total = 0.0
        for h in range(model.dim_d):
            total = total - 0.5 * (y[h] - y0[h]) ** 2
        return total

    return CoeffSet(
        cm1=cm1,
        c0=lambda y, y0, theta, b: c0(reduced, y, y0, theta, b, quad),
        c1=lambda y, y0, theta, b: c_k(reduced, y, y0, theta, b, 1, quad),
        c2=lambda y, y0, theta, b: c_k(reduced, y, y0, theta, b, 2, quad),
    )


def _inv_generic(mat, d):
    """Inverse of a d x d matrix of generic scalars, d <= 2."""
    if d == 1:
        det = mat[0][0]
        if value_of(det) == 0.0:
            raise DomainError("singular diffusion matrix at probe point")
        return [[1.0 / det]]
    a, bb = mat[0][0], mat[0][1]
    c, dd = mat[1][0], mat[1][1]
    det = a * dd - bb * c
    if value_of(det) == 0.0:
        raise DomainError("singular diffusion matrix at probe point")
    return [[dd / det, -bb / det], [-c / det, a / det]]


def check_reducible(model, probes, theta, b,
                    tol: float = 1e-8) -> tuple[bool, float]:
    """Evaluate the cross-partial identity
    d(sigma^-1)_ij / dx_k == d(sigma^-1)_ik / dx_j at each probe state.

    Returns (reducible, max violation).  ``model`` needs only ``dim_d``
    and a ``diffusion`` callback over generic states.
    """
    d = model.dim_d
    worst = 0.0
    for x in probes:
        x = list(np.atleast_1d(np.asarray(x, dtype=float)))
        grads = [[None] * d for _ in range(d)]
        for i in range(d):
            for j in range(d):
                def entry(z, i=i, j=j):
                    return _inv_generic(model.diffusion(z, theta, b), d)[i][j]
                row = []
                for k in range(d):
                    row.append(_d1_dir(entry, x, k))
                grads[i][j] = row
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    v = abs(grads[i][j][k] - grads[i][k][j])
                    worst = max(worst, v)
    return worst < tol, worst
