import math

import numpy as np
import pytest
from scipy.special import gammaln

from sdmem import autodiff as ad
from sdmem.errors import DomainError

from conftest import fd_gradient, fd_hessian


def test_lift_seeds():
    x = ad.lift(np.array([1.0, 2.0]))
    assert x[0].val == 1.0
    assert np.array_equal(x[0].grad, [1.0, 0.0])
    assert np.array_equal(x[1].grad, [0.0, 1.0])
    assert np.all(x[0].hess == 0.0)


def test_product_rule():
    v, g, h = ad.hessian_of(lambda b: b[0] * b[1], [3.0, 4.0])
    assert v == 12.0
    assert np.array_equal(g, [4.0, 3.0])
    assert h[0, 1] == 1.0 and h[1, 0] == 1.0
    assert h[0, 0] == 0.0 and h[1, 1] == 0.0


def test_exp_at_zero():
    v, g, h = ad.hessian_of(lambda b: ad.exp(b[0]), [0.0])
    assert v == 1.0 and g[0] == 1.0 and h[0, 0] == 1.0


def test_log_second_derivative():
    _, _, h = ad.hessian_of(lambda b: ad.log(b[0]), [2.0])
    assert h[0, 0] == pytest.approx(-0.25, abs=1e-14)


def test_sqrt_second_derivative():
    _, _, h = ad.hessian_of(lambda b: ad.sqrt(b[0]), [4.0])
    assert h[0, 0] == pytest.approx(-1.0 / 32.0, abs=1e-14)


def test_quadratic_form_exact():
    a = np.array([[2.0, 1.0], [1.0, 3.0]])

    def f(b):
        return -0.5 * (a[0, 0] * b[0] ** 2 + 2 * a[0, 1] * b[0] * b[1]
                       + a[1, 1] * b[1] ** 2)

    _, g, h = ad.hessian_of(f, [0.3, -0.7])
    assert np.allclose(h, -a, atol=0)


def test_constant_objective():
    v, g, h = ad.hessian_of(lambda b: 5.0, [1.0, 2.0])
    assert v == 5.0
    assert np.all(g == 0.0) and np.all(h == 0.0)


def test_gamma_logpdf_gradient_matches_fd():
    r, s = 45.0, 1.0 / 45.0

    def logpdf(b):
        return (-r * math.log(s) - gammaln(r) + (r - 1.0) * ad.log(b[0])
                - b[0] / s)

    v, g, h = ad.hessian_of(logpdf, [1.0])
    gfd = fd_gradient(lambda x: logpdf([x[0]]), [1.0])
    assert g[0] == pytest.approx(gfd[0], rel=1e-6)


def _random_expression(rng, n_vars):
    """A smooth random composite over the supported elementary ops."""
    coefs = rng.uniform(0.3, 1.7, size=8)
    shift = rng.uniform(1.5, 3.0)

    def f(b):
        t = coefs[0] * b[0]
        for i in range(1, n_vars):
            t = t + coefs[i % 8] * b[i] * b[i - 1]
        u = ad.exp(t * 0.1) + ad.log(shift + b[0] ** 2)
        w = ad.sqrt(shift + b[-1] ** 2) / (1.0 + b[0] ** 2)
        z = ad.sin(coefs[3] * b[0]) * ad.cos(coefs[4] * b[-1])
        return u * w + z - (b[0] - coefs[5]) ** 2 / (2.0 + b[-1] ** 2)
    return f


@pytest.mark.parametrize("trial", range(50))
def test_random_expressions_match_fd(trial):
    rng = np.random.default_rng(1000 + trial)
    n_vars = int(rng.integers(1, 5))
    f = _random_expression(rng, n_vars)
    b = rng.uniform(-1.5, 1.5, size=n_vars)
    v, g, h = ad.hessian_of(f, b)

    def plain(x):
        return ad.value_of(f(list(x)))

    assert v == pytest.approx(plain(b), rel=1e-12)
    gfd = fd_gradient(plain, b, step=1e-5)
    hfd = fd_hessian(plain, b, step=1e-4)
    scale_g = np.maximum(np.abs(gfd), 1.0)
    scale_h = np.maximum(np.abs(hfd), 1.0)
    assert np.all(np.abs(g - gfd) / scale_g < 1e-5)
    assert np.all(np.abs(h - hfd) / scale_h < 1e-5)


def test_packed_hessian_symmetry_is_structural():
    rng = np.random.default_rng(3)
    f = _random_expression(rng, 3)
    res = f(ad.lift(rng.uniform(-1, 1, size=3)))
    h = res.hess_matrix()
    # unpacking the packed triangle gives a bitwise-symmetric matrix
    assert np.array_equal(h, h.T)


@pytest.mark.parametrize("trial", range(10))
def test_nested_dual1_matches_dual2(trial):
    rng = np.random.default_rng(500 + trial)
    f = _random_expression(rng, 2)
    b = rng.uniform(-1.2, 1.2, size=2)
    _, _, h2 = ad.hessian_of(f, b)

    for h_dir in range(2):
        inner = ad.new_level()
        outer = ad.new_level()
        z = list(b)
        z[h_dir] = ad.Dual1(ad.Dual1(b[h_dir], (1.0,), inner), (1.0,), outer)
        r = f(z)
        second = r.grad[0].grad[0]
        assert abs(second - h2[h_dir, h_dir]) < 1e-12 * max(
            1.0, abs(h2[h_dir, h_dir]))


def test_dual1_first_derivatives():
    val, grad = ad.gradient_of(
        lambda y: y[0] * y[1] + ad.exp(y[0]), [0.5, 2.0])
    assert val == pytest.approx(1.0 + math.exp(0.5))
    assert grad[0] == pytest.approx(2.0 + math.exp(0.5))
    assert grad[1] == pytest.approx(0.5)


def test_domain_errors():
    with pytest.raises(DomainError):
        ad.log(-1.0)
    with pytest.raises(DomainError):
        ad.sqrt(0.0)
    with pytest.raises(DomainError):
        ad.hessian_of(lambda b: ad.log(b[0]), [-2.0])
    with pytest.raises(DomainError):
        ad.hessian_of(lambda b: 1.0 / (b[0] - 1.0), [1.0])


def test_array_valued_dual_sum():
    xs = np.array([1.0, 2.0, 3.0])

    def f(b):
        return (b[0] * xs + ad.exp(b[1]) * xs ** 2).sum()

    v, g, h = ad.hessian_of(f, [2.0, 0.5])
    assert v == pytest.approx(2.0 * xs.sum() + math.exp(0.5) * (xs ** 2).sum())
    assert g[0] == pytest.approx(xs.sum())
    assert g[1] == pytest.approx(math.exp(0.5) * (xs ** 2).sum())
    assert h[1, 1] == pytest.approx(math.exp(0.5) * (xs ** 2).sum())
    assert h[0, 0] == 0.0 and h[0, 1] == 0.0
