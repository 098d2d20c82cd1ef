import dataclasses

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from sdmem.density import lyapunov_2x2, ou_transition_moments
from sdmem.errors import ConfigError, ConstraintError
from sdmem.harness import ORANGE_GRID, paper_config, paper_truth
from sdmem.models import get_model
from sdmem.simulate import SimPlan, make_dataset, sample_at, simulate_path

GROWTH = get_model("growth")
OU = get_model("ou2d")
CIR = get_model("cir")


def test_zero_noise_growth_matches_ode():
    theta = np.array([195.0, 350.0, 1e-300])
    times, values = simulate_path(GROWTH, theta, [0.0, 0.0], [30.0],
                                  118.0, 1582.0, 1.0, "euler",
                                  np.random.default_rng(0))
    sol = solve_ivp(lambda t, x: x * (195.0 - x) / (195.0 * 350.0),
                    (118.0, 1582.0), [30.0], rtol=1e-10, atol=1e-12,
                    dense_output=True)
    ref = sol.sol(times)[0]
    assert np.all(np.diff(values[:, 0]) > 0)          # monotone growth
    assert abs(values[-1, 0] - ref[-1]) / ref[-1] < 1e-3
    assert values[-1, 0] < 195.0


def test_ou_terminal_moments_match_exact_transition(rng):
    theta, _ = paper_truth("ou2d")
    b = [1.0, 1.0, 1.0, 1.0]
    n_paths = 2000
    finals = np.empty((n_paths, 2))
    for s in range(n_paths):
        _, vals = simulate_path(OU, theta, b, [3.0, 3.0], 0.0, 1.0, 2e-3,
                                "euler", rng)
        finals[s] = vals[-1]
    (m1, m2), om = ou_transition_moments([3.0, 3.0], 1.0, theta, b)
    se = np.sqrt(np.diag(np.array([[om[0], om[1]], [om[2], om[3]]]))
                 / n_paths)
    assert abs(finals[:, 0].mean() - m1) < 3 * se[0] + 2e-3
    assert abs(finals[:, 1].mean() - m2) < 3 * se[1] + 2e-3
    cov = np.cov(finals.T)
    # covariance entries within ~3 standard errors (normal approximation)
    for (i, j, want) in [(0, 0, om[0]), (0, 1, om[1]), (1, 1, om[3])]:
        se_cov = np.sqrt((om[0] if i == 0 else om[3])
                         * (om[0] if j == 0 else om[3])
                         + (om[1] if i != j else 0.0) ** 2) / np.sqrt(n_paths)
        assert abs(cov[i, j] - want) < 3 * se_cov + 2e-3


def test_ou_lagged_autocovariance(rng):
    """Cross-covariance of (X_0, X_dt) at stationarity is
    expm(-A dt) lam."""
    theta, _ = paper_truth("ou2d")
    b = [1.0, 1.0, 1.0, 1.0]
    a = (theta[2], theta[3], theta[4], theta[5])
    lam = lyapunov_2x2(a, (theta[6] ** 2, 0.0, 0.0, theta[7] ** 2))
    lam_m = np.array([[lam[0], lam[1]], [lam[2], lam[3]]])
    chol = np.linalg.cholesky(lam_m)
    dt = 0.05
    n_paths = 2000
    x0s = np.empty((n_paths, 2))
    xts = np.empty((n_paths, 2))
    for s in range(n_paths):
        x0 = theta[:2] + chol @ rng.normal(size=2)
        _, vals = simulate_path(OU, theta, b, x0, 0.0, dt, 1e-3, "euler", rng)
        x0s[s] = x0
        xts[s] = vals[-1]
    from sdmem.density import expm_2x2
    e = expm_2x2(a, dt)
    want = np.array([[e[0], e[1]], [e[2], e[3]]]) @ lam_m
    got = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            got[i, j] = np.mean((xts[:, i] - xts[:, i].mean())
                                * (x0s[:, j] - x0s[:, j].mean()))
    assert np.abs(got - want).max() < 4.0 * lam_m.max() / np.sqrt(n_paths) + 2e-3


def test_milstein_zero_drift_sqrt_diffusion_stays_positive(rng):
    pure_noise = dataclasses.replace(GROWTH, drift=lambda x, theta, b: [0.0 * x[0]])
    theta = np.array([195.0, 350.0, 0.08])
    for _ in range(1000):
        _, vals = simulate_path(pure_noise, theta, [0.0, 0.0], [1.0],
                                118.0, 1582.0, 1.0, "milstein", rng)
        assert np.all(vals > 0.0)


def test_sample_at_grid_nodes_bitwise(rng):
    times = 118.0 + np.arange(11) * 1.0
    values = rng.uniform(1.0, 5.0, size=(11, 1))
    out = sample_at(times, values, times[[0, 3, 10]])
    assert np.array_equal(out[:, 0], values[[0, 3, 10], 0])


def test_sample_at_midpoint_average():
    times = np.array([0.0, 1.0])
    values = np.array([[2.0], [4.0]])
    out = sample_at(times, values, np.array([0.5]))
    assert out[0, 0] == pytest.approx(3.0)


def test_sample_at_rejects_extrapolation():
    times = np.array([0.0, 1.0])
    values = np.zeros((2, 1))
    with pytest.raises(ConfigError):
        sample_at(times, values, np.array([1.5]))


def test_orange_grid_sampling(rng):
    theta, psi = paper_truth("growth")
    _, vals = simulate_path(GROWTH, theta, [0.0, 0.0], [30.0], 118.0, 1582.0,
                            1.0, "milstein", rng)
    times = 118.0 + np.arange(vals.shape[0]) * 1.0
    obs = sample_at(times, vals, np.array(ORANGE_GRID))
    assert obs.shape == (7, 1)


def test_constraint_violation_rejected():
    theta, _ = paper_truth("growth")
    with pytest.raises(ConstraintError):
        simulate_path(GROWTH, theta, [-400.0, 0.0], [30.0], 118.0, 200.0,
                      1.0, "euler", np.random.default_rng(0))


def test_dataset_reproducibility():
    config = paper_config("growth", 5, 7, data_seed=123)
    ds1, eff1 = make_dataset(config.plan())
    ds2, eff2 = make_dataset(config.plan())
    assert np.array_equal(eff1, eff2)
    for u1, u2 in zip(ds1.units, ds2.units):
        assert np.array_equal(u1.obs, u2.obs)
        assert np.array_equal(u1.times, u2.times)


def test_growth_design_shapes():
    config = paper_config("growth", 5, 7, data_seed=1)
    ds, effects = make_dataset(config.plan())
    assert ds.n_units == 5
    assert ds.n_rows == 35
    assert effects.shape == (5, 2)
    assert np.array_equal(ds.units[0].times, np.array(ORANGE_GRID))


def test_ou_design_shapes():
    config = paper_config("ou2d", 7, 20, data_seed=1)
    ds, effects = make_dataset(config.plan())
    assert ds.n_units == 7
    assert all(u.obs.shape == (20, 2) for u in ds.units)
    assert ds.n_rows * 2 == 7 * 40          # 2(n+1) = 40 values per unit
    assert effects.shape == (7, 4)


def test_cir_design_shapes():
    config = paper_config("cir", 10, 20, data_seed=1)
    ds, effects = make_dataset(config.plan())
    assert ds.n_units == 10
    assert all(np.all(u.obs > 0.0) for u in ds.units)
    assert effects.shape == (10, 3)
    # drawn effects satisfy the positivity constraint
    model = config.model()
    for b in effects:
        assert model.constraint_check(config.theta, list(b))


def test_redraw_cap_configuration_error():
    # a psi under which the positivity constraint has negligible mass
    config = paper_config("cir", 2, 7, data_seed=5)
    bad = dataclasses.replace(config,
                              psi=np.array([5.0, -14.0, 0.1, 5.0, 0.1]))
    with pytest.raises(ConfigError, match="constraint"):
        make_dataset(bad.plan())


def test_plan_validation():
    config = paper_config("growth", 2, 7)
    with pytest.raises(ConfigError):
        SimPlan(model=GROWTH, theta=config.theta, psi=config.psi,
                x0=np.array([30.0]), t0=118.0, t_end=1582.0,
                internal_step=500.0, scheme="milstein",
                sample_times=config.sample_times, n_units=2, rng_seed=0)
    with pytest.raises(ConfigError):
        SimPlan(model=GROWTH, theta=config.theta, psi=config.psi,
                x0=np.array([30.0]), t0=118.0, t_end=1582.0,
                internal_step=1.0, scheme="rk4",
                sample_times=config.sample_times, n_units=2, rng_seed=0)


def test_per_unit_x0():
    config = paper_config("growth", 3, 7, data_seed=9)
    x0s = np.array([[20.0], [30.0], [40.0]])
    plan = dataclasses.replace(config, x0=x0s).plan()
    ds, _ = make_dataset(plan)
    for unit, x0 in zip(ds.units, x0s):
        assert unit.obs[0, 0] == x0[0]
