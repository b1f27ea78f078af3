import numpy as np
import pytest

from roughavg import (
    AveragedDriftConfig,
    FastSlowSystem,
    GridError,
    GridPath,
    KhasminskiiParams,
    RdeSolution,
    RoughnessParams,
    SCENARIOS,
    averaged_drift,
    khasminskii_aux,
    lift_piecewise_linear,
    sample_fbm,
    solve_averaged,
    solve_fastslow,
    averaging_distance,
)
from roughavg.experiment import ExperimentConfig, seed_noise

PARAMS = RoughnessParams(p=2.4)


def small_config(**kw):
    defaults = dict(
        scenario="sin-coupled",
        t_end=0.4,
        eps_ladder=(0.5, 0.1),
        delta_ladder=(0.2, 0.1),
        n_seeds=1,
        estimator=AveragedDriftConfig(n_samples=200),
        fast_resolution=1.0 / 25.0,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


def test_system_validation():
    base = SCENARIOS["sin-coupled"](0.5, 0.5, 0.5)
    assert base.n_slow == 1 and base.m_fast == 1
    assert base.lambda_a == pytest.approx(2.0)
    assert base.gap == pytest.approx(2.0)
    with pytest.raises(ValueError, match="spectral gap"):
        FastSlowSystem(
            f=base.f, h=base.h, a_matrix=np.array([[0.3]]),
            g_tilde=base.g_tilde, eps=0.5,
            hurst_slow=base.hurst_slow, hurst_fast=base.hurst_fast,
            x0=base.x0, y0=base.y0, dim_slow_driver=1,
            gtilde_lipschitz=0.5,
        )
    with pytest.raises(ValueError, match="eps"):
        base.with_eps(1.5)


def test_under_resolved_grid_rejected():
    config = small_config()
    lift1, omega2 = seed_noise(config, 0)
    system = config.make_system(0.1)
    with pytest.raises(GridError, match="resolve"):
        solve_fastslow(system, lift1, omega2, 0.4, fast_resolution=1.0 / 200.0)


def test_decoupled_slow_is_constant():
    # h = 0, f = 0: the slow component must not move at all
    config = small_config(scenario="decoupled-linear")
    lift1, omega2 = seed_noise(config, 0)
    system = config.make_system(0.5)
    system = FastSlowSystem(
        f=lambda x, y: np.zeros(np.broadcast_shapes(x.shape, y.shape)),
        h=system.h, a_matrix=system.a_matrix, g_tilde=system.g_tilde,
        eps=0.5, hurst_slow=system.hurst_slow, hurst_fast=system.hurst_fast,
        x0=system.x0, y0=system.y0, dim_slow_driver=1,
    )
    x_sol, y_path = solve_fastslow(
        system, lift1, omega2, 0.4, fast_resolution=1.0 / 25.0, params=PARAMS
    )
    assert np.max(np.abs(x_sol.path.values - 1.0)) <= 1e-12
    assert y_path.n_steps == x_sol.path.n_steps
    assert np.std(y_path.values) > 0.0


def test_khasminskii_exact_when_decoupled():
    # g_tilde independent of x: freezing the slow argument changes nothing
    config = small_config()
    lift1, omega2 = seed_noise(config, 0)
    system = config.make_system(0.1)
    _, y_path = solve_fastslow(
        system, lift1, omega2, 0.4, fast_resolution=1.0 / 25.0, params=PARAMS
    )
    x_sol, _ = solve_fastslow(
        system, lift1, omega2, 0.4, fast_resolution=1.0 / 25.0, params=PARAMS
    )
    aux = khasminskii_aux(
        system, x_sol.path, omega2, KhasminskiiParams(delta=0.1)
    )
    assert float(np.max(np.abs(aux.values - y_path.values))) == 0.0


def test_khasminskii_misaligned_delta():
    config = small_config()
    lift1, omega2 = seed_noise(config, 0)
    system = config.make_system(0.1)
    x_sol, _ = solve_fastslow(
        system, lift1, omega2, 0.4, fast_resolution=1.0 / 25.0, params=PARAMS
    )
    with pytest.raises(GridError, match="delta"):
        khasminskii_aux(system, x_sol.path, omega2, KhasminskiiParams(delta=0.007))


def test_distance_zero_and_shifted_constant():
    driver = sample_fbm(0.5, 1, 0.0, 0.01, 100, seed=1)
    lift = lift_piecewise_linear(driver)
    vals = np.cumsum(np.ones((101, 1)) * 0.01, axis=0)
    deriv = np.ones((101, 1, 1))
    a = RdeSolution(GridPath(0.0, 0.01, vals), deriv, lift)
    same = averaging_distance(a, a, PARAMS)
    assert same.sup == 0.0 and same.pvar == 0.0 and same.rem_qvar == 0.0
    assert same.total == 0.0
    # constant offset with equal derivatives: only the sup part sees it
    b = RdeSolution(GridPath(0.0, 0.01, vals + 0.3), deriv, lift)
    shifted = averaging_distance(a, b, PARAMS)
    assert shifted.sup == pytest.approx(0.3)
    assert shifted.pvar <= 1e-14 and shifted.rem_qvar <= 1e-14
    other = RdeSolution(GridPath(0.0, 0.02, vals), deriv, lift)
    with pytest.raises(GridError):
        averaging_distance(a, other, PARAMS)


def test_averaged_solve_matches_direct_rde():
    config = small_config()
    lift1, _ = seed_noise(config, 0)
    system = config.make_system(0.5)
    sol = solve_averaged(
        system, lambda x: -0.5 * x, lift1, 0.4, params=PARAMS
    )
    assert sol.path.n_steps == lift1.base.index_of(0.4)
    assert np.allclose(
        sol.gubinelli_deriv[:, :, 0], system.h.fn(sol.path.values)[:, :, 0]
    )


def test_ensemble_and_ergodic_estimators_agree():
    system = SCENARIOS["sin-coupled"](1.0, 0.5, 0.5)
    x = np.array([0.8])
    ens, ens_err = averaged_drift(
        system, x, AveragedDriftConfig(mode="ensemble", n_samples=3000, seed=5)
    )
    erg, erg_err = averaged_drift(
        system, x, AveragedDriftConfig(mode="ergodic", horizon=400.0, seed=6)
    )
    # sin-coupled: fbar(x) = sin(x) + E sin(Z), Z centred with var 1/(2*2)
    want = np.sin(0.8) + 0.0
    combined = np.sqrt(ens_err**2 + erg_err**2)
    assert abs(ens[0] - erg[0]) <= 3.0 * combined + 1e-3
    assert abs(ens[0] - want) <= 4.0 * ens_err + 5e-3


def test_quadratic_probe_matches_ou_variance():
    # f = |y|^2 probes the stationary variance m / (2 lambda) directly
    system = SCENARIOS["quadratic-probe"](1.0, 0.5, 0.5)
    val, err = averaged_drift(
        system, np.array([0.0]),
        AveragedDriftConfig(mode="ensemble", n_samples=4000, seed=9),
    )
    assert abs(val[0] - 1.0 / 4.0) <= 3.5 * err
