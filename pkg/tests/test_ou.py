import numpy as np
import pytest

from roughavg import (
    GridPath,
    NumericalError,
    ou_scaling_check,
    ou_stationary,
    ou_stationary_path,
    sample_fbm,
    sample_fbm_ensemble,
    truncation_horizon,
)
from roughavg.fastslow import _batch_ou_anchor


def bm_window(lam=1.0, dt=0.02, seed=0, n_paths=1, t_right=0.0, z_tol=1e-8):
    """Brownian windows [-M, t_right] long enough for the given z_tol."""
    horizon = truncation_horizon(lam, z_tol)
    n_left = int(np.ceil(horizon / dt)) + 1
    n_right = int(round(t_right / dt))
    return sample_fbm_ensemble(
        0.5, 1, -n_left * dt, dt, n_left + n_right, seed=seed, n_paths=n_paths
    ), -n_left * dt


def test_truncation_horizon():
    assert truncation_horizon(1.0, 1e-8) == pytest.approx(np.log(1e8))
    assert truncation_horizon(100.0, 1e-8) == 1.0  # floored at 1


def test_zero_noise_gives_zero_state():
    omega2 = GridPath(-20.0, 0.01, np.zeros(2001))
    z = ou_stationary(np.array([[1.0]]), omega2, 0.0)
    assert np.allclose(z, 0.0)


def test_stationary_variance_matches_closed_form():
    lam, dt, n_paths = 1.0, 0.02, 5000
    a = np.array([[lam]])
    paths, t0 = bm_window(lam, dt, seed=21, n_paths=n_paths)
    k = paths.shape[1] - 1
    z = _batch_ou_anchor(a, paths, k, dt)[:, 0]
    sq = z**2
    want = 1.0 / (2.0 * lam)
    stderr = sq.std(ddof=1) / np.sqrt(n_paths)
    assert abs(sq.mean() - want) <= 3.0 * stderr


def test_batch_anchor_matches_scalar_quadrature():
    paths, t0 = bm_window(seed=3, n_paths=3)
    a = np.array([[1.0]])
    k = paths.shape[1] - 1
    batch = _batch_ou_anchor(a, paths, k, 0.02)
    for b in range(3):
        gp = GridPath(t0, 0.02, paths[b])
        assert np.allclose(batch[b], ou_stationary(a, gp, 0.0), atol=1e-12)


def test_path_recursion_agrees_with_quadrature():
    paths, t0 = bm_window(seed=7, t_right=2.0)
    gp = GridPath(t0, 0.02, paths[0])
    a = np.array([[1.0]])
    zp = ou_stationary_path(a, gp, 0.0, 2.0)
    assert zp.n_steps == 100
    direct = ou_stationary(a, gp, 2.0)
    assert np.linalg.norm(zp.values[-1] - direct) <= 1e-4


def test_path_solves_the_equation():
    # midpoint residual of dZ = -A Z dt + domega2 is O(dt^2) per step
    paths, t0 = bm_window(seed=9, t_right=1.0, dt=0.01)
    gp = GridPath(t0, 0.01, paths[0])
    a = np.array([[2.0]])
    zp = ou_stationary_path(a, gp, 0.0, 1.0)
    dz = np.diff(zp.values, axis=0)
    mid = 0.5 * (zp.values[1:] + zp.values[:-1])
    dom = gp.values[gp.index_of(0.0) + 1 :] - gp.values[gp.index_of(0.0) : -1]
    resid = dz + (mid @ a.T) * 0.01 - dom
    assert np.max(np.abs(resid)) <= 1e-4


def test_scaling_identity_exact():
    lam = 1.0
    for h, seed in ((0.5, 1), (0.45, 2)):
        path = sample_fbm(h, 1, -40.0, 0.02, 2100, seed=seed)
        for eps in (1.0, 0.5, 0.1):
            rep = ou_scaling_check(np.array([[lam]]), path, eps, eps * 1.0)
            assert rep.discrepancy <= 1e-12


def test_horizon_too_short_raises():
    omega2 = GridPath(-1.0, 0.01, np.zeros(101))
    with pytest.raises(NumericalError, match="horizon"):
        ou_stationary(np.array([[0.5]]), omega2, 0.0)
