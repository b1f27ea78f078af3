import numpy as np
import pytest

from roughavg import (
    FastSlowSystem,
    GridPath,
    HurstIndex,
    NumericalError,
    SmoothCoefficient,
    fixed_point_path,
    ou_stationary,
    ou_stationary_path,
    pullback_fixed_point,
    sample_fbm,
)
from roughavg.fastslow import _exp_euler_mats, _integrate_tilde


def zero_diffusion(n, d):
    return SmoothCoefficient(
        fn=lambda x: np.zeros(x.shape[:-1] + (n, d)),
        d1=lambda x: np.zeros(x.shape[:-1] + (n, d, n)),
        bound=1.0,
    )


def make_system(g_tilde, lip, a=2.0, eps=1.0):
    return FastSlowSystem(
        f=lambda x, y: np.zeros_like(x),
        h=zero_diffusion(1, 1),
        a_matrix=np.array([[a]]),
        g_tilde=g_tilde,
        eps=eps,
        hurst_slow=HurstIndex(0.5),
        hurst_fast=HurstIndex(0.5),
        x0=np.array([0.0]),
        y0=np.array([0.0]),
        dim_slow_driver=1,
        gtilde_lipschitz=lip,
    )


def noise_window(seed=0, dt=0.002, t_left=-60.0, t_right=0.0):
    n = int(round((t_right - t_left) / dt))
    return sample_fbm(0.5, 1, t_left, dt, n, seed=seed)


def test_trivial_gtilde_reduces_to_ou():
    system = make_system(lambda x, y: np.zeros_like(y), 0.0)
    omega2 = noise_window(seed=1)
    y = pullback_fixed_point(system, np.array([0.7]), omega2)
    z = ou_stationary(system.a_matrix, omega2, 0.0)
    assert np.linalg.norm(y - z) <= 1e-6


def test_affine_gtilde_closed_form():
    # g_tilde(x, y) = c x, constant in y: the fixed point is A^-1 c x + Z
    c = 0.8
    system = make_system(lambda x, y: c * x + 0.0 * y, 0.0)
    omega2 = noise_window(seed=2)
    x = np.array([1.3])
    y = pullback_fixed_point(system, x, omega2)
    want = c * x / 2.0 + ou_stationary(system.a_matrix, omega2, 0.0)
    assert np.linalg.norm(y - want) <= 1e-6


def test_uniqueness_across_starts():
    # contraction: the integrated value at 0 forgets the start exponentially
    system = make_system(lambda x, y: 0.5 * np.sin(y), 0.5)
    omega2 = noise_window(seed=3)
    zp = ou_stationary_path(system.a_matrix, omega2, -20.0, 0.0)
    e_step, gain = _exp_euler_mats(system.a_matrix, omega2.dt)
    rng = np.random.default_rng(0)
    x = rng.uniform(-2.0, 2.0, size=(100, 1))
    y_a = rng.uniform(-5.0, 5.0, size=(100, 1))
    y_b = rng.uniform(-5.0, 5.0, size=(100, 1))
    z_vals = np.broadcast_to(zp.values, (100,) + zp.values.shape)
    out_a = _integrate_tilde(system, x, y_a, z_vals, e_step, gain)
    out_b = _integrate_tilde(system, x, y_b, z_vals, e_step, gain)
    assert np.max(np.linalg.norm(out_a - out_b, axis=-1)) <= 1e-6


def test_forward_attraction_envelope():
    # a perturbed trajectory approaches the fixed point path inside
    # twice the e^{-gap t} envelope of its initial offset
    system = make_system(lambda x, y: 0.3 * np.sin(y), 0.3)
    omega2 = noise_window(seed=4, t_right=6.0)
    x = np.array([0.5])
    yf = fixed_point_path(system, x, omega2, 0.0, 6.0)
    zp = ou_stationary_path(system.a_matrix, omega2, 0.0, 6.0)
    e_step, gain = _exp_euler_mats(system.a_matrix, omega2.dt)
    y = (yf[0] + np.array([2.0])) - zp.values[0]  # offset start, tilde coords
    offsets = [2.0]
    for k in range(zp.n_steps):
        drive = np.asarray(system.g_tilde(x, y + zp.values[k]))
        y = y @ e_step.T + drive @ gain.T
        offsets.append(float(np.linalg.norm(y + zp.values[k + 1] - yf[k + 1])))
    t = omega2.dt * np.arange(len(offsets))
    envelope = 2.0 * offsets[0] * np.exp(-system.gap * t)
    assert np.all(np.asarray(offsets) <= envelope + 1e-9)
    assert offsets[-1] <= 1e-3


def test_pullback_batched_x():
    system = make_system(lambda x, y: 0.4 * np.tanh(x) + 0.0 * y, 0.0)
    omega2 = noise_window(seed=5)
    xs = np.array([[0.0], [1.0], [-2.0]])
    batch = pullback_fixed_point(system, xs, omega2)
    for k in range(3):
        single = pullback_fixed_point(system, xs[k], omega2)
        assert np.allclose(batch[k], single)


def test_pullback_window_too_short():
    system = make_system(lambda x, y: 0.5 * np.sin(y), 0.5, a=0.6)
    omega2 = noise_window(seed=6, t_left=-35.0, dt=0.01)
    with pytest.raises(NumericalError):
        pullback_fixed_point(system, np.array([0.0]), omega2, tol=1e-13)


def test_fixed_point_path_stride():
    system = make_system(lambda x, y: 0.2 * np.cos(y), 0.2)
    omega2 = noise_window(seed=7, t_right=2.0)
    full = fixed_point_path(system, np.array([0.3]), omega2, 0.0, 2.0)
    strided = fixed_point_path(
        system, np.array([0.3]), omega2, 0.0, 2.0, stride=4
    )
    assert strided.shape[0] * 4 - 4 == full.shape[0] - 1
    # coarse integration tracks the fine one
    assert np.max(np.abs(strided - full[::4])) <= 1e-2
