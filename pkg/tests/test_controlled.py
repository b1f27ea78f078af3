import numpy as np
import pytest

from roughavg import (
    ControlledPath,
    GridError,
    GridPath,
    RoughnessParams,
    SmoothCoefficient,
    compose_smooth,
    identity_controlled,
    lift_piecewise_linear,
    local_error_certificate,
    make_controlled,
    p_var_norm,
    rough_integral,
    sample_fbm,
)


def sin_matrix_coefficient(d):
    """G(x) = diag(sin x) with exact derivative callbacks."""
    eye = np.eye(d)
    return SmoothCoefficient(
        fn=lambda x: np.sin(x)[..., None] * eye,
        d1=lambda x: np.cos(x)[..., None, None]
        * eye[:, :, None]
        * eye[:, None, :],
        bound=1.0,
    )


def smooth_driver_2d(n, dt):
    t = np.arange(n + 1) * dt
    vals = np.column_stack([np.sin(2 * np.pi * t), np.cos(np.pi * t) + 0.3 * t])
    return GridPath(0.0, dt, vals)


def test_identity_controlled_has_zero_remainder(bm_lift_2d):
    y = identity_controlled(bm_lift_2d)
    r = y.remainder
    i = np.arange(0, 200)
    assert np.max(r.norms(i, 200)) == 0.0


def test_shape_validation(bm_path_2d):
    with pytest.raises(GridError):
        make_controlled(
            np.zeros((bm_path_2d.n_steps + 1, 3)),
            np.zeros((bm_path_2d.n_steps + 1, 3, 5)),
            bm_path_2d,
        )
    with pytest.raises(GridError):
        ControlledPath(bm_path_2d, np.zeros((7, 2)), np.zeros((7, 2, 2)))


def test_remainder_pair_identity(bm_path_2d):
    rng = np.random.default_rng(3)
    n1 = bm_path_2d.n_steps + 1
    value = rng.standard_normal((n1, 3))
    deriv = rng.standard_normal((n1, 3, 2))
    y = make_controlled(value, deriv, bm_path_2d)
    i, j = 10, 40
    want = (value[j] - value[i]) - deriv[i] @ (
        bm_path_2d.values[j] - bm_path_2d.values[i]
    )
    assert np.allclose(y.remainder_pair(np.array([i]), j)[0], want)


def test_check_derivatives_catches_wrong_callback():
    good = sin_matrix_coefficient(2)
    lo, hi = np.array([-2.0, -2.0]), np.array([2.0, 2.0])
    assert good.check_derivatives(lo, hi) < 1e-5
    bad = SmoothCoefficient(
        fn=good.fn, d1=lambda x: 2.0 * np.asarray(good.d1(x)), bound=1.0
    )
    with pytest.raises(ValueError):
        bad.check_derivatives(lo, hi)


def test_compose_smooth_remainder_is_second_order():
    path = smooth_driver_2d(400, 1.0 / 400.0)
    lift = lift_piecewise_linear(path)
    y = compose_smooth(sin_matrix_coefficient(2), identity_controlled(lift), lift)
    # remainder of G(x) against any node is O(|increment|^2)
    norms = y.remainder.norms(np.arange(399), 399)
    # all pair remainders against the final node stay bounded by the square
    inc = np.linalg.norm(path.values[399] - path.values[:399], axis=1)
    assert np.all(norms <= 2.0 * inc**2 + 1e-12)


def test_geometric_integral_identity_1d():
    path = sample_fbm(0.45, 1, 0.0, 0.002, 500, seed=5)
    lift = lift_piecewise_linear(path)
    integrand = ControlledPath(
        path, path.values[:, :, None], np.ones((path.n_steps + 1, 1, 1, 1))
    )
    val = rough_integral(integrand, lift)[0]
    exact = 0.5 * (path.values[-1, 0] ** 2 - path.values[0, 0] ** 2)
    assert abs(val - exact) <= 1e-10


def test_integral_matches_refined_riemann_stieltjes():
    n, refine = 200, 100
    dt = 1.0 / n
    coarse = smooth_driver_2d(n, dt)
    fine = smooth_driver_2d(n * refine, dt / refine)
    lift = lift_piecewise_linear(coarse)
    y = compose_smooth(sin_matrix_coefficient(2), identity_controlled(lift), lift)
    got = rough_integral(y, lift)
    mid = 0.5 * (fine.values[1:] + fine.values[:-1])
    want = np.einsum("kw,kw->w", np.sin(mid), fine.increments())
    assert np.max(np.abs(got - want)) <= 1e-4 * max(1.0, np.max(np.abs(want)))


def test_dyadic_refinement_contracts():
    # 1-d closed form: int sin(x) dx = cos(x_0) - cos(x_T) for geometric lifts.
    # Individual paths refine erratically near the noise floor, so aggregate
    # the error over an ensemble (root mean square) before taking ratios.
    strides = (32, 16, 8, 4)
    errs = {s: [] for s in strides}
    for seed in range(20):
        path = sample_fbm(0.45, 1, 0.0, 1.0 / 4096.0, 4096, seed=seed)
        lift = lift_piecewise_linear(path)
        exact = np.cos(path.values[0, 0]) - np.cos(path.values[-1, 0])
        for stride in strides:
            sub = lift.subsample(stride)
            y = compose_smooth(
                sin_matrix_coefficient(1), identity_controlled(sub), sub
            )
            errs[stride].append(abs(float(rough_integral(y, sub)[0]) - exact))
    agg = {s: float(np.sqrt(np.mean(np.square(e)))) for s, e in errs.items()}
    for coarse, fine in zip(strides, strides[1:]):
        assert agg[coarse] / agg[fine] >= 2**0.4


def test_local_error_certificate_reports(bm_lift_2d):
    params = RoughnessParams(p=2.3)
    y = compose_smooth(
        sin_matrix_coefficient(2), identity_controlled(bm_lift_2d), bm_lift_2d
    )
    report = local_error_certificate(y, bm_lift_2d, params)
    assert report.defect >= 0.0
    assert report.bound_term > 0.0
    assert report.ratio == pytest.approx(report.defect / report.bound_term)
    parts = report.csv_row().split(",")
    assert len(parts) == 5


def test_integral_additivity(bm_lift_2d):
    y = compose_smooth(
        sin_matrix_coefficient(2), identity_controlled(bm_lift_2d), bm_lift_2d
    )
    whole = rough_integral(y, bm_lift_2d, 0.0, 2.0)
    split = rough_integral(y, bm_lift_2d, 0.0, 0.7) + rough_integral(
        y, bm_lift_2d, 0.7, 2.0
    )
    assert np.allclose(whole, split, atol=1e-12)
