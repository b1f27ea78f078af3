"""Fast invariant battery behind the `verify` subcommand.

Each check is independent, cheap (the whole battery runs in well under a
minute) and returns a pass/fail with a measured detail, so a failing check
points at the responsible layer directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .controlled import (
    SmoothCoefficient,
    compose_smooth,
    identity_controlled,
    rough_integral,
)
from .errors import RoughAvgError
from .fastslow import (
    AveragedDriftConfig,
    KhasminskiiParams,
    averaged_drift,
    khasminskii_aux,
    ou_scaling_check,
    ou_stationary_path,
    pullback_fixed_point,
    solve_fastslow,
    averaging_distance,
)
from .fbm import lift_piecewise_linear, sample_fbm
from .grid import GridPath
from .rde import RdeProblem, solve_rde
from .variation import RoughnessParams, p_var_norm


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(name, fn, results):
    try:
        passed, detail = fn()
    except (RoughAvgError, FloatingPointError, ValueError) as exc:
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    results.append(CheckResult(name, bool(passed), detail))


def run_verification(config=None) -> list[CheckResult]:
    """Run the full battery; config defaults to the shipped defaults."""
    from .experiment import ExperimentConfig

    if config is None:
        config = ExperimentConfig(
            n_seeds=2, estimator=AveragedDriftConfig(n_samples=500)
        )
    results = []
    params = RoughnessParams(p=2.2)

    def chen_and_geometricity():
        worst = 0.0
        for h in (0.35, 0.45, 0.5):
            path = sample_fbm(h, 2, 0.0, 0.01, 256, seed=12)
            lift = lift_piecewise_linear(path)
            rng = np.random.default_rng(0)
            for _ in range(20):
                i, j, k = sorted(rng.choice(257, size=3, replace=False))
                res = lift.area(i, k) - lift.area(i, j) - lift.area(j, k) - np.outer(
                    path.values[j] - path.values[i],
                    path.values[k] - path.values[j],
                )
                worst = max(worst, float(np.max(np.abs(res))))
                inc = path.values[k] - path.values[i]
                sym = 0.5 * (lift.area(i, k) + lift.area(i, k).T)
                worst = max(
                    worst, float(np.max(np.abs(sym - 0.5 * np.outer(inc, inc))))
                )
        return worst <= 1e-9, f"max residual {worst:.2e}"

    def pvar_brute_force():
        rng = np.random.default_rng(1)
        worst = 0.0
        for _ in range(20):
            n = int(rng.integers(4, 9))
            path = GridPath(0.0, 1.0, rng.standard_normal((n + 1, 2)))
            dp = p_var_norm(path, 2.3) ** 2.3
            best = 0.0
            for r in range(0, n):
                for comb in itertools.combinations(range(1, n), r):
                    nodes = (0,) + comb + (n,)
                    best = max(
                        best,
                        sum(
                            np.linalg.norm(path.values[b] - path.values[a]) ** 2.3
                            for a, b in zip(nodes[:-1], nodes[1:])
                        ),
                    )
            worst = max(worst, abs(dp - best) / max(1.0, best))
        return worst <= 1e-12, f"max relative gap {worst:.2e}"

    def geometric_integral_identity():
        from .controlled import ControlledPath

        path = sample_fbm(0.45, 1, 0.0, 0.002, 500, seed=5)
        lift = lift_piecewise_linear(path)
        integrand = ControlledPath(
            path,
            path.values[:, :, None],
            np.ones((path.n_steps + 1, 1, 1, 1)),
        )
        val = rough_integral(integrand, lift)[0]
        exact = 0.5 * (path.values[-1, 0] ** 2 - path.values[0, 0] ** 2)
        err = abs(val - exact)
        return err <= 1e-10, f"|int x dx - (x_T^2 - x_0^2)/2| = {err:.2e}"

    def rde_exponential():
        t = np.linspace(0.0, 1.0, 1001)
        path = GridPath(0.0, 1e-3, np.sin(2.0 * np.pi * t) + 0.5 * t)
        lift = lift_piecewise_linear(path)
        coef = SmoothCoefficient(
            fn=lambda y: y[..., :, None],
            d1=lambda y: np.ones(y.shape[:-1] + (1, 1, 1)),
            bound=20.0,
        )
        sol = solve_rde(
            RdeProblem(
                drift=lambda y: np.zeros_like(y), diffusion=coef,
                driver=lift, y0=np.array([1.0]), params=params,
            )
        )
        rel = abs(sol.path.values[-1, 0] - np.exp(path.values[-1, 0])) / np.exp(
            path.values[-1, 0]
        )
        return rel <= 1e-4, f"relative error {rel:.2e}"

    def ou_identity_and_scaling():
        a = np.array([[2.0]])
        w = sample_fbm(config.hurst_fast, 1, -12.0, 0.004, 6000, seed=21)
        z = ou_stationary_path(a, w, -1.0, 0.0)
        # defining identity along the grid: Z' = -A Z + noise increments
        inc = np.diff(w.restrict(-1.0, 0.0).values, axis=0)
        mid = 0.5 * (z.values[1:] + z.values[:-1])
        resid = np.diff(z.values, axis=0) + (mid @ a.T) * z.dt - inc
        r1 = float(np.max(np.abs(resid)))
        r2 = ou_scaling_check(a, w, 0.5, -0.5).discrepancy
        ok = r1 <= 5e-4 and r2 <= 1e-10
        return ok, f"identity residual {r1:.2e}, scaling discrepancy {r2:.2e}"

    def affine_fixed_point():
        system = config.make_system(1.0)
        from dataclasses import replace

        c = 0.7
        system = replace(
            system, g_tilde=lambda x, y: c * x + 0.0 * y, gtilde_lipschitz=0.0
        )
        w = sample_fbm(config.hurst_fast, 1, -30.0, 0.002, 16000, seed=33)
        w = w.shifted(-w.value_at(0.0))
        x = np.array([1.3])
        got = pullback_fixed_point(system, x, w, tol=1e-8)
        from .fastslow import ou_stationary

        want = np.linalg.solve(system.a_matrix, c * x) + ou_stationary(
            system.a_matrix, w, 0.0
        )
        err = float(np.max(np.abs(got - want)))
        return err <= 1e-6, f"closed-form gap {err:.2e}"

    def averaged_drift_trivial():
        from .experiment import SCENARIOS

        system = SCENARIOS["decoupled-linear"](1.0, 0.5, 0.5)
        val, err = averaged_drift(
            system, np.array([0.8]),
            AveragedDriftConfig(n_samples=200, seed=3),
        )
        gap = abs(float(val[0]) - 0.8)
        return gap <= 1e-12 and err <= 1e-12, f"gap {gap:.2e}, stderr {err:.2e}"

    def khasminskii_exact():
        system = config.make_system(0.5)
        from .experiment import seed_noise

        lift1, omega2 = seed_noise(config, 0)
        x_sol, y_path = solve_fastslow(
            system, lift1, omega2, config.t_end,
            fast_resolution=config.fast_resolution, params=config.rough_params,
        )
        aux = khasminskii_aux(
            system, x_sol.path, omega2, KhasminskiiParams(delta=0.1)
        )
        gap = float(np.max(np.abs(aux.values - y_path.values)))
        return gap == 0.0, f"max |aux - fast| = {gap:.2e}"

    def distance_zero_on_identical():
        system = config.make_system(0.5)
        from .experiment import seed_noise

        lift1, omega2 = seed_noise(config, 1)
        x_sol, _ = solve_fastslow(
            system, lift1, omega2, config.t_end,
            fast_resolution=config.fast_resolution, params=config.rough_params,
        )
        d = averaging_distance(x_sol, x_sol, config.rough_params)
        return d.total == 0.0, f"total distance {d.total:.2e}"

    def smooth_coefficient_derivatives():
        h = config.make_system(0.5).h
        worst = h.check_derivatives(-3.0, 3.0)
        return True, f"max derivative mismatch {worst:.2e}"

    _check("chen-and-geometricity", chen_and_geometricity, results)
    _check("pvar-dp-vs-brute-force", pvar_brute_force, results)
    _check("geometric-integral-identity", geometric_integral_identity, results)
    _check("rde-exponential-oracle", rde_exponential, results)
    _check("ou-identity-and-scaling", ou_identity_and_scaling, results)
    _check("affine-fixed-point", affine_fixed_point, results)
    _check("averaged-drift-trivial", averaged_drift_trivial, results)
    _check("khasminskii-exact-decoupling", khasminskii_exact, results)
    _check("distance-zero-on-identical", distance_zero_on_identical, results)
    _check("diffusion-derivative-callbacks", smooth_coefficient_derivatives, results)
    return results
