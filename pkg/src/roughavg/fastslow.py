"""Fast-slow system machinery: stationary OU solution, random fixed points,
averaged drift, the coupled solve, the Khasminskii auxiliary process and the
three-part convergence distance.

Conventions used throughout:

* omega2 always denotes the *unrescaled* fast noise path on a window
  [-M, T_max]; the time-rescaled path omega2(. / eps) is derived from it.
* The Wiener shift acts on sampled paths by index shift plus re-basing:
  (theta_t omega2)(s) = omega2(s + t) - omega2(t).
* The scaling identity Z^eps(theta_t omega2) = Z(theta_{t/eps} omega2) lets
  every epsilon-dependent stationary quantity be evaluated on the base path,
  so the pullback iteration and fixed-point paths are integrated in the
  rescaled clock u = t / eps.
* Coefficient callbacks must be numpy-vectorized over leading axes; ensemble
  and probe evaluations rely on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .controlled import ControlledPath, SmoothCoefficient
from .errors import GridError, NumericalError
from .fbm import RoughLift, lift_piecewise_linear, rescale_time, sample_fbm_ensemble
from .grid import GridPath, HurstIndex
from .rde import RdeProblem, RdeSolution, solve_rde
from .variation import RoughnessParams, p_var_norm


def _as_matrix(a) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(a, dtype=float))
    if arr.shape[0] != arr.shape[1]:
        raise ValueError("A must be a square matrix")
    return arr


def spectral_lower_bound(a) -> float:
    """Smallest eigenvalue of the symmetric part of A."""
    arr = _as_matrix(a)
    return float(np.min(np.linalg.eigvalsh(0.5 * (arr + arr.T))))


@dataclass(frozen=True)
class FastSlowSystem:
    """Coefficient bundle of the coupled system.

    Slow: dX = f(X, Y) dt + h(X) domega1; fast: dY = g(X, Y)/eps dt +
    domega2_eps with g(x, y) = -A y + g_tilde(x, y).  Construction enforces
    the spectral-gap condition lambda_A > L_gtilde.
    """

    f: Callable
    h: SmoothCoefficient
    a_matrix: np.ndarray
    g_tilde: Callable
    eps: float
    hurst_slow: HurstIndex
    hurst_fast: HurstIndex
    x0: np.ndarray
    y0: np.ndarray
    dim_slow_driver: int
    f_lipschitz: float = 1.0
    gtilde_lipschitz: float = 0.0

    def __post_init__(self):
        a = _as_matrix(self.a_matrix)
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, float)))
        object.__setattr__(self, "y0", np.atleast_1d(np.asarray(self.y0, float)))
        if not (0.0 < self.eps <= 1.0):
            raise ValueError("eps must lie in (0, 1]")
        if self.y0.shape[0] != a.shape[0]:
            raise ValueError("y0 dimension does not match A")
        lam = spectral_lower_bound(a)
        if not lam > self.gtilde_lipschitz:
            raise ValueError(
                f"spectral gap violated: lambda_A={lam:.4g} must exceed "
                f"L_gtilde={self.gtilde_lipschitz:.4g}"
            )

    @property
    def n_slow(self) -> int:
        return self.x0.shape[0]

    @property
    def m_fast(self) -> int:
        return self.y0.shape[0]

    @property
    def lambda_a(self) -> float:
        return spectral_lower_bound(self.a_matrix)

    @property
    def gap(self) -> float:
        return self.lambda_a - self.gtilde_lipschitz

    def g_full(self, x, y):
        """g(x, y) = -A y + g_tilde(x, y)."""
        return -(y @ self.a_matrix.T) + np.asarray(self.g_tilde(x, y))

    def with_eps(self, eps: float) -> "FastSlowSystem":
        from dataclasses import replace

        return replace(self, eps=eps)

    def sampled_sup_f(self, box: float = 5.0, n_points: int = 500, seed: int = 0):
        """Monte-Carlo sup-norm estimate of the (bounded) slow drift."""
        rng = np.random.default_rng(seed)
        x = rng.uniform(-box, box, size=(n_points, self.n_slow))
        y = rng.uniform(-box, box, size=(n_points, self.m_fast))
        return float(np.max(np.linalg.norm(np.asarray(self.f(x, y)), axis=-1)))


@dataclass(frozen=True)
class KhasminskiiParams:
    """Block length delta for the frozen-slow auxiliary process."""

    delta: float
    gamma: float = 0.4

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class AveragedDriftConfig:
    """Estimator settings for the averaged drift."""

    mode: str = "ensemble"  # or "ergodic"
    n_samples: int = 1000
    horizon: float = 200.0  # ergodic-mode averaging window
    dt: float = 0.02
    seed: int = 0
    z_tol: float = 1e-8
    tol: float = 1e-6

    def __post_init__(self):
        if self.mode not in ("ensemble", "ergodic"):
            raise ValueError(f"unknown estimator mode {self.mode!r}")
        if self.n_samples < 2:
            raise ValueError("need at least 2 samples")


def truncation_horizon(lambda_a: float, z_tol: float = 1e-8) -> float:
    """Window length M with e^{-lambda_A M} <= z_tol, at least 1."""
    return max(1.0, np.log(1.0 / z_tol) / lambda_a)


# --------------------------------------------------------------------------
# Stationary OU solution
# --------------------------------------------------------------------------


def ou_stationary(a, omega2: GridPath, t: float, z_tol: float = 1e-8) -> np.ndarray:
    """Z(theta_t omega2), the stationary OU state at time t.

    Evaluated by trapezoid quadrature of -A int e^{A(r-t)} (omega2(r) -
    omega2(t)) dr over the available window [grid start, t], plus the exact
    boundary term of the integration by parts.  Requires the window to be
    long enough for e^{-lambda_A M} <= z_tol.
    """
    a = _as_matrix(a)
    lam = spectral_lower_bound(a)
    k = omega2.index_of(t)
    horizon = t - omega2.t0
    if np.exp(-lam * horizon) > z_tol:
        raise NumericalError(
            f"truncation horizon {horizon:.3g} too short for z_tol={z_tol:.1e} "
            f"at lambda_A={lam:.3g}"
        )
    dt = omega2.dt
    shifted = omega2.values[: k + 1] - omega2.values[k]  # theta_t omega2 on [t0-t, 0]
    e_step = expm(-a * dt)
    # Horner accumulation of sum_j w_j e^{A (r_j - t)} v_j, trapezoid weights
    w = np.full(k + 1, dt)
    w[0] = w[-1] = 0.5 * dt
    acc = w[0] * shifted[0]
    for j in range(1, k + 1):
        acc = acc @ e_step.T + w[j] * shifted[j]
    boundary = -expm(-a * horizon) @ shifted[0]
    return boundary - a @ acc


def ou_stationary_path(
    a, omega2: GridPath, t_start: float, t_end: float, z_tol: float = 1e-8
) -> GridPath:
    """Z(theta_t omega2) along grid nodes of [t_start, t_end].

    Anchored by direct quadrature at t_start, then propagated by the exact
    one-step OU recursion with a midpoint noise weight; agrees with per-node
    quadrature to the same O(dt^2) tolerance.
    """
    a = _as_matrix(a)
    i = omega2.index_of(t_start)
    j = omega2.index_of(t_end)
    if j < i:
        raise GridError("need t_start <= t_end")
    z0 = ou_stationary(a, omega2, t_start, z_tol=z_tol)
    dt = omega2.dt
    e_step = expm(-a * dt)
    e_half = expm(-a * dt * 0.5)
    out = np.empty((j - i + 1, omega2.dim))
    out[0] = z0
    inc = np.diff(omega2.values[i : j + 1], axis=0)
    for k in range(j - i):
        out[k + 1] = e_step @ out[k] + e_half @ inc[k]
    return GridPath(t_start, dt, out)


@dataclass(frozen=True)
class ScalingCheckReport:
    lhs: np.ndarray
    rhs: np.ndarray
    discrepancy: float


def ou_scaling_check(
    a, omega2: GridPath, eps: float, t: float, z_tol: float = 1e-8
) -> ScalingCheckReport:
    """Check Z^eps(theta_t omega2) = Z(theta_{t/eps} omega2) on one path.

    The left side is the stationary solution of dZ = -(A/eps) Z dt +
    domega2_eps evaluated at time t on the rescaled path.
    """
    a = _as_matrix(a)
    lhs = ou_stationary(a / eps, rescale_time(omega2, eps), t, z_tol=z_tol)
    rhs = ou_stationary(a, omega2, t / eps, z_tol=z_tol)
    return ScalingCheckReport(lhs, rhs, float(np.linalg.norm(lhs - rhs)))


# --------------------------------------------------------------------------
# Random fixed point of the fast equation
# --------------------------------------------------------------------------


def _exp_euler_mats(a: np.ndarray, du: float):
    e_step = expm(-a * du)
    gain = np.linalg.solve(a, np.eye(a.shape[0]) - e_step)
    return e_step, gain


def _integrate_tilde(system: FastSlowSystem, x, y, z_vals, e_step, gain):
    """March dy/du = -A y + g_tilde(x, y + Z(theta_u)) by exponential Euler.

    y: (..., m) state; z_vals: (..., K+1, m) stationary-OU samples along the
    integration window.  Broadcasts over leading axes.
    """
    n_steps = z_vals.shape[-2] - 1
    for k in range(n_steps):
        drive = np.asarray(system.g_tilde(x, y + z_vals[..., k, :]))
        y = y @ e_step.T + drive @ gain.T
    return y


def pullback_fixed_point(
    system: FastSlowSystem,
    x,
    omega2: GridPath,
    tol: float = 1e-6,
    z_tol: float = 1e-8,
    max_doublings: int = 8,
) -> np.ndarray:
    """Random fixed point Y_F(omega2, x) of the fast equation, at time 0.

    Integrates the conjugated dynamics from pullback start times -U_k with
    doubling U_k until two successive evaluations at time 0 agree within tol;
    the spectral gap guarantees contraction at rate e^{-gap * U}.  By the
    scaling identity the result is independent of eps.  x may carry leading
    batch axes.
    """
    a = system.a_matrix
    x = np.asarray(x, dtype=float)
    du = omega2.dt
    zpath_start = omega2.t0 + truncation_horizon(system.lambda_a, z_tol)
    zpath_start = omega2.times[omega2.index_of(omega2.t0) :][
        int(np.ceil((zpath_start - omega2.t0) / du - 1e-9))
    ]
    zpath = ou_stationary_path(a, omega2, zpath_start, 0.0, z_tol=z_tol)
    e_step, gain = _exp_euler_mats(a, du)
    u0 = max(du, np.log(1.0 / tol) / system.gap)
    lead = x.shape[:-1]
    prev = None
    prev_n_back = -1
    for k in range(max_doublings + 1):
        u_k = u0 * 2**k
        n_back = int(np.ceil(u_k / du))
        if n_back > zpath.n_steps:
            n_back = zpath.n_steps
        if n_back == prev_n_back:
            # window exhausted: the next iterate would repeat this one
            # exactly, so equality with prev certifies nothing
            raise NumericalError(
                "pullback iteration ran out of noise window before converging; "
                "increase the omega2 window or loosen tol"
            )
        z_vals = np.broadcast_to(
            zpath.values[zpath.n_steps - n_back :],
            lead + (n_back + 1, system.m_fast),
        )
        y = _integrate_tilde(
            system, x, np.zeros(lead + (system.m_fast,)), z_vals, e_step, gain
        )
        if prev is not None and float(np.max(np.linalg.norm(y - prev, axis=-1))) < tol:
            return y + zpath.values[-1]
        prev = y
        prev_n_back = n_back
    raise NumericalError(
        f"pullback iteration did not converge within {max_doublings} doublings "
        f"(spectral gap {system.gap:.3g} too small for tol={tol:.1e}?)"
    )


def fixed_point_path(
    system: FastSlowSystem,
    x,
    omega2: GridPath,
    u_start: float,
    u_end: float,
    stride: int = 1,
    tol: float = 1e-6,
    z_tol: float = 1e-8,
) -> np.ndarray:
    """Y_F(theta_u omega2, x) along grid nodes u in [u_start, u_end].

    Runs a pullback burn-in before u_start and then marches forward; forward
    attraction makes the burn-in error at most e^{-gap * burn} of the initial
    offset.  Returns shape (..., n_nodes, m).  stride > 1 integrates on every
    stride-th grid node (step stride * dt).
    """
    a = system.a_matrix
    x = np.asarray(x, dtype=float)
    du = omega2.dt * stride
    burn = max(du, 2.0 * np.log(1.0 / tol) / system.gap)
    n_burn = int(np.ceil(burn / du))
    i0 = omega2.index_of(u_start)
    i1 = omega2.index_of(u_end)
    if (i1 - i0) % stride != 0 or i0 - n_burn * stride < 0:
        raise GridError(
            "fixed-point window (with burn-in) not representable on the grid"
        )
    zpath = ou_stationary_path(
        a, omega2, u_start - n_burn * du, u_end, z_tol=z_tol
    )
    z_vals = zpath.values[::stride]
    e_step, gain = _exp_euler_mats(a, du)
    lead = x.shape[:-1]
    y = np.zeros(lead + (system.m_fast,))
    n_nodes = (i1 - i0) // stride + 1
    out = np.empty(lead + (n_nodes, system.m_fast))
    for k in range(n_burn + n_nodes - 1):
        if k >= n_burn:
            out[..., k - n_burn, :] = y + z_vals[k]
        drive = np.asarray(system.g_tilde(x, y + z_vals[k]))
        y = y @ e_step.T + drive @ gain.T
    out[..., n_nodes - 1, :] = y + z_vals[n_burn + n_nodes - 1]
    return out


# --------------------------------------------------------------------------
# Averaged drift
# --------------------------------------------------------------------------


def averaged_drift(
    system: FastSlowSystem, x, cfg: AveragedDriftConfig
) -> tuple[np.ndarray, float]:
    """Estimate fbar(x) = E[f(x, Y_F(omega2, x))] with a standard error.

    Ensemble mode draws i.i.d. fast-noise windows and evaluates the fixed
    point at time 0 for each; ergodic mode time-averages f along the fixed
    point path of one long realization.  The two agree by the ergodic
    theorem, which the test suite cross-checks.
    """
    x = np.asarray(x, dtype=float)
    lam = system.lambda_a
    m = system.m_fast
    horizon_m = truncation_horizon(lam, cfg.z_tol)
    burn = 2.0 * np.log(1.0 / cfg.tol) / system.gap
    if cfg.mode == "ensemble":
        window = horizon_m + 2.0 * burn
        n_steps = int(np.ceil(window / cfg.dt))
        paths = sample_fbm_ensemble(
            system.hurst_fast, m, -n_steps * cfg.dt, cfg.dt, n_steps,
            cfg.seed, cfg.n_samples,
        )
        paths = paths - paths[:, -1:, :]  # re-base: zero at time 0
        fixed = np.empty((cfg.n_samples, m))
        a = system.a_matrix
        e_step, gain = _exp_euler_mats(a, cfg.dt)
        # batched Z paths: anchored quadrature at the left edge, then the
        # one-step recursion, vectorized over the ensemble axis
        t_anchor = -n_steps * cfg.dt + horizon_m
        k_anchor = int(round((t_anchor + n_steps * cfg.dt) / cfg.dt))
        z0 = _batch_ou_anchor(a, paths, k_anchor, cfg.dt)
        n_tail = n_steps - k_anchor
        z_vals = np.empty((cfg.n_samples, n_tail + 1, m))
        z_vals[:, 0] = z0
        e_half = expm(-a * cfg.dt * 0.5)
        inc = np.diff(paths[:, k_anchor:, :], axis=1)
        for k in range(n_tail):
            z_vals[:, k + 1] = z_vals[:, k] @ e_step.T + inc[:, k] @ e_half.T
        # pullback from the full tail window and from half of it; the gap
        # makes both converge, their difference certifies it
        y_full = _integrate_tilde(
            system, x, np.zeros((cfg.n_samples, m)), z_vals, e_step, gain
        )
        half = z_vals[:, n_tail // 2 :, :]
        y_half = _integrate_tilde(
            system, x, np.zeros((cfg.n_samples, m)), half, e_step, gain
        )
        drift_gap = float(np.max(np.linalg.norm(y_full - y_half, axis=-1)))
        if drift_gap > 10.0 * cfg.tol:
            raise NumericalError(
                f"pullback ensemble not converged (gap {drift_gap:.2e}); "
                "spectral gap too small for the configured window"
            )
        fixed = y_full + z_vals[:, -1]
        vals = np.asarray(system.f(x, fixed))
        mean = vals.mean(axis=0)
        stderr = float(
            np.linalg.norm(vals.std(axis=0, ddof=1)) / np.sqrt(cfg.n_samples)
        )
        return mean, stderr
    # ergodic mode: one long window, time-average along the fixed point path
    window_left = horizon_m + burn
    n_left = int(np.ceil(window_left / cfg.dt))
    n_right = int(np.ceil(cfg.horizon / cfg.dt))
    path = sample_fbm_ensemble(
        system.hurst_fast, m, -n_left * cfg.dt, cfg.dt,
        n_left + n_right, cfg.seed, 1,
    )[0]
    gp = GridPath(-n_left * cfg.dt, cfg.dt, path)
    gp = gp.shifted(-gp.value_at(0.0))
    yf = fixed_point_path(
        system, x, gp, 0.0, n_right * cfg.dt, tol=cfg.tol, z_tol=cfg.z_tol
    )
    vals = np.asarray(system.f(x, yf))
    w = np.full(vals.shape[0], 1.0)
    w[0] = w[-1] = 0.5
    mean = (vals * w[:, None]).sum(axis=0) / w.sum()
    n_batches = 16
    batch_means = np.array(
        [b.mean(axis=0) for b in np.array_split(vals, n_batches)]
    )
    stderr = float(
        np.linalg.norm(batch_means.std(axis=0, ddof=1)) / np.sqrt(n_batches)
    )
    return mean, stderr


def _batch_ou_anchor(a: np.ndarray, paths: np.ndarray, k: int, dt: float):
    """Quadrature anchor Z(theta_{t_k} omega2) for a batch of paths."""
    shifted = paths[:, : k + 1, :] - paths[:, k : k + 1, :]
    e_step = expm(-a * dt)
    w = np.full(k + 1, dt)
    w[0] = w[-1] = 0.5 * dt
    acc = w[0] * shifted[:, 0]
    for j in range(1, k + 1):
        acc = acc @ e_step.T + w[j] * shifted[:, j]
    boundary = -shifted[:, 0] @ expm(-a * (k * dt)).T
    return boundary - acc @ a.T


# --------------------------------------------------------------------------
# Coupled solve, auxiliary process, averaged equation, distance
# --------------------------------------------------------------------------


def _joint_coefficients(system: FastSlowSystem):
    n, m = system.n_slow, system.m_fast
    d1 = system.dim_slow_driver
    d2 = m
    eps = system.eps
    h = system.h

    def drift(y):
        x_part, y_part = y[..., :n], y[..., n:]
        fx = np.asarray(system.f(x_part, y_part))
        gy = system.g_full(x_part, y_part) / eps
        return np.concatenate([fx, gy], axis=-1)

    def g_fn(y):
        x_part = y[..., :n]
        hv = np.asarray(h.fn(x_part))
        out = np.zeros(y.shape[:-1] + (n + m, d1 + d2))
        out[..., :n, :d1] = hv
        idx = np.arange(m)
        out[..., n + idx, d1 + idx] = 1.0
        return out

    def g_d1(y):
        x_part = y[..., :n]
        dh = np.asarray(h.d1(x_part))  # (..., n, d1, n)
        out = np.zeros(y.shape[:-1] + (n + m, d1 + d2, n + m))
        out[..., :n, :d1, :n] = dh
        return out

    gcoef = SmoothCoefficient(fn=g_fn, d1=g_d1, bound=max(h.bound, 1.0))
    return drift, gcoef


def _rescaled_fast_noise(
    system: FastSlowSystem, omega2: GridPath, dt: float, t_end: float
) -> GridPath:
    """omega2(. / eps) on the solve grid [0, t_end], re-based at 0."""
    scaled = rescale_time(omega2, system.eps, dt_out=dt)
    seg = scaled.restrict(0.0, t_end)
    return seg.shifted(-seg.value_at(0.0))


def solve_fastslow(
    system: FastSlowSystem,
    omega1_lift: RoughLift,
    omega2: GridPath,
    t_end: float,
    fast_resolution: float = 1.0 / 50.0,
    params: RoughnessParams | None = None,
) -> tuple[RdeSolution, GridPath]:
    """Solve the coupled system on [0, t_end] over the omega1 grid.

    Runs the joint (n+m)-dimensional RDE with drift (f, g/eps) and the
    block-diagonal diffusion diag(h(X), Id).  Only omega1's Levy area enters
    (the fast diffusion is additive, so its Gubinelli derivative vanishes).
    Returns the slow component as a solution controlled by omega1 and the
    fast component as a plain path.
    """
    base1 = omega1_lift.base
    dt = base1.dt
    if dt > fast_resolution * system.eps * (1.0 + 1e-9):
        raise GridError(
            f"grid dt={dt:.3g} does not resolve the fast scale: need "
            f"dt <= {fast_resolution:.3g} * eps = {fast_resolution * system.eps:.3g}"
        )
    n, m = system.n_slow, system.m_fast
    d1 = system.dim_slow_driver
    if base1.dim != d1:
        raise GridError("omega1 dimension does not match the system")
    lo, hi = base1.index_of(0.0), base1.index_of(t_end)
    seg1 = omega1_lift.restrict(0.0, t_end)
    noise2 = _rescaled_fast_noise(system, omega2, dt, t_end)
    if not noise2.same_grid(seg1.base):
        raise GridError("rescaled fast noise does not align with the slow grid")
    joint_vals = np.concatenate([seg1.base.values, noise2.values], axis=1)
    joint_path = GridPath(0.0, dt, joint_vals)
    joint_lift = lift_piecewise_linear(joint_path)
    area = joint_lift.step_area.copy()
    area[:, :d1, :d1] = seg1.step_area  # omega1's own (exact per-step) areas
    joint_lift = RoughLift(joint_path, area)
    drift, gcoef = _joint_coefficients(system)
    if params is None:
        params = RoughnessParams(p=1.0 / min(0.5, float(system.hurst_slow)) + 0.1)
    problem = RdeProblem(
        drift=drift,
        diffusion=gcoef,
        driver=joint_lift,
        y0=np.concatenate([system.x0, system.y0]),
        params=params,
        drift_lipschitz=max(system.f_lipschitz, 1.0),
    )
    sol = solve_rde(problem)
    x_path = GridPath(0.0, dt, sol.path.values[:, :n])
    y_path = GridPath(0.0, dt, sol.path.values[:, n:])
    x_deriv = np.asarray(system.h.fn(x_path.values))
    x_sol = RdeSolution(x_path, x_deriv, seg1)
    return x_sol, y_path


def khasminskii_aux(
    system: FastSlowSystem,
    x_path: GridPath,
    omega2: GridPath,
    params: KhasminskiiParams,
) -> GridPath:
    """Auxiliary fast process with the slow argument frozen per delta-block.

    Uses the same explicit step as the coupled solver, so with g_tilde
    independent of x (or zero) the recursion reproduces Y exactly.
    """
    dt = x_path.dt
    ratio = params.delta / dt
    block = int(round(ratio))
    if block < 1 or abs(ratio - block) > 1e-9 * max(1.0, ratio):
        raise GridError(f"delta={params.delta} is not a multiple of dt={dt}")
    t_end = x_path.t_end
    noise2 = _rescaled_fast_noise(system, omega2, dt, t_end)
    inc2 = noise2.increments()
    n_steps = x_path.n_steps
    out = np.empty((n_steps + 1, system.m_fast))
    y = system.y0.copy()
    out[0] = y
    eps = system.eps
    for j in range(n_steps):
        frozen = x_path.values[(j // block) * block]
        gy = system.g_full(frozen, y) / eps
        y = y + gy * dt + inc2[j]
        out[j + 1] = y
    return GridPath(0.0, dt, out)


def fixed_point_block_path(
    system: FastSlowSystem,
    x_path: GridPath,
    omega2: GridPath,
    params: KhasminskiiParams,
    tol: float = 1e-6,
    z_tol: float = 1e-8,
) -> GridPath:
    """Y^eps_F(theta_r omega2, X_{k delta}) along the slow grid.

    Uses the scaling identity: the fixed point at slow time r is the eps=1
    fixed point at base time r / eps, so each block is a forward march on the
    base grid with the block's frozen slow value.
    """
    dt = x_path.dt
    block = int(round(params.delta / dt))
    eps = system.eps
    stride_ratio = dt / eps / omega2.dt
    stride = int(round(stride_ratio))
    if stride < 1 or abs(stride_ratio - stride) > 1e-9 * max(1.0, stride_ratio):
        raise GridError("slow grid does not map onto the base fast grid")
    n_steps = x_path.n_steps
    out = np.empty((n_steps + 1, system.m_fast))
    for k in range(0, n_steps, block):
        j_hi = min(k + block, n_steps)
        frozen = x_path.values[k]
        u_lo = (x_path.t0 + k * dt) / eps
        u_hi = (x_path.t0 + j_hi * dt) / eps
        seg = fixed_point_path(
            system, frozen, omega2, u_lo, u_hi,
            stride=stride, tol=tol, z_tol=z_tol,
        )
        out[k : j_hi + 1] = seg
    return GridPath(x_path.t0, dt, out)


def solve_averaged(
    system: FastSlowSystem,
    fbar: Callable,
    omega1_lift: RoughLift,
    t_end: float,
    params: RoughnessParams | None = None,
) -> RdeSolution:
    """Solve the averaged slow equation dXbar = fbar(Xbar)dt + h(Xbar)domega1
    on the same omega1 realization (the convergence statement is path-wise).
    """
    if params is None:
        params = RoughnessParams(p=1.0 / min(0.5, float(system.hurst_slow)) + 0.1)
    seg1 = omega1_lift.restrict(0.0, t_end)
    problem = RdeProblem(
        drift=lambda x: np.asarray(fbar(x)),
        diffusion=system.h,
        driver=seg1,
        y0=system.x0,
        params=params,
        drift_lipschitz=max(system.f_lipschitz, 1.0),
    )
    return solve_rde(problem)


@dataclass(frozen=True)
class AveragingDistance:
    """Three-part distance between a two-scale and an averaged solution."""

    sup: float
    pvar: float
    rem_qvar: float

    @property
    def total(self) -> float:
        return self.sup + self.pvar + self.rem_qvar


def averaging_distance(
    x_eps: RdeSolution, x_bar: RdeSolution, params: RoughnessParams
) -> AveragingDistance:
    """sup, p-var and remainder q-var distances between the slow solution and
    the averaged solution on the shared omega1 grid."""
    pe, pb = x_eps.path, x_bar.path
    if not pe.same_grid(pb):
        raise GridError("solutions live on different grids")
    if not x_eps.driver.base.same_grid(x_bar.driver.base):
        raise GridError("solutions are controlled by different drivers")
    diff_vals = pe.values - pb.values
    sup = float(np.max(np.linalg.norm(diff_vals, axis=1)))
    diff_path = GridPath(pe.t0, pe.dt, diff_vals)
    pvar = p_var_norm(diff_path, params.p)
    diff_ctrl = ControlledPath(
        x_eps.driver.base, diff_vals, x_eps.gubinelli_deriv - x_bar.gubinelli_deriv
    )
    rem = p_var_norm(diff_ctrl.remainder, params.q)
    return AveragingDistance(sup, float(pvar), float(rem))
