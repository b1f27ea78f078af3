"""Explicit solver for rough differential equations dy = F(y)dt + G(y)dx.

The one-step map is the Davie-type second-order Taylor step: Euler in the
drift, driver increment times G, plus the Milstein correction DG(y)G(y)
contracted against the per-step Levy area.  The solution is a controlled
path with Gubinelli derivative G(y); the drift contribution lives in the
remainder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .controlled import ControlledPath, SmoothCoefficient
from .errors import GridError, NumericalError
from .fbm import RoughLift
from .grid import GridPath
from .variation import (
    RoughnessParams,
    _resolve_interval,
    greedy_stopping_times,
    p_var_norm,
)


@dataclass(frozen=True)
class RdeProblem:
    drift: Callable
    diffusion: SmoothCoefficient
    driver: RoughLift
    y0: np.ndarray
    params: RoughnessParams
    drift_lipschitz: float = 1.0

    def validate_lipschitz(self, box: float = 2.0, n_pairs: int = 100, seed: int = 0):
        """Spot-check the reported drift Lipschitz constant on random pairs."""
        if not self.drift_lipschitz > 0:
            raise ValueError("drift Lipschitz constant must be positive")
        rng = np.random.default_rng(seed)
        dim = np.atleast_1d(np.asarray(self.y0, float)).shape[0]
        a = rng.uniform(-box, box, size=(n_pairs, dim))
        b = rng.uniform(-box, box, size=(n_pairs, dim))
        fa, fb = np.asarray(self.drift(a)), np.asarray(self.drift(b))
        num = np.linalg.norm(fa - fb, axis=-1)
        den = np.linalg.norm(a - b, axis=-1)
        quot = float(np.max(num / np.where(den > 0, den, 1.0)))
        if quot > self.drift_lipschitz * (1.0 + 1e-6):
            raise ValueError(
                f"sampled Lipschitz quotient {quot:.4g} exceeds declared "
                f"constant {self.drift_lipschitz:.4g}"
            )
        return quot


@dataclass(frozen=True, eq=False)
class RdeSolution:
    path: GridPath
    gubinelli_deriv: np.ndarray  # G(y) per node, shape (n+1, W, V)
    driver: RoughLift

    def controlled(self) -> ControlledPath:
        """The solution as a path controlled by the driver (y' = G(y))."""
        return ControlledPath(self.driver.base, self.path.values, self.gubinelli_deriv)


def davie_step(y, drift, diffusion: SmoothCoefficient, x_inc, levy_inc, dt_inc):
    """y + F(y) dt + G(y) x_inc + (DG(y) G(y)) levy_inc."""
    gv = np.asarray(diffusion.fn(y), dtype=float)
    dg = np.asarray(diffusion.d1(y), dtype=float)
    corr = np.einsum("wvj,jk,kl->w", dg, gv, levy_inc)
    return y + np.asarray(drift(y)) * dt_inc + gv @ x_inc + corr


def solve_rde(
    problem: RdeProblem, s: float | None = None, t: float | None = None
) -> RdeSolution:
    """Iterate the Davie step over the driver grid on [s, t]."""
    base = problem.driver.base
    lo, hi = _resolve_interval(base.times, base.t0, base.dt, base.n_steps, s, t)
    n = hi - lo
    y = np.atleast_1d(np.asarray(problem.y0, dtype=float)).copy()
    w = y.shape[0]
    out = np.empty((n + 1, w))
    deriv = np.empty((n + 1, w, base.dim))
    out[0] = y
    deriv[0] = problem.diffusion.fn(y)
    xinc = np.diff(base.values[lo : hi + 1], axis=0)
    areas = problem.driver.step_area[lo:hi]
    dt = base.dt
    drift, diffusion = problem.drift, problem.diffusion
    for k in range(n):
        y = davie_step(y, drift, diffusion, xinc[k], areas[k], dt)
        if not np.all(np.isfinite(y)):
            raise NumericalError(
                f"solution blew up at step {lo + k + 1} "
                f"(t = {base.times[lo + k + 1]:.6g})"
            )
        out[k + 1] = y
        deriv[k + 1] = diffusion.fn(y)
    path = GridPath(base.times[lo], dt, out)
    return RdeSolution(path, deriv, problem.driver.restrict(base.times[lo], base.times[hi]))


@dataclass(frozen=True)
class NormReport:
    """A-priori solution norm diagnostics; bounds use a trial sewing
    constant and are reported, not asserted."""

    sup_norm: float
    pvar_plus_remainder: float
    count_n: int
    nu: float
    sup_bound: float
    pvar_bound: float
    c_p_hat: float

    def csv_row(self) -> str:
        return (
            f"{self.sup_norm},{self.pvar_plus_remainder},{self.count_n},"
            f"{self.nu},{self.sup_bound},{self.pvar_bound},{self.c_p_hat}"
        )


def solution_norm_report(
    sol: RdeSolution, problem: RdeProblem, c_p_hat: float = 1.0
) -> NormReport:
    """Compute the solution's sup / p-var norms and the a-priori bound terms.

    nu = 1 / (4 c_p_hat C_G) with c_p_hat a configured trial sewing constant;
    the true constant is unquantified, so the comparison is diagnostic only.
    """
    p = problem.params.p
    y = sol.path
    sup = float(np.max(np.linalg.norm(y.values, axis=1)))
    controlled = sol.controlled()
    pvar = p_var_norm(y, p)
    rem = p_var_norm(controlled.remainder, problem.params.q)
    cg = problem.diffusion.bound
    if not np.isfinite(cg) or cg <= 0:
        raise ValueError("diffusion bound C_G must be finite and positive")
    nu = 1.0 / (4.0 * c_p_hat * cg)
    _, count_n = greedy_stopping_times(sol.driver, problem.params, nu)
    y0 = np.atleast_1d(np.asarray(problem.y0, float))
    f0 = np.linalg.norm(np.atleast_1d(problem.drift(np.zeros_like(y0))))
    cf = problem.drift_lipschitz
    span = y.t_end - y.t0
    amp = np.linalg.norm(y0) + (f0 / cf + 1.0 / c_p_hat) * count_n
    sup_bound = amp * np.exp(4.0 * cf * span)
    pvar_bound = amp * np.exp(4.0 * cf * span) * count_n ** (
        (p - 1.0) / p
    ) - np.linalg.norm(y0)
    return NormReport(sup, float(pvar + rem), count_n, nu, float(sup_bound), float(pvar_bound), c_p_hat)
