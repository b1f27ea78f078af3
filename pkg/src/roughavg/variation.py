"""p-variation and Hoelder analytics on grid paths and two-index functions.

The supremum over partitions is taken over partitions with breakpoints at
grid nodes.  All signals in this library are piecewise linear between nodes,
for which the path-component supremum is attained on node partitions, so this
is the discrete semantics throughout.  The p-variation itself is computed by
an exact O(n^2) dynamic program (best partition ending at each node); the
brute-force enumeration over all node subsets lives in the test suite as the
oracle for small grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GridError
from .fbm import RoughLift
from .grid import GridPath


@dataclass(frozen=True)
class RoughnessParams:
    """Variation/Hoelder exponents used across the estimates.

    p is the variation exponent (2 <= p < 3), q = p/2, alpha = 1/p; gamma is
    the target Hoelder exponent for increment bounds (gamma < min Hurst).
    """

    p: float
    gamma: float | None = None
    q: float = field(init=False)
    alpha: float = field(init=False)

    def __post_init__(self):
        if not (2.0 <= self.p < 3.0):
            raise ValueError(f"p must lie in [2, 3), got {self.p}")
        object.__setattr__(self, "q", self.p / 2.0)
        object.__setattr__(self, "alpha", 1.0 / self.p)


class TwoIndexFunction:
    """A function R_{s,t} on grid node pairs, evaluated lazily.

    norms(i, j) returns ||R_{t_i, t_j}|| for an array of left indices i and a
    single right index j; this is the access pattern of the variation DP, so
    nothing is ever materialized densely unless asked for.
    """

    def __init__(self, times: np.ndarray, norm_fn: Callable, value_fn=None):
        self.times = np.asarray(times, dtype=float)
        self._norm_fn = norm_fn
        self._value_fn = value_fn

    def __len__(self):
        return len(self.times)

    def norms(self, i, j: int) -> np.ndarray:
        return np.asarray(self._norm_fn(np.atleast_1d(i), j), dtype=float)

    def value(self, i: int, j: int):
        if self._value_fn is None:
            return self.norms(np.array([i]), j)[0]
        return self._value_fn(i, j)

    @classmethod
    def from_dense(cls, times, matrix) -> "TwoIndexFunction":
        mat = np.asarray(matrix, dtype=float)

        def norm_fn(i, j):
            vals = mat[i, j]
            if vals.ndim == 1:
                return np.abs(vals)
            return np.linalg.norm(vals.reshape(len(i), -1), axis=1)

        return cls(times, norm_fn, value_fn=lambda i, j: mat[i, j])

    @classmethod
    def from_increments(cls, path: GridPath) -> "TwoIndexFunction":
        vals = path.values

        def norm_fn(i, j):
            return np.linalg.norm(vals[j] - vals[i], axis=-1)

        return cls(path.times, norm_fn, value_fn=lambda i, j: vals[j] - vals[i])

    @classmethod
    def from_area(cls, lift: RoughLift) -> "TwoIndexFunction":
        def norm_fn(i, j):
            a = lift.areas_from(np.atleast_1d(i), j)
            return np.linalg.norm(a.reshape(len(a), -1), axis=1)

        return cls(lift.base.times, norm_fn, value_fn=lift.area)

    @classmethod
    def from_scalar(cls, times, fn: Callable) -> "TwoIndexFunction":
        """fn(s_times, t_time) -> scalar values, vectorized in its first arg."""
        times = np.asarray(times, dtype=float)

        def norm_fn(i, j):
            return np.abs(fn(times[i], times[j]))

        return cls(times, norm_fn, value_fn=lambda i, j: fn(times[i], times[j]))


def _resolve_interval(times, t0, dt, n, s, t):
    if s is None:
        i = 0
    else:
        i = int(round((s - t0) / dt))
        if abs(t0 + i * dt - s) > 1e-9 * max(1.0, abs(s)) + 1e-12 or not 0 <= i <= n:
            raise GridError(f"interval endpoint {s} not on the grid")
    if t is None:
        j = n
    else:
        j = int(round((t - t0) / dt))
        if abs(t0 + j * dt - t) > 1e-9 * max(1.0, abs(t)) + 1e-12 or not 0 <= j <= n:
            raise GridError(f"interval endpoint {t} not on the grid")
    if j <= i:
        raise GridError("interval must contain at least one grid step")
    return i, j


def _pvar_power_dp(norm_fn: Callable, lo: int, hi: int, p: float) -> float:
    """max over partitions lo=i_0<...<i_k=hi of sum ||val(i_l, i_{l+1})||^p."""
    n = hi - lo
    dp = np.zeros(n + 1)
    for j in range(1, n + 1):
        i = np.arange(j)
        dp[j] = np.max(dp[:j] + norm_fn(i + lo, j + lo) ** p)
    return float(dp[n])


def p_var_norm(obj, p: float, s: float | None = None, t: float | None = None) -> float:
    """p-variation norm of a GridPath or TwoIndexFunction on [s, t].

    Exact over partitions with breakpoints at grid nodes, by dynamic
    programming.  Defaults to the full grid interval.
    """
    if p < 1.0:
        raise ValueError("p must be >= 1")
    if isinstance(obj, GridPath):
        fn = TwoIndexFunction.from_increments(obj)
        lo, hi = _resolve_interval(fn.times, obj.t0, obj.dt, obj.n_steps, s, t)
    elif isinstance(obj, TwoIndexFunction):
        fn = obj
        t0, dt = fn.times[0], fn.times[1] - fn.times[0]
        lo, hi = _resolve_interval(fn.times, t0, dt, len(fn.times) - 1, s, t)
    else:
        raise TypeError("expected GridPath or TwoIndexFunction")
    return _pvar_power_dp(fn.norms, lo, hi, p) ** (1.0 / p)


def holder_norm(
    path: GridPath, alpha: float, s: float | None = None, t: float | None = None
) -> float:
    """sup over grid pairs u < v in [s, t] of ||x_{u,v}|| / (v - u)^alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    lo, hi = _resolve_interval(path.times, path.t0, path.dt, path.n_steps, s, t)
    vals = path.values
    best = 0.0
    for j in range(lo + 1, hi + 1):
        i = np.arange(lo, j)
        num = np.linalg.norm(vals[j] - vals[i], axis=-1)
        den = (path.dt * (j - i)) ** alpha
        best = max(best, float(np.max(num / den)))
    return best


def two_index_holder_norm(fn: TwoIndexFunction, beta: float) -> float:
    """sup over grid pairs of ||R_{u,v}|| / (v - u)^beta (full interval)."""
    n = len(fn.times) - 1
    best = 0.0
    for j in range(1, n + 1):
        i = np.arange(j)
        num = fn.norms(i, j)
        den = (fn.times[j] - fn.times[i]) ** beta
        best = max(best, float(np.max(num / den)))
    return best


def homogeneous_rough_norm(
    lift: RoughLift,
    params: RoughnessParams,
    s: float | None = None,
    t: float | None = None,
) -> float:
    """(pvar(x)^p + qvar(X)^q)^(1/p) on [s, t], q = p/2."""
    base = lift.base
    lo, hi = _resolve_interval(base.times, base.t0, base.dt, base.n_steps, s, t)
    path_fn = TwoIndexFunction.from_increments(base)
    area_fn = TwoIndexFunction.from_area(lift)
    pp = _pvar_power_dp(path_fn.norms, lo, hi, params.p)
    qq = _pvar_power_dp(area_fn.norms, lo, hi, params.q)
    return (pp + qq) ** (1.0 / params.p)


def homogeneous_holder_rough_norm(lift: RoughLift, alpha: float) -> float:
    """Hoelder variant: holder(x, alpha) + holder(X, 2 alpha)^(1/2)."""
    area_fn = TwoIndexFunction.from_area(lift)
    return holder_norm(lift.base, alpha) + two_index_holder_norm(
        area_fn, 2.0 * alpha
    ) ** 0.5


def estimate_holder_exponent(path: GridPath, lags: Sequence[int] | None = None) -> float:
    """Log-regression estimate of the Hoelder exponent.

    Fits log of the sup increment norm at each lag against log of the lag
    duration; the slope estimates the largest alpha with a finite alpha-Hoelder
    norm on the grid.
    """
    n = path.n_steps
    if lags is None:
        lags = np.unique(np.geomspace(1, max(2, n // 4), 12).astype(int))
    sups = []
    durs = []
    vals = path.values
    for lag in lags:
        if lag < 1 or lag > n:
            raise GridError(f"lag {lag} outside 1..{n}")
        inc = np.linalg.norm(vals[lag:] - vals[:-lag], axis=-1)
        sups.append(float(np.max(inc)))
        durs.append(lag * path.dt)
    slope = np.polyfit(np.log(durs), np.log(sups), 1)[0]
    return float(slope)


@dataclass(frozen=True)
class PartitionReport:
    """Both sides of the partition inequality for a p-variation norm."""

    interval: tuple[float, float]
    p: float
    sum_pieces: float
    whole: float
    upper: float
    passed: bool

    def csv_row(self) -> str:
        s, t = self.interval
        return (
            f"partition_inequality,[{s}:{t}],{self.p},"
            f"{self.whole},{self.upper},{int(self.passed)}"
        )


def check_partition_inequality(
    path: GridPath, p: float, breakpoints: Sequence[float], rel_tol: float = 1e-9
) -> PartitionReport:
    """Verify sum_i pvar^p(piece_i) <= pvar^p(whole) <= (n-1)^(p-1) * sum."""
    pts = [path.index_of(b) for b in breakpoints]
    if len(pts) < 2 or any(b >= a for a, b in zip(pts[1:], pts[:-1])):
        raise GridError("breakpoints must be at least two increasing grid nodes")
    fn = TwoIndexFunction.from_increments(path)
    pieces = [
        _pvar_power_dp(fn.norms, a, b, p) for a, b in zip(pts[:-1], pts[1:])
    ]
    whole = _pvar_power_dp(fn.norms, pts[0], pts[-1], p)
    total = float(sum(pieces))
    upper = (len(pts) - 1) ** (p - 1.0) * total
    slack = rel_tol * max(1.0, whole)
    passed = total <= whole + slack and whole <= upper + slack
    interval = (path.t0 + pts[0] * path.dt, path.t0 + pts[-1] * path.dt)
    return PartitionReport(interval, p, total, whole, upper, passed)


def is_control(fn: TwoIndexFunction, tol: float = 1e-9) -> bool:
    """True iff fn vanishes on the diagonal and is super-additive on triples."""
    n = len(fn.times) - 1
    diag = np.array([fn.norms(np.array([k]), k)[0] for k in range(n + 1)])
    if np.any(np.abs(diag) > tol):
        return False
    # dense scalar table; entry (i, j) for i <= j
    table = np.zeros((n + 1, n + 1))
    for j in range(1, n + 1):
        i = np.arange(j)
        table[:j, j] = fn.norms(i, j)
    for t in range(1, n):
        left = table[:t, t]  # ell_{s,t}, s < t
        right = table[t, t + 1 :]  # ell_{t,u}, u > t
        direct = table[:t, t + 1 :]  # ell_{s,u}
        gap = left[:, None] + right[None, :] - direct
        if np.max(gap) > tol * max(1.0, float(np.max(direct, initial=0.0))):
            return False
    return True


def greedy_stopping_times(
    lift: RoughLift,
    params: RoughnessParams,
    nu: float,
    s: float | None = None,
    t: float | None = None,
) -> tuple[list[float], int]:
    """Greedy stopping times tau_i accruing nu of homogeneous rough norm.

    tau_{i+1} is the first grid node u > tau_i with the homogeneous norm on
    [tau_i, u] >= nu (the continuum infimum is unreachable on a grid), capped
    at t.  count_N counts i >= 1 with tau_i strictly before t, which keeps the
    bound count_N <= 1 + nu^-p * norm^p meaningful under the cap.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    base = lift.base
    lo, hi = _resolve_interval(base.times, base.t0, base.dt, base.n_steps, s, t)
    path_fn = TwoIndexFunction.from_increments(base)
    area_fn = TwoIndexFunction.from_area(lift)
    times = [base.t0 + lo * base.dt]
    a = lo
    count = 0
    nu_p = nu**params.p
    while a < hi:
        # incremental DP anchored at a; dp arrays indexed by offset from a
        m = hi - a
        dp_p = np.zeros(m + 1)
        dp_q = np.zeros(m + 1)
        crossed = None
        for j in range(1, m + 1):
            i = np.arange(j)
            dp_p[j] = np.max(dp_p[:j] + path_fn.norms(i + a, j + a) ** params.p)
            dp_q[j] = np.max(dp_q[:j] + area_fn.norms(i + a, j + a) ** params.q)
            if dp_p[j] + dp_q[j] >= nu_p:
                crossed = a + j
                break
        if crossed is None:
            break
        a = crossed
        times.append(base.t0 + a * base.dt)
        if a < hi:
            count += 1
    end_time = base.t0 + hi * base.dt
    if times[-1] < end_time:
        times.append(end_time)
    return times, count
