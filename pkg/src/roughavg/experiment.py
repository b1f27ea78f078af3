"""Experiment harness: configs, scenario registry, the epsilon-ladder
convergence study and the block-discretization study, with CSV emission.

Reproducibility contract: one (omega1, omega2) realization per seed, reused
across the whole epsilon ladder and for the averaged solve; all randomness is
keyed by the config seeds, so identical configs give identical result rows
(the runtime_ms column excepted) independent of the worker count.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import yaml
from scipy.interpolate import CubicSpline

from .controlled import SmoothCoefficient
from .errors import ConfigError, RoughAvgError
from .fastslow import (
    AveragedDriftConfig,
    FastSlowSystem,
    KhasminskiiParams,
    averaged_drift,
    fixed_point_block_path,
    khasminskii_aux,
    solve_averaged,
    solve_fastslow,
    averaging_distance,
    truncation_horizon,
)
from .fbm import lift_piecewise_linear, sample_fbm
from .grid import GridPath, HurstIndex
from .variation import RoughnessParams

_FAST_SEED_OFFSET = 7_000_000
_DRIFT_SEED_OFFSET = 9_000_000


# --------------------------------------------------------------------------
# Scenario registry
# --------------------------------------------------------------------------


def _sin_diffusion() -> SmoothCoefficient:
    """h(x) = 0.5 + 0.25 sin(x) as a scalar diffusion coefficient."""
    return SmoothCoefficient(
        fn=lambda x: (0.5 + 0.25 * np.sin(x))[..., None],
        d1=lambda x: (0.25 * np.cos(x))[..., None, None],
        d2=lambda x: (-0.25 * np.sin(x))[..., None, None, None],
        d3=lambda x: (-0.25 * np.cos(x))[..., None, None, None, None],
        bound=0.75,
    )


def _zero_diffusion() -> SmoothCoefficient:
    return SmoothCoefficient(
        fn=lambda x: np.zeros(x.shape + (1,)),
        d1=lambda x: np.zeros(x.shape + (1, 1)),
        d2=lambda x: np.zeros(x.shape + (1, 1, 1)),
        d3=lambda x: np.zeros(x.shape + (1, 1, 1, 1)),
        bound=1.0,
    )


def _make_sin_coupled(eps, h_slow, h_fast) -> FastSlowSystem:
    return FastSlowSystem(
        f=lambda x, y: np.sin(x) + np.sin(y),
        h=_sin_diffusion(),
        a_matrix=np.array([[2.0]]),
        g_tilde=lambda x, y: np.zeros(np.broadcast_shapes(x.shape, y.shape)),
        eps=eps,
        hurst_slow=HurstIndex(h_slow),
        hurst_fast=HurstIndex(h_fast),
        x0=np.array([1.0]),
        y0=np.array([0.0]),
        dim_slow_driver=1,
        f_lipschitz=1.5,
        gtilde_lipschitz=0.0,
    )


def _make_decoupled_linear(eps, h_slow, h_fast) -> FastSlowSystem:
    return FastSlowSystem(
        f=lambda x, y: np.broadcast_to(x, np.broadcast_shapes(x.shape, y.shape)).copy(),
        h=_zero_diffusion(),
        a_matrix=np.array([[1.0]]),
        g_tilde=lambda x, y: np.zeros(np.broadcast_shapes(x.shape, y.shape)),
        eps=eps,
        hurst_slow=HurstIndex(h_slow),
        hurst_fast=HurstIndex(h_fast),
        x0=np.array([1.0]),
        y0=np.array([0.0]),
        dim_slow_driver=1,
        f_lipschitz=1.0,
        gtilde_lipschitz=0.0,
    )


def _make_quadratic_probe(eps, h_slow, h_fast) -> FastSlowSystem:
    return FastSlowSystem(
        f=lambda x, y: np.sum(y * y, axis=-1, keepdims=True)
        + 0.0 * x,
        h=_zero_diffusion(),
        a_matrix=np.array([[2.0]]),
        g_tilde=lambda x, y: np.zeros(np.broadcast_shapes(x.shape, y.shape)),
        eps=eps,
        hurst_slow=HurstIndex(h_slow),
        hurst_fast=HurstIndex(h_fast),
        x0=np.array([0.0]),
        y0=np.array([0.0]),
        dim_slow_driver=1,
        f_lipschitz=10.0,
        gtilde_lipschitz=0.0,
    )


def _make_coupled_block(eps, h_slow, h_fast) -> FastSlowSystem:
    # g_tilde depends on x only, so its y-Lipschitz constant is 0 and the
    # spectral gap is untouched while Y genuinely tracks X
    return FastSlowSystem(
        f=lambda x, y: np.sin(x) + np.sin(y),
        h=_sin_diffusion(),
        a_matrix=np.array([[2.0]]),
        g_tilde=lambda x, y: 0.5 * np.sin(x) + 0.0 * y,
        eps=eps,
        hurst_slow=HurstIndex(h_slow),
        hurst_fast=HurstIndex(h_fast),
        x0=np.array([1.0]),
        y0=np.array([0.0]),
        dim_slow_driver=1,
        f_lipschitz=1.5,
        gtilde_lipschitz=0.0,
    )


SCENARIOS: dict[str, Callable] = {
    "sin-coupled": _make_sin_coupled,
    "decoupled-linear": _make_decoupled_linear,
    "quadratic-probe": _make_quadratic_probe,
    "coupled-block": _make_coupled_block,
}


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------

SCHEMA_VERSION = 1

_TOP_KEYS = {
    "schema_version", "scenario", "hurst_slow", "hurst_fast", "t_end",
    "eps_ladder", "delta_ladder", "seeds", "estimator", "fast_resolution",
    "drift_probes", "out_dir",
}
_SEED_KEYS = {"count", "base"}
_EST_KEYS = {"mode", "n_samples", "horizon", "dt", "tol", "z_tol"}
_PROBE_KEYS = {"count", "margin"}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "sin-coupled"
    hurst_slow: float = 0.5
    hurst_fast: float = 0.5
    t_end: float = 1.0
    eps_ladder: tuple = (0.5, 0.1, 0.02)
    delta_ladder: tuple = (0.2, 0.1, 0.05)
    n_seeds: int = 20
    seed_base: int = 100
    estimator: AveragedDriftConfig = field(
        default_factory=lambda: AveragedDriftConfig(n_samples=4000)
    )
    fast_resolution: float = 1.0 / 50.0
    n_probes: int = 33
    probe_margin: float = 0.5
    out_dir: str = "out"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; "
                f"known: {sorted(SCENARIOS)}"
            )
        eps = tuple(float(e) for e in self.eps_ladder)
        delta = tuple(float(d) for d in self.delta_ladder)
        if not eps or list(eps) != sorted(eps, reverse=True):
            raise ConfigError("eps_ladder must be non-empty, sorted descending")
        if not delta or list(delta) != sorted(delta, reverse=True):
            raise ConfigError("delta_ladder must be non-empty, sorted descending")
        if any(not 0.0 < e <= 1.0 for e in eps):
            raise ConfigError("every eps must lie in (0, 1]")
        if any(not 0.0 < d < 1.0 for d in delta):
            raise ConfigError("every delta must lie in (0, 1)")
        for e in eps:
            r = max(eps) / e
            if abs(r - round(r)) > 1e-9:
                raise ConfigError(
                    f"eps ladder not nested: max(eps)/{e} must be an integer"
                )
        object.__setattr__(self, "eps_ladder", eps)
        object.__setattr__(self, "delta_ladder", delta)
        if self.n_seeds < 1:
            raise ConfigError("need at least one seed")
        dt = self.dt
        if abs(self.t_end / dt - round(self.t_end / dt)) > 1e-9:
            raise ConfigError(f"t_end={self.t_end} is not a multiple of dt={dt}")
        for d in delta:
            if abs(d / dt - round(d / dt)) > 1e-9:
                raise ConfigError(f"delta={d} is not a multiple of dt={dt}")
        # constructing the system re-checks the spectral gap
        system = self.make_system(max(eps))
        if dt > self.fast_resolution * min(eps) * (1.0 + 1e-9):
            raise ConfigError("dt does not resolve the smallest eps")
        HurstIndex(self.hurst_slow)
        HurstIndex(self.hurst_fast)
        del system

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if raw.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(
                f"config schema_version must be {SCHEMA_VERSION}, "
                f"got {raw.get('schema_version')!r}"
            )
        kwargs = {}
        for key in ("scenario", "out_dir"):
            if key in raw:
                kwargs[key] = str(raw[key])
        for key in ("hurst_slow", "hurst_fast", "t_end", "fast_resolution"):
            if key in raw:
                kwargs[key] = float(raw[key])
        for key in ("eps_ladder", "delta_ladder"):
            if key in raw:
                kwargs[key] = tuple(float(v) for v in raw[key])
        if "seeds" in raw:
            seeds = raw["seeds"]
            unknown = set(seeds) - _SEED_KEYS
            if unknown:
                raise ConfigError(f"unknown seeds keys: {sorted(unknown)}")
            if "count" in seeds:
                kwargs["n_seeds"] = int(seeds["count"])
            if "base" in seeds:
                kwargs["seed_base"] = int(seeds["base"])
        if "estimator" in raw:
            est = raw["estimator"]
            unknown = set(est) - _EST_KEYS
            if unknown:
                raise ConfigError(f"unknown estimator keys: {sorted(unknown)}")
            try:
                kwargs["estimator"] = AveragedDriftConfig(
                    mode=str(est.get("mode", "ensemble")),
                    n_samples=int(est.get("n_samples", 4000)),
                    horizon=float(est.get("horizon", 200.0)),
                    dt=float(est.get("dt", 0.02)),
                    tol=float(est.get("tol", 1e-6)),
                    z_tol=float(est.get("z_tol", 1e-8)),
                )
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if "drift_probes" in raw:
            pr = raw["drift_probes"]
            unknown = set(pr) - _PROBE_KEYS
            if unknown:
                raise ConfigError(f"unknown drift_probes keys: {sorted(unknown)}")
            if "count" in pr:
                kwargs["n_probes"] = int(pr["count"])
            if "margin" in pr:
                kwargs["probe_margin"] = float(pr["margin"])
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"unparseable config: {exc}") from exc
        return cls.from_dict(raw if raw is not None else {})

    # derived quantities ---------------------------------------------------

    @property
    def dt(self) -> float:
        """Slow grid step: the smallest eps times the fast resolution."""
        return self.fast_resolution * min(self.eps_ladder)

    @property
    def dt_base(self) -> float:
        """Base (unrescaled) fast-noise step: dt mapped through max eps."""
        return self.dt / max(self.eps_ladder)

    @property
    def rough_params(self) -> RoughnessParams:
        # comfortably above 1/H: any p in (1/H, 3) is admissible, and a
        # larger p makes the remainder q-variation (q = p/2) contract
        # visibly along the eps ladder instead of at rate eps^(q-1) ~ 1
        return RoughnessParams(
            p=min(2.95, 1.0 / self.hurst_slow + 0.4), gamma=0.4
        )

    def make_system(self, eps: float) -> FastSlowSystem:
        try:
            return SCENARIOS[self.scenario](eps, self.hurst_slow, self.hurst_fast)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def noise_window(self) -> tuple[float, int]:
        """(t0, n_steps) of the base omega2 grid covering every shifted query.

        Left margin holds the OU truncation horizon plus the pullback burn-in;
        rounded to a whole number so every ladder stride lands on the grid.
        """
        system = self.make_system(max(self.eps_ladder))
        est = self.estimator
        left = truncation_horizon(system.lambda_a, est.z_tol)
        left += 2.0 * np.log(1.0 / est.tol) / system.gap + 1.0
        left = float(np.ceil(left))
        right = self.t_end / min(self.eps_ladder)
        db = self.dt_base
        while True:
            n0 = (left + right) / db
            if abs(n0 - round(n0)) < 1e-9 and all(
                round(left / db) % round(max(self.eps_ladder) / e) == 0
                for e in self.eps_ladder
            ):
                break
            left += 1.0
        return -left, int(round((left + right) / db))

    def resolved_out_dir(self) -> Path:
        return Path(os.environ.get("ROUGHAVG_OUT_DIR", self.out_dir))


def resolved_workers(default: int = 1) -> int:
    raw = os.environ.get("ROUGHAVG_WORKERS")
    if raw is None:
        return default
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"ROUGHAVG_WORKERS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("ROUGHAVG_WORKERS must be >= 1")
    return n


# --------------------------------------------------------------------------
# Result containers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StudyRow:
    seed: int
    eps: float
    sup_dist: float
    pvar_dist: float
    rem_dist: float
    runtime_ms: float
    error: str | None = None


@dataclass(frozen=True)
class BlockRow:
    seed: int
    eps: float
    delta: float
    y_aux_integral: float
    aux_fixed_integral: float
    runtime_ms: float
    error: str | None = None


@dataclass(frozen=True)
class DriftProbeRow:
    x: float
    fbar: float
    stderr: float
    n_samples: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    drift_probes: list

    @property
    def n_failures(self) -> int:
        return sum(1 for r in self.rows if r.error is not None)

    def summary(self) -> list[dict]:
        out = []
        for eps in self.config.eps_ladder:
            sups = [r.sup_dist for r in self.rows if r.eps == eps and r.error is None]
            pvars = [r.pvar_dist for r in self.rows if r.eps == eps and r.error is None]
            rems = [r.rem_dist for r in self.rows if r.eps == eps and r.error is None]
            out.append(
                {
                    "eps": eps,
                    "median_sup": float(np.median(sups)) if sups else float("nan"),
                    "max_sup": float(np.max(sups)) if sups else float("nan"),
                    "median_pvar": float(np.median(pvars)) if pvars else float("nan"),
                    "median_rem": float(np.median(rems)) if rems else float("nan"),
                    "n_ok": len(sups),
                }
            )
        return out


def _fmt(v: float) -> str:
    return repr(float(v))


def write_study_csv(result: ExperimentResult, path) -> None:
    lines = ["seed,eps,sup_dist,pvar_dist,rem_dist,runtime_ms"]
    for r in result.rows:
        if r.error is not None:
            lines.append(f"{r.seed},{_fmt(r.eps)},nan,nan,nan,{r.runtime_ms:.0f}")
        else:
            lines.append(
                f"{r.seed},{_fmt(r.eps)},{_fmt(r.sup_dist)},{_fmt(r.pvar_dist)},"
                f"{_fmt(r.rem_dist)},{r.runtime_ms:.0f}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_summary_csv(result: ExperimentResult, path) -> None:
    lines = ["eps,median_sup,max_sup,median_pvar,median_rem,n_ok"]
    for s in result.summary():
        lines.append(
            f"{_fmt(s['eps'])},{_fmt(s['median_sup'])},{_fmt(s['max_sup'])},"
            f"{_fmt(s['median_pvar'])},{_fmt(s['median_rem'])},{s['n_ok']}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_failures(result: ExperimentResult, path) -> None:
    lines = ["seed,eps,error"]
    for r in result.rows:
        if r.error is not None:
            msg = r.error.replace("\n", " ").replace(",", ";")
            lines.append(f"{r.seed},{_fmt(r.eps)},{msg}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_drift_probes_csv(rows, path) -> None:
    lines = ["x,fbar,stderr,n_samples"]
    for r in rows:
        lines.append(f"{_fmt(r.x)},{_fmt(r.fbar)},{_fmt(r.stderr)},{r.n_samples}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_block_csv(rows, path) -> None:
    lines = ["seed,eps,delta,y_aux_integral,aux_fixed_integral,runtime_ms"]
    for r in rows:
        if r.error is not None:
            lines.append(
                f"{r.seed},{_fmt(r.eps)},{_fmt(r.delta)},nan,nan,{r.runtime_ms:.0f}"
            )
        else:
            lines.append(
                f"{r.seed},{_fmt(r.eps)},{_fmt(r.delta)},{_fmt(r.y_aux_integral)},"
                f"{_fmt(r.aux_fixed_integral)},{r.runtime_ms:.0f}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# Noise sampling (one realization per seed, reused everywhere)
# --------------------------------------------------------------------------


def seed_noise(config: ExperimentConfig, seed: int):
    """(omega1 lift, base omega2 path) for one study seed."""
    n_slow_steps = int(round(config.t_end / config.dt))
    omega1 = sample_fbm(
        config.hurst_slow, 1, 0.0, config.dt, n_slow_steps,
        config.seed_base + seed,
    )
    t0, n_base = config.noise_window()
    omega2 = sample_fbm(
        config.hurst_fast, 1, t0, config.dt_base, n_base,
        config.seed_base + seed + _FAST_SEED_OFFSET,
    )
    # shift so omega2 vanishes at time 0 (the theta_0 base point)
    omega2 = omega2.shifted(-omega2.value_at(0.0))
    return lift_piecewise_linear(omega1), omega2


# --------------------------------------------------------------------------
# Averaged-drift probe table and interpolant
# --------------------------------------------------------------------------


def probe_averaged_drift(
    config: ExperimentConfig, probes=None
) -> list[DriftProbeRow]:
    """Tabulate the averaged drift with standard errors at probe points."""
    system = config.make_system(1.0)
    if system.n_slow != 1:
        raise ConfigError("drift probing supports one-dimensional slow states")
    if probes is None:
        x0 = float(system.x0[0])
        lo, hi = x0 - 1.0 - config.probe_margin, x0 + 1.0 + config.probe_margin
        probes = np.linspace(lo, hi, config.n_probes)
    est = AveragedDriftConfig(
        mode=config.estimator.mode,
        n_samples=config.estimator.n_samples,
        horizon=config.estimator.horizon,
        dt=config.estimator.dt,
        seed=config.seed_base + _DRIFT_SEED_OFFSET,
        z_tol=config.estimator.z_tol,
        tol=config.estimator.tol,
    )
    rows = []
    for x in np.atleast_1d(probes):
        val, err = averaged_drift(system, np.array([float(x)]), est)
        rows.append(
            DriftProbeRow(float(x), float(val[0]), err, est.n_samples)
        )
    return rows


def drift_interpolant(rows) -> Callable:
    """Cubic-spline averaged-drift handle built from a probe table."""
    xs = np.array([r.x for r in rows])
    ys = np.array([r.fbar for r in rows])
    spline = CubicSpline(xs, ys)

    def fbar(x):
        x = np.asarray(x, dtype=float)
        return spline(x[..., 0])[..., None]

    fbar.x_range = (float(xs[0]), float(xs[-1]))
    fbar.lipschitz = float(np.max(np.abs(spline.derivative()(xs))))
    return fbar


# --------------------------------------------------------------------------
# Convergence study
# --------------------------------------------------------------------------

_CELL_ERRORS = (RoughAvgError, FloatingPointError, np.linalg.LinAlgError)


def run_convergence_study(config: ExperimentConfig) -> ExperimentResult:
    """The epsilon-ladder study: X^eps vs the averaged solution, per seed.

    Three phases: solve every (seed, eps) cell; estimate the averaged drift
    over the observed slow range; solve the averaged equation per seed on the
    same omega1 and measure the three distances.  Cell failures are recorded
    and never abort sibling cells.
    """
    params = config.rough_params
    t_end = config.t_end
    seeds = list(range(config.n_seeds))
    noises = {s: seed_noise(config, s) for s in seeds}
    cells = [(s, e) for s in seeds for e in config.eps_ladder]

    def solve_cell(cell):
        seed, eps = cell
        lift1, omega2 = noises[seed]
        started = time.perf_counter()
        try:
            system = config.make_system(eps)
            x_sol, _ = solve_fastslow(
                system, lift1, omega2, t_end,
                fast_resolution=config.fast_resolution, params=params,
            )
            return cell, x_sol, (time.perf_counter() - started) * 1e3, None
        except _CELL_ERRORS as exc:
            return cell, None, (time.perf_counter() - started) * 1e3, str(exc)

    workers = resolved_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(solve_cell, cells))
    else:
        solved = [solve_cell(c) for c in cells]
    solved = {cell: rest for cell, *rest in solved}

    # probe range: the observed slow range across all successful cells
    values = [
        s.path.values for s, _, err in solved.values() if err is None and s is not None
    ]
    x0 = float(config.make_system(max(config.eps_ladder)).x0[0])
    if values:
        lo = min(float(v.min()) for v in values) - config.probe_margin
        hi = max(float(v.max()) for v in values) + config.probe_margin
    else:
        lo, hi = x0 - 1.0, x0 + 1.0
    probes = np.linspace(lo, hi, config.n_probes)
    probe_rows = probe_averaged_drift(config, probes)
    fbar = drift_interpolant(probe_rows)

    rows = []
    for seed in seeds:
        lift1, _ = noises[seed]
        bar_sol = None
        bar_err = None
        try:
            system = config.make_system(max(config.eps_ladder))
            bar_sol = solve_averaged(system, fbar, lift1, t_end, params=params)
        except _CELL_ERRORS as exc:
            bar_err = str(exc)
        for eps in config.eps_ladder:
            x_sol, solve_ms, err = solved[(seed, eps)]
            if err is None and bar_err is not None:
                err = f"averaged solve failed: {bar_err}"
            if err is not None:
                rows.append(
                    StudyRow(seed, eps, float("nan"), float("nan"), float("nan"),
                             solve_ms, error=err)
                )
                continue
            started = time.perf_counter()
            try:
                dist = averaging_distance(x_sol, bar_sol, params)
                dist_ms = (time.perf_counter() - started) * 1e3
                rows.append(
                    StudyRow(seed, eps, dist.sup, dist.pvar, dist.rem_qvar,
                             solve_ms + dist_ms)
                )
            except _CELL_ERRORS as exc:
                dist_ms = (time.perf_counter() - started) * 1e3
                rows.append(
                    StudyRow(seed, eps, float("nan"), float("nan"), float("nan"),
                             solve_ms + dist_ms, error=str(exc))
                )
    rows.sort(key=lambda r: (r.seed, -r.eps))
    return ExperimentResult(config, rows, probe_rows)


# --------------------------------------------------------------------------
# Khasminskii block study
# --------------------------------------------------------------------------


def _l1_path_distance(a: GridPath, b: GridPath) -> float:
    """Trapezoid integral of ||a - b|| over the shared grid."""
    diff = np.linalg.norm(a.values - b.values, axis=1)
    w = np.full(len(diff), a.dt)
    w[0] = w[-1] = 0.5 * a.dt
    return float(np.sum(w * diff))


def run_block_study(config: ExperimentConfig) -> list[BlockRow]:
    """Block-discretization diagnostics over the (eps, delta) grid.

    Per cell: the L1 distance between the fast solution and the frozen-slow
    auxiliary process, and between the auxiliary process and the fixed point
    evaluated at the frozen slow values.
    """
    params = config.rough_params
    rows = []
    for seed in range(config.n_seeds):
        lift1, omega2 = seed_noise(config, seed)
        for eps in config.eps_ladder:
            system = config.make_system(eps)
            started = time.perf_counter()
            try:
                x_sol, y_path = solve_fastslow(
                    system, lift1, omega2, config.t_end,
                    fast_resolution=config.fast_resolution, params=params,
                )
            except _CELL_ERRORS as exc:
                ms = (time.perf_counter() - started) * 1e3
                for delta in config.delta_ladder:
                    rows.append(
                        BlockRow(seed, eps, delta, float("nan"), float("nan"),
                                 ms, error=str(exc))
                    )
                continue
            for delta in config.delta_ladder:
                t1 = time.perf_counter()
                try:
                    kp = KhasminskiiParams(delta=delta, gamma=params.gamma or 0.4)
                    aux = khasminskii_aux(system, x_sol.path, omega2, kp)
                    fp = fixed_point_block_path(
                        system, x_sol.path, omega2, kp,
                        tol=config.estimator.tol, z_tol=config.estimator.z_tol,
                    )
                    rows.append(
                        BlockRow(
                            seed, eps, delta,
                            _l1_path_distance(y_path, aux),
                            _l1_path_distance(aux, fp),
                            (time.perf_counter() - t1) * 1e3,
                        )
                    )
                except _CELL_ERRORS as exc:
                    rows.append(
                        BlockRow(seed, eps, delta, float("nan"), float("nan"),
                                 (time.perf_counter() - t1) * 1e3, error=str(exc))
                    )
    rows.sort(key=lambda r: (r.seed, -r.eps, -r.delta))
    return rows


def block_medians(rows, key: str) -> dict:
    """Median of one block metric over seeds, per (eps, delta) cell."""
    cells = {}
    for r in rows:
        if r.error is None:
            cells.setdefault((r.eps, r.delta), []).append(getattr(r, key))
    return {c: float(np.median(v)) for c, v in cells.items()}
