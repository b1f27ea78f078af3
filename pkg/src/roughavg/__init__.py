"""Rough-path numerics for fast-slow averaging experiments."""

from .controlled import (
    ControlledPath,
    SmoothCoefficient,
    compose_smooth,
    identity_controlled,
    local_error_certificate,
    make_controlled,
    rough_integral,
)
from .errors import (
    CheckFailed,
    ConfigError,
    GridError,
    NumericalError,
    RoughAvgError,
)
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    SCENARIOS,
    probe_averaged_drift,
    run_block_study,
    run_convergence_study,
)
from .fastslow import (
    AveragedDriftConfig,
    FastSlowSystem,
    KhasminskiiParams,
    averaged_drift,
    khasminskii_aux,
    averaging_distance,
    fixed_point_block_path,
    fixed_point_path,
    ou_scaling_check,
    ou_stationary,
    ou_stationary_path,
    pullback_fixed_point,
    solve_averaged,
    solve_fastslow,
    truncation_horizon,
)
from .fbm import (
    RoughLift,
    fbm_covariance,
    lift_piecewise_linear,
    rebase_at,
    rescale_time,
    sample_fbm,
    sample_fbm_ensemble,
)
from .grid import GridPath, HurstIndex
from .rde import RdeProblem, RdeSolution, solve_rde, solution_norm_report
from .variation import (
    RoughnessParams,
    TwoIndexFunction,
    check_partition_inequality,
    estimate_holder_exponent,
    greedy_stopping_times,
    holder_norm,
    homogeneous_rough_norm,
    is_control,
    p_var_norm,
)

__version__ = "0.1.0"
