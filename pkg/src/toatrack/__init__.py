"""Range-measurement target tracking with online gradient descent.

Simulates a moving target observed through noisy time-of-arrival range
measurements, tracks it online (gradient or Newton steps), quantifies when
the underlying non-convex least-squares loss is locally strongly convex, and
reproduces the associated Monte Carlo experiments at desk scale.
"""

__version__ = "0.1.0"

from .analysis import (
    AnchorInBallError,
    ConvexityConfig,
    ConvexityReport,
    LinearDependenceError,
    ScalingReport,
    check_tracking_conditions,
    contraction_factor,
    direction_gram_min_eig,
    estimate_strong_convexity_constants,
    estimation_error_scaling,
    kappa,
    rank_one_diff_min_eig,
    unit_diff_bound_holds,
    verify_local_strong_convexity,
)
from .estimators import (
    OracleConfig,
    OracleResult,
    TrackerState,
    batch_least_squares,
    ogd_step,
    ols_initialize,
    onm_step,
)
from .geometry import (
    MeasurementFrame,
    NoiseSchedule,
    SensorArray,
    SensorCountError,
    SensorRankError,
    Trajectory,
    fixed_trajectory,
    measure,
    noiseless_frame,
    random_walk_trajectory,
    validate_sensor_array,
)
from .harness import (
    ScenarioConfig,
    ScenarioError,
    ScenarioResult,
    TrajectorySpec,
    benchmark_per_iteration,
    emit,
    load_config,
    preset,
    run_monte_carlo,
    run_single,
)
from .loss import (
    AnchorProximityError,
    LossSnapshot,
    distances_and_residuals,
    loss_gradient,
    loss_gradient_hessian,
    loss_hessian,
    loss_value,
)
from .metrics import RunMetrics, ctte, growth_profile, noise_cumulants, path_length
from .streams import substream

__all__ = [
    "AnchorInBallError",
    "AnchorProximityError",
    "ConvexityConfig",
    "ConvexityReport",
    "LinearDependenceError",
    "LossSnapshot",
    "MeasurementFrame",
    "NoiseSchedule",
    "OracleConfig",
    "OracleResult",
    "RunMetrics",
    "ScalingReport",
    "ScenarioConfig",
    "ScenarioError",
    "ScenarioResult",
    "SensorArray",
    "SensorCountError",
    "SensorRankError",
    "TrackerState",
    "Trajectory",
    "TrajectorySpec",
    "batch_least_squares",
    "benchmark_per_iteration",
    "check_tracking_conditions",
    "contraction_factor",
    "ctte",
    "direction_gram_min_eig",
    "distances_and_residuals",
    "emit",
    "estimate_strong_convexity_constants",
    "estimation_error_scaling",
    "fixed_trajectory",
    "growth_profile",
    "kappa",
    "load_config",
    "loss_gradient",
    "loss_gradient_hessian",
    "loss_hessian",
    "loss_value",
    "measure",
    "noise_cumulants",
    "noiseless_frame",
    "ogd_step",
    "ols_initialize",
    "onm_step",
    "path_length",
    "preset",
    "random_walk_trajectory",
    "rank_one_diff_min_eig",
    "run_monte_carlo",
    "run_single",
    "substream",
    "unit_diff_bound_holds",
    "validate_sensor_array",
    "verify_local_strong_convexity",
]
