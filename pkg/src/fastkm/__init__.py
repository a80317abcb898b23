"""Fast Krasnoselskii-Mann iterations, preconditioned splittings and diagnostics."""

from .diagnostics import (
    IterationTrace,
    LyapunovState,
    explicit_residual_bound,
    gap_function,
    lyapunov_energy,
    primal_dual_gap,
    rate_slope,
    residual,
)
from .exceptions import ConfigError, HistoryError, ParameterError, ParameterWarning, ShapeError
from .iteration import (
    HalpernForm,
    ScheduleParams,
    TranDinhParams,
    cooling_alpha,
    run_anchored_halpern,
    run_fast_km,
    run_km,
    run_trandinh_direct,
    schedule_coeffs,
    theta_from_eta,
    trandinh_map,
)
from .operators import (
    FunctionMap,
    LinearMap,
    MatrixMap,
    NonexpansiveOp,
    averaged_map,
    dot,
    estimate_operator_norm,
    group_soft_threshold,
    norm,
    project_ball,
    prox_half_sq_dist,
    skew_resolvent_op,
    soft_threshold,
)
from .precond import (
    GraphDrsSpec,
    PdhgProblem,
    ResolventSystem,
    build_drs,
    build_graph_drs,
    build_pdhg,
    moreau_prox_conjugate,
    path_graph_Z,
    run_fast_ppp,
    variance,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "HistoryError",
    "ParameterError",
    "ParameterWarning",
    "ShapeError",
    "IterationTrace",
    "LyapunovState",
    "explicit_residual_bound",
    "gap_function",
    "lyapunov_energy",
    "primal_dual_gap",
    "rate_slope",
    "residual",
    "HalpernForm",
    "ScheduleParams",
    "TranDinhParams",
    "cooling_alpha",
    "run_anchored_halpern",
    "run_fast_km",
    "run_km",
    "run_trandinh_direct",
    "schedule_coeffs",
    "theta_from_eta",
    "trandinh_map",
    "FunctionMap",
    "LinearMap",
    "MatrixMap",
    "NonexpansiveOp",
    "averaged_map",
    "dot",
    "estimate_operator_norm",
    "group_soft_threshold",
    "norm",
    "project_ball",
    "prox_half_sq_dist",
    "skew_resolvent_op",
    "soft_threshold",
    "GraphDrsSpec",
    "PdhgProblem",
    "ResolventSystem",
    "build_drs",
    "build_graph_drs",
    "build_pdhg",
    "moreau_prox_conjugate",
    "path_graph_Z",
    "run_fast_ppp",
    "variance",
]
