"""
mcs-alloc - multi-task allocation for mobile crowd sensing.

Two regimes:
- FPMT (few participants, more tasks): each participant walks a route through q tasks;
  maximize accomplished tasks, minimize total distance (MT-MCMF, MTP-MCMF, MT-GrdPT)
- MPFT (more participants, few tasks): participants register working areas; minimize total
  incentive and total distance (W-ILP, C-ILP, W-Grd, C-Grd, Pareto sweeps)

Quick Start:
    from mcs_alloc import ScenarioConfig, generate_fpmt, enumerate_full, solve_mt_mcmf
    instance, _ = generate_fpmt(ScenarioConfig(seed=7, m=10, n=15, q=5))
    assignment = solve_mt_mcmf(instance, enumerate_full(instance))

CLI:
    mcs-alloc generate --mode fpmt --seed 7 -o inst.yaml
    mcs-alloc solve inst.yaml --solver mtp-mcmf --k 12
"""

__version__ = "0.1.0"

# Errors
from .errors import (
    AllocationError,
    ParameterError,
    ModeMismatchError,
    ConfigError,
    InstanceParseError,
    VersionError,
    InfeasibleError,
    InfeasibleBudgetError,
    NoCandidatesError,
    SizeLimitError,
    EnumerationBudgetError,
    SweepError,
)

# Geometry and routes
from .geo import CoordMode, Location, DistanceMatrix, distance, build_distance_matrix, centroid
from .tsp import (
    TspSolver,
    RouteProblem,
    Route,
    exact_open_path,
    christofides_open_path,
    solve_route,
)

# Optimization core
from .opt_core import (
    FlowNetwork,
    Flow,
    min_cost_flow,
    LinearProgram,
    Relation,
    LpStatus,
    simplex_solve,
    branch_and_bound,
)

# FPMT
from .fpmt import (
    Participant,
    Task,
    FpmtInstance,
    SolverSettings,
    TaskSetFamily,
    FpmtAssignment,
    FpmtMetrics,
    enumerate_full,
    enumerate_pruned,
    build_network,
    solve_mt_mcmf,
    solve_mtp_mcmf,
    solve_mt_grdpt,
    exact_oracle,
    assignment_metrics,
    find_appropriate_k,
)

# MPFT
from .mpft import (
    WorkingArea,
    MpftTask,
    MpftInstance,
    AllocationMatrix,
    ObjectiveBounds,
    ParetoPoint,
    SweepMode,
    compute_bounds,
    solve_w_ilp,
    solve_c_ilp,
    solve_w_grd,
    solve_c_grd,
    pareto_sweep,
    pareto_filter,
    weight_grid,
    budget_grid,
    exact_enum_oracle,
)

# Scenarios and experiments
from .scenario import (
    ProblemMode,
    TaskDistribution,
    BoundingBox,
    ScenarioConfig,
    generate_fpmt,
    generate_mpft,
    save_instance,
    load_instance,
    instance_digest,
    validate_instance,
    load_towers_csv,
)
from .experiment import RunReport, SolverParams, SweepSpec, run_solver, run_sweep, aggregate_rows

__all__ = [
    # Errors
    "AllocationError", "ParameterError", "ModeMismatchError", "ConfigError",
    "InstanceParseError", "VersionError", "InfeasibleError", "InfeasibleBudgetError",
    "NoCandidatesError", "SizeLimitError", "EnumerationBudgetError", "SweepError",
    # Geometry and routes
    "CoordMode", "Location", "DistanceMatrix", "distance", "build_distance_matrix", "centroid",
    "TspSolver", "RouteProblem", "Route", "exact_open_path", "christofides_open_path", "solve_route",
    # Optimization core
    "FlowNetwork", "Flow", "min_cost_flow", "LinearProgram", "Relation", "LpStatus",
    "simplex_solve", "branch_and_bound",
    # FPMT
    "Participant", "Task", "FpmtInstance", "SolverSettings", "TaskSetFamily", "FpmtAssignment",
    "FpmtMetrics", "enumerate_full", "enumerate_pruned", "build_network", "solve_mt_mcmf",
    "solve_mtp_mcmf", "solve_mt_grdpt", "exact_oracle", "assignment_metrics", "find_appropriate_k",
    # MPFT
    "WorkingArea", "MpftTask", "MpftInstance", "AllocationMatrix", "ObjectiveBounds",
    "ParetoPoint", "SweepMode", "compute_bounds", "solve_w_ilp", "solve_c_ilp", "solve_w_grd",
    "solve_c_grd", "pareto_sweep", "pareto_filter", "weight_grid", "budget_grid",
    "exact_enum_oracle",
    # Scenarios and experiments
    "ProblemMode", "TaskDistribution", "BoundingBox", "ScenarioConfig", "generate_fpmt",
    "generate_mpft", "save_instance", "load_instance", "instance_digest", "validate_instance",
    "load_towers_csv", "RunReport", "SolverParams", "SweepSpec", "run_solver", "run_sweep",
    "aggregate_rows",
]
