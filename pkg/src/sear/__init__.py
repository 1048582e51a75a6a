"""Collision-free motion plans for labeled discs and balls via a lattice detour.

Typical use::

    from sear import SamplerParams, sample_instance, solve, PipelineConfig
    inst = sample_instance(SamplerParams(n=20, seed=1))
    plan, trace, metrics = solve(inst, PipelineConfig(grid="hex"))
"""
from .core import (Configuration, ContractError, MalformedPlanError, Metrics, Plan, ProblemInstance,
                   SchemaError, SearError, Trajectory, ValidationReport, Violation, evaluate_metrics,
                   lower_bound, validate_plan)
from .geometry import (InfeasibleDensityError, SamplerParams, min_enclosing_ball, min_pairwise_distance,
                       sample_instance)
from .grid import GridGraph, build_covering_grid, figure8_partition, make_grid
from .pipeline import (AssignmentConflictError, PipelineConfig, PipelineTrace, PlanValidationError, assign,
                       expand, resolve_lambda, shift, solve)
from .routing import (DiscreteInstance, DiscretePlan, RoutingError, discrete_to_continuous, get_router,
                      pad_with_virtual_robots, register_router, solve_optimal_bfs)
from .sag import solve_sag

__version__ = "0.1.0"

__all__ = [
    "AssignmentConflictError", "Configuration", "ContractError", "DiscreteInstance", "DiscretePlan",
    "GridGraph", "InfeasibleDensityError", "MalformedPlanError", "Metrics", "PipelineConfig",
    "PipelineTrace", "Plan", "PlanValidationError", "ProblemInstance", "RoutingError", "SamplerParams",
    "SchemaError", "SearError", "Trajectory", "ValidationReport", "Violation", "assign",
    "build_covering_grid", "discrete_to_continuous", "evaluate_metrics", "expand", "figure8_partition",
    "get_router", "lower_bound", "make_grid", "min_enclosing_ball", "min_pairwise_distance",
    "pad_with_virtual_robots", "register_router", "resolve_lambda", "sample_instance", "shift", "solve",
    "solve_optimal_bfs", "solve_sag", "validate_plan",
]
