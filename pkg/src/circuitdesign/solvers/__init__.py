"""Mixed-integer search over circuit designs."""

from .exhaustive import enumerate_designs, enumeration_size, exhaustive_search
from .problem import (
    Band,
    CachedObjective,
    ProblemSpec,
    SearchRun,
    SolverReport,
    evaluate_design,
)
from .refine import RefineConfig, local_refine
from .scatter import ScatterConfig, scatter_search
from .tabu import TabuConfig, tabu_search

SOLVERS = {"tabu": tabu_search, "scatter": scatter_search}
SOLVER_CONFIGS = {"tabu": TabuConfig, "scatter": ScatterConfig}

__all__ = [
    "Band",
    "CachedObjective",
    "ProblemSpec",
    "RefineConfig",
    "SOLVERS",
    "SOLVER_CONFIGS",
    "ScatterConfig",
    "SearchRun",
    "SolverReport",
    "TabuConfig",
    "enumerate_designs",
    "enumeration_size",
    "evaluate_design",
    "exhaustive_search",
    "local_refine",
    "scatter_search",
    "tabu_search",
]
