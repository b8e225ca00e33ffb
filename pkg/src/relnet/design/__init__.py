"""Design module - budget-constrained capacity and topology design."""

from relnet.design.pareto import (
    ParetoFrontier,
    ParetoPoint,
    active_difference,
    frontier_rows,
    pareto_sweep,
    write_pareto_csv,
)
from relnet.design.problem import (
    BoundMenu,
    BoundMenus,
    DesignError,
    DesignProblem,
    cost_of,
    default_bound_menus,
)
from relnet.design.solve import DesignResult, screen_patterns, solve_design

__all__ = [
    "BoundMenu",
    "BoundMenus",
    "DesignError",
    "DesignProblem",
    "DesignResult",
    "ParetoFrontier",
    "ParetoPoint",
    "active_difference",
    "cost_of",
    "default_bound_menus",
    "frontier_rows",
    "pareto_sweep",
    "screen_patterns",
    "solve_design",
    "write_pareto_csv",
]
