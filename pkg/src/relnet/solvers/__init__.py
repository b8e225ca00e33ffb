"""Solvers module - bounded-variable simplex and branch-and-bound."""

from relnet.solvers.lp import (
    IterationLimitError,
    LinearProgram,
    LpSolution,
    LpStatus,
    Relation,
    SolverLimitError,
    check_solution,
    dump_lp,
    solve,
)
from relnet.solvers.milp import (
    MipSolution,
    MipStatus,
    MixedIntegerProgram,
    NodeLimitError,
    solve_mip,
)

__all__ = [
    "IterationLimitError",
    "LinearProgram",
    "LpSolution",
    "LpStatus",
    "MipSolution",
    "MipStatus",
    "MixedIntegerProgram",
    "NodeLimitError",
    "Relation",
    "SolverLimitError",
    "check_solution",
    "dump_lp",
    "solve",
    "solve_mip",
]
