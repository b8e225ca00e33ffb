"""Best-bound branch-and-bound over binary variables."""

import heapq
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import structlog

from relnet.solvers.lp import (
    ITERATION_FACTOR,
    LinearProgram,
    LpSolution,
    LpStatus,
    SolverLimitError,
    check_solution,
    solve,
)

logger = structlog.get_logger()

INT_TOL = 1e-6
GAP_TOL = 1e-9
DEFAULT_NODE_LIMIT = 20000


class MipStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class MixedIntegerProgram:
    """A LinearProgram whose `binary_vars` must take values in {0, 1}."""

    lp: LinearProgram
    binary_vars: tuple[int, ...]

    def __post_init__(self):
        binaries = tuple(sorted(set(int(j) for j in self.binary_vars)))
        for j in binaries:
            if not 0 <= j < self.lp.num_vars:
                raise ValueError(f"binary index {j} out of range")
            if self.lp.lower[j] < 0 or self.lp.upper[j] > 1:
                raise ValueError(f"binary variable {j} must have bounds within [0, 1]")
        object.__setattr__(self, "binary_vars", binaries)


@dataclass(frozen=True, eq=False)
class MipSolution:
    status: MipStatus
    objective_value: float
    primal: np.ndarray
    nodes_explored: int
    node_bounds: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    @property
    def is_optimal(self) -> bool:
        """Whether an optimal integral solution was proven."""
        return self.status == MipStatus.OPTIMAL


class NodeLimitError(SolverLimitError):
    """Raised when branch-and-bound exceeds its node limit; carries the incumbent."""

    def __init__(self, nodes: int, incumbent: MipSolution | None):
        self.nodes = nodes
        self.incumbent = incumbent
        found = "with" if incumbent is not None else "without"
        super().__init__(f"Node limit reached after {nodes} nodes ({found} incumbent)")

    def __reduce__(self):
        return type(self), (self.nodes, self.incumbent)


@dataclass(order=True)
class _Node:
    priority: float
    seq: int
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    parent_bound: float = field(compare=False)


def _polish(mip: MixedIntegerProgram, primal: np.ndarray, iteration_factor: int):
    """Snap binaries and re-solve the continuous part with them fixed."""
    binaries = list(mip.binary_vars)
    snapped = np.round(primal[binaries])
    lower, upper = mip.lp.lower.copy(), mip.lp.upper.copy()
    lower[binaries] = snapped
    upper[binaries] = snapped
    fixed = solve(mip.lp.with_bounds(lower, upper), iteration_factor)
    if fixed.status != LpStatus.OPTIMAL:
        values = primal.copy()
        values[binaries] = snapped
        return values, float(mip.lp.objective @ values)
    values = fixed.primal.copy()
    values[binaries] = snapped
    return values, float(mip.lp.objective @ values)


def _pruned(bound: float, best_value: float) -> bool:
    """A node cannot beat the incumbent by more than the relative gap."""
    if best_value == -math.inf:
        return False
    return bound <= best_value + GAP_TOL * max(1.0, abs(best_value))


def _accepts(mip: MixedIntegerProgram, primal: np.ndarray) -> bool:
    binaries = list(mip.binary_vars)
    if np.any(np.abs(primal[binaries] - np.round(primal[binaries])) > INT_TOL):
        return False
    candidate = LpSolution(LpStatus.OPTIMAL, float(mip.lp.objective @ primal), primal, 0)
    return not check_solution(mip.lp, candidate)


def solve_mip(
    mip: MixedIntegerProgram,
    node_limit: int = DEFAULT_NODE_LIMIT,
    incumbent: np.ndarray | None = None,
    iteration_factor: int = ITERATION_FACTOR,
) -> MipSolution:
    """Maximize over binary assignments by best-bound branch-and-bound.

    `incumbent` is an optional feasible primal vector used as the starting incumbent.
    """
    lp = mip.lp
    binaries = np.array(mip.binary_vars, dtype=int)

    best_value = -math.inf
    best_primal: np.ndarray | None = None
    if incumbent is not None:
        incumbent = np.asarray(incumbent, dtype=float)
        if incumbent.shape == (lp.num_vars,) and _accepts(mip, incumbent):
            best_primal, best_value = incumbent.copy(), float(lp.objective @ incumbent)
            logger.debug("Warm start accepted", objective=best_value)

    seq = itertools.count()
    heap = [_Node(-math.inf, next(seq), lp.lower.copy(), lp.upper.copy(), math.inf)]
    nodes = 0
    bounds_seen: list[tuple[float, float]] = []

    def current_incumbent() -> MipSolution | None:
        if best_primal is None:
            return None
        return MipSolution(MipStatus.OPTIMAL, best_value, best_primal, nodes, tuple(bounds_seen))

    while heap:
        node = heapq.heappop(heap)
        if _pruned(node.parent_bound, best_value):
            continue

        if nodes >= node_limit:
            raise NodeLimitError(nodes, current_incumbent())
        nodes += 1

        relaxation = solve(lp.with_bounds(node.lower, node.upper), iteration_factor)
        if relaxation.status == LpStatus.INFEASIBLE:
            continue
        if relaxation.status == LpStatus.UNBOUNDED:
            raise ValueError("MILP relaxation is unbounded")

        bound = min(relaxation.objective_value, node.parent_bound)
        bounds_seen.append((bound, node.parent_bound))
        if _pruned(bound, best_value):
            continue

        values = relaxation.primal
        if binaries.size:
            fractionality = np.abs(values[binaries] - np.round(values[binaries]))
        else:
            fractionality = np.zeros(0)

        if fractionality.size == 0 or fractionality.max() <= INT_TOL:
            primal, value = _polish(mip, values, iteration_factor)
            if value > best_value:
                best_value, best_primal = value, primal
                logger.debug("New incumbent", objective=value, nodes=nodes)
            continue

        # Most fractional binary; argmax keeps the lowest index on ties
        branch = int(binaries[int(np.argmax(fractionality))])

        down_upper = node.upper.copy()
        down_upper[branch] = 0.0
        up_lower = node.lower.copy()
        up_lower[branch] = 1.0
        heapq.heappush(heap, _Node(-bound, next(seq), node.lower.copy(), down_upper, bound))
        heapq.heappush(heap, _Node(-bound, next(seq), up_lower, node.upper.copy(), bound))

    logger.debug("Branch-and-bound finished", nodes=nodes, objective=best_value)
    if best_primal is None:
        return MipSolution(
            MipStatus.INFEASIBLE,
            math.nan,
            np.full(lp.num_vars, math.nan),
            nodes,
            tuple(bounds_seen),
        )
    return MipSolution(MipStatus.OPTIMAL, best_value, best_primal, nodes, tuple(bounds_seen))
