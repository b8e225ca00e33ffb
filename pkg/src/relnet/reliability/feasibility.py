"""Per-scenario feasibility problems: does a flow exist that serves the terminals?"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import structlog

from relnet.network.models import Network
from relnet.scenario import Scenario, candidate_mask, effective_edge_mask, perturbed_incidence
from relnet.solvers.lp import LinearProgram, LpStatus, Relation, solve
from relnet.solvers.milp import DEFAULT_NODE_LIMIT, MipStatus, MixedIntegerProgram, solve_mip

logger = structlog.get_logger()

ROUND_TOL = 1e-6


class LogicMode(str, Enum):
    ALL_SINKS = "all_sinks"
    SUBSET_REACHABLE = "subset_reachable"


@dataclass(frozen=True)
class LogicSpec:
    """Which terminals must stay unrelaxed for a scenario to count as functional.

    ALL_SINKS requires every source and sink; SUBSET_REACHABLE requires only the
    listed sinks.
    """

    mode: LogicMode = LogicMode.ALL_SINKS
    required: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "mode", LogicMode(self.mode))
        object.__setattr__(self, "required", frozenset(self.required))
        if self.mode == LogicMode.SUBSET_REACHABLE and not self.required:
            raise ValueError("subset_reachable logic needs at least one required sink")

    @classmethod
    def all_sinks(cls) -> "LogicSpec":
        """Every source and sink is required."""
        return cls()

    @classmethod
    def subset(cls, sinks) -> "LogicSpec":
        """Only the given sinks are required."""
        return cls(LogicMode.SUBSET_REACHABLE, frozenset(sinks))

    def required_nodes(self, network: Network) -> list[str]:
        """Required terminal ids in network order."""
        if self.mode == LogicMode.ALL_SINKS:
            return [n.id for n in network.nodes if n.is_terminal]
        sinks = {n.id for n in network.sinks}
        unknown = sorted(self.required - sinks)
        if unknown:
            raise ValueError(f"required nodes are not sinks: {', '.join(unknown)}")
        return [n.id for n in network.sinks if n.id in self.required]

    def to_json(self) -> dict:
        """Mode and sorted required sinks."""
        return {"mode": self.mode.value, "required": sorted(self.required)}


@dataclass(frozen=True)
class FeasibilityOutcome:
    """Result of one ψ evaluation."""

    functional: bool
    y_values: dict[str, int]
    flows: dict[str, float] = field(default_factory=dict)
    controls: dict[str, float] = field(default_factory=dict)
    relaxed_y: dict[str, float] = field(default_factory=dict)

    def to_json(self, k: int) -> dict:
        """One outcomes JSONL record for scenario `k`."""
        return {"k": k, "functional": self.functional, "y": dict(self.y_values)}


@dataclass(frozen=True)
class FeasibilityLayout:
    """Column positions of the z, u and y variables in a feasibility program."""

    num_edges: int
    control_nodes: tuple[int, ...]
    y_groups: tuple[tuple[int, ...], ...]

    @property
    def u_offset(self) -> int:
        """First control column."""
        return self.num_edges

    @property
    def y_offset(self) -> int:
        """First indicator column."""
        return self.num_edges + len(self.control_nodes)

    def y_column(self, group: int) -> int:
        """Column of the indicator for `group`."""
        return self.y_offset + group


def rounding_rule(relaxed_y: float) -> int:
    """A relaxed indicator counts as relaxed (1) as soon as it is nonzero."""
    return 1 if relaxed_y > ROUND_TOL else 0


def build_feasibility_lp(
    network: Network,
    scenario: Scenario,
    y_groups: list[list[int]],
    y_weights: list[float],
    demands: np.ndarray | None = None,
    active_candidates: np.ndarray | None = None,
    unbounded_flows: bool = False,
) -> tuple[LinearProgram, FeasibilityLayout]:
    """Balance program  A(ξ) z + u - d∘y = -d  maximizing Σ w (1 - y) (constant dropped).

    Each entry of `y_groups` lists node indices sharing one indicator. Edges with a
    failed endpoint and inactive candidates are fixed at zero flow; failed nodes
    have their control fixed at zero.
    """
    n_nodes, n_edges = len(network.nodes), len(network.edges)
    d = np.array([n.d for n in network.nodes]) if demands is None else np.asarray(demands, float)

    alive_edges = effective_edge_mask(network, scenario)
    alive_edges = alive_edges * candidate_mask(network, active_candidates)
    matrix_a = perturbed_incidence(network, scenario, active_candidates) * alive_edges[None, :]
    xi_nodes = np.asarray(scenario.xi_nodes)

    controls = tuple(i for i, n in enumerate(network.nodes) if n.controllable)
    layout = FeasibilityLayout(n_edges, controls, tuple(tuple(g) for g in y_groups))
    width = layout.y_offset + len(y_groups)

    matrix = np.zeros((n_nodes, width))
    matrix[:, :n_edges] = matrix_a
    for c, i in enumerate(controls):
        matrix[i, layout.u_offset + c] = 1.0
    for g, members in enumerate(y_groups):
        for i in members:
            matrix[i, layout.y_column(g)] = -d[i]

    lower = np.zeros(width)
    upper = np.ones(width)
    for j, edge in enumerate(network.edges):
        if alive_edges[j]:
            lower[j] = 0.0 if unbounded_flows else edge.flow_lower
            upper[j] = math.inf if unbounded_flows else edge.flow_upper
        else:
            lower[j] = upper[j] = 0.0
    for c, i in enumerate(controls):
        node = network.nodes[i]
        col = layout.u_offset + c
        if xi_nodes[i]:
            lower[col], upper[col] = node.control_lower, node.control_upper
        else:
            lower[col] = upper[col] = 0.0

    objective = np.zeros(width)
    objective[layout.y_offset:] = -np.asarray(y_weights, dtype=float)

    lp = LinearProgram(
        objective=objective,
        matrix=matrix,
        relations=(Relation.EQ,) * n_nodes,
        rhs=-d,
        lower=lower,
        upper=upper,
    )
    return lp, layout


def _solve_program(
    lp: LinearProgram,
    binaries: list[int],
    use_milp: bool,
    node_limit: int,
) -> np.ndarray | None:
    """Primal vector of the optimum, or None when even full relaxation is infeasible."""
    if use_milp and binaries:
        solution = solve_mip(MixedIntegerProgram(lp, tuple(binaries)), node_limit=node_limit)
        return solution.primal if solution.status == MipStatus.OPTIMAL else None
    solution = solve(lp)
    return solution.primal if solution.status == LpStatus.OPTIMAL else None


def _outcome(
    network: Network,
    layout: FeasibilityLayout,
    primal: np.ndarray | None,
    group_of: dict[str, int],
    required: list[str],
) -> FeasibilityOutcome:
    if primal is None:
        return FeasibilityOutcome(
            functional=False,
            y_values={node_id: 1 for node_id in group_of},
            relaxed_y={node_id: 1.0 for node_id in group_of},
        )
    relaxed_y = {
        node_id: float(primal[layout.y_column(g)]) for node_id, g in group_of.items()
    }
    y_values = {node_id: rounding_rule(value) for node_id, value in relaxed_y.items()}
    return FeasibilityOutcome(
        functional=all(y_values[node_id] == 0 for node_id in required),
        y_values=y_values,
        flows={e.id: float(primal[j]) for j, e in enumerate(network.edges)},
        controls={
            network.nodes[i].id: float(primal[layout.u_offset + c])
            for c, i in enumerate(layout.control_nodes)
        },
        relaxed_y=relaxed_y,
    )


def psi_single(network: Network, scenario: Scenario, use_milp: bool = False) -> FeasibilityOutcome:
    """Single source/sink ψ with one shared indicator and unit flows.

    Flow upper bounds are dropped, so the LP relaxation already returns y in {0, 1}.
    """
    if len(network.sources) != 1:
        raise ValueError(f"psi_single requires exactly one source node, got {len(network.sources)}")
    if len(network.sinks) != 1:
        raise ValueError(f"psi_single requires exactly one sink node, got {len(network.sinks)}")
    controlled = [n.id for n in network.nodes if n.controllable]
    if controlled:
        raise ValueError(f"psi_single requires no controllable nodes: {', '.join(controlled)}")

    index = network.node_index
    source, sink = index[network.sources[0].id], index[network.sinks[0].id]
    demands = np.zeros(len(network.nodes))
    demands[source], demands[sink] = 1.0, -1.0

    lp, layout = build_feasibility_lp(
        network, scenario, [[source, sink]], [1.0], demands=demands, unbounded_flows=True
    )
    primal = _solve_program(lp, [layout.y_column(0)], use_milp, DEFAULT_NODE_LIMIT)
    group_of = {network.nodes[source].id: 0, network.nodes[sink].id: 0}
    return _outcome(network, layout, primal, group_of, list(group_of))


def psi_general(
    network: Network,
    scenario: Scenario,
    logic: LogicSpec | None = None,
    use_milp: bool = False,
    active_candidates: np.ndarray | None = None,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> FeasibilityOutcome:
    """Multi-source/sink ψ with one indicator per terminal node.

    Required terminals carry binary indicators weighted 1 + (number of optional
    terminals); optional terminals carry continuous indicators of weight 1.
    """
    logic = logic or LogicSpec()
    required = logic.required_nodes(network)
    terminals = [i for i, n in enumerate(network.nodes) if n.is_terminal]
    optional = len(terminals) - len(required)
    required_set = set(required)

    groups = [[i] for i in terminals]
    weights = [
        1.0 + optional if network.nodes[i].id in required_set else 1.0 for i in terminals
    ]
    lp, layout = build_feasibility_lp(
        network, scenario, groups, weights, active_candidates=active_candidates
    )
    binaries = [
        layout.y_column(g) for g, i in enumerate(terminals) if network.nodes[i].id in required_set
    ]
    primal = _solve_program(lp, binaries, use_milp, node_limit)
    group_of = {network.nodes[i].id: g for g, i in enumerate(terminals)}
    return _outcome(network, layout, primal, group_of, required)

