"""Design problem definition, bound menus and the cost function."""

import math
from collections.abc import Mapping
from dataclasses import dataclass, field, replace

from relnet.network.models import Network
from relnet.reliability.feasibility import LogicSpec
from relnet.scenario import ScenarioSet
from relnet.solvers.milp import DEFAULT_NODE_LIMIT

DEFAULT_EDGE_CAPITAL_COST = 100.0
MENU_EXPANSION = 10.0


class DesignError(ValueError):
    """Raised when a design problem or design result is invalid."""

    pass


@dataclass(frozen=True)
class BoundMenu:
    """Allowed range for one designed upper bound (z̄_e or ū_n)."""

    lower: float
    upper: float

    def __post_init__(self):
        if not math.isfinite(self.upper):
            raise DesignError("bound menu upper value must be finite")
        if self.lower < 0 or self.lower > self.upper:
            raise DesignError(f"invalid bound menu [{self.lower}, {self.upper}]")


@dataclass(frozen=True)
class BoundMenus:
    """Bound menus keyed by edge id (flow) and by controllable node id (control)."""

    flow: dict[str, BoundMenu] = field(default_factory=dict)
    control: dict[str, BoundMenu] = field(default_factory=dict)


def default_bound_menus(network: Network, topology: bool = False) -> BoundMenus:
    """Menus [base, 10 x base] unless the network overrides them.

    Edges with unbounded capacity and no menu are not designed. Candidate edges
    only get a menu in topology mode.
    """
    flow: dict[str, BoundMenu] = {}
    for edge in network.edges:
        if edge.is_candidate and not topology:
            continue
        if edge.menu is not None:
            flow[edge.id] = BoundMenu(*edge.menu)
        elif math.isfinite(edge.flow_upper):
            base = edge.flow_upper
            flow[edge.id] = BoundMenu(base, MENU_EXPANSION * base)

    control: dict[str, BoundMenu] = {}
    for node in network.nodes:
        if not node.controllable:
            continue
        if node.menu is not None:
            control[node.id] = BoundMenu(*node.menu)
        elif math.isfinite(node.control_upper):
            base = node.control_upper
            control[node.id] = BoundMenu(base, MENU_EXPANSION * base)
    return BoundMenus(flow=flow, control=control)


def cost_of(
    v: Mapping[str, float],
    flow_caps: Mapping[str, float],
    control_caps: Mapping[str, float],
    edge_capital_cost: float | Mapping[str, float] = DEFAULT_EDGE_CAPITAL_COST,
    baseline_flow: Mapping[str, float] | None = None,
    baseline_control: Mapping[str, float] | None = None,
) -> float:
    """Σ capital·v + Σ (z̄ - baseline) + Σ (ū - baseline); baselines default to zero."""
    baseline_flow = baseline_flow or {}
    baseline_control = baseline_control or {}
    if isinstance(edge_capital_cost, Mapping):
        capital = sum(edge_capital_cost[e] * x for e, x in v.items())
    else:
        capital = edge_capital_cost * sum(v.values())
    flow = sum(cap - baseline_flow.get(e, 0.0) for e, cap in flow_caps.items())
    control = sum(cap - baseline_control.get(n, 0.0) for n, cap in control_caps.items())
    return float(capital + flow + control)


@dataclass(frozen=True, eq=False)
class DesignProblem:
    """Maximize reliability over (v, z̄, ū) subject to cost ≤ budget."""

    network: Network
    scenarios: ScenarioSet
    budget: float
    enable_topology: bool = False
    edge_capital_cost: float = DEFAULT_EDGE_CAPITAL_COST
    bound_menus: BoundMenus | None = None
    logic: LogicSpec = field(default_factory=LogicSpec)
    relaxed: bool = False
    node_limit: int = DEFAULT_NODE_LIMIT
    workers: int = 1

    def __post_init__(self):
        if not self.budget >= 0:
            raise DesignError(f"budget must be non-negative, got {self.budget}")
        if self.bound_menus is None:
            object.__setattr__(
                self, "bound_menus", default_bound_menus(self.network, self.enable_topology)
            )
        try:
            self.scenarios.check_dimensions(self.network)
        except ValueError as e:
            raise DesignError(str(e)) from e

        known_edges = set(self.network.edge_index)
        known_nodes = {n.id for n in self.network.nodes if n.controllable}
        for edge_id in self.bound_menus.flow:
            if edge_id not in known_edges:
                raise DesignError(f"bound menu for unknown edge '{edge_id}'")
        for node_id in self.bound_menus.control:
            if node_id not in known_nodes:
                raise DesignError(f"bound menu for unknown or uncontrolled node '{node_id}'")
        for edge in self.network.edges:
            if edge.flow_lower > 0:
                raise DesignError(f"edge '{edge.id}': design needs a zero flow lower bound")
        for node in self.network.nodes:
            if node.controllable and node.control_lower > 0:
                raise DesignError(f"node '{node.id}': design needs a zero control lower bound")
        for edge_id in self.candidate_ids:
            edge = self.network.edge(edge_id)
            if edge_id not in self.bound_menus.flow and not math.isfinite(edge.flow_upper):
                raise DesignError(f"candidate edge '{edge_id}' needs a finite capacity or menu")

    @property
    def candidate_ids(self) -> list[str]:
        """Candidates the design may buy; none in capacity-only mode."""
        if not self.enable_topology:
            return []
        return [e.id for e in self.network.candidate_edges]

    def capital_cost(self, edge_id: str) -> float:
        """Capital cost of buying `edge_id`; zero on the edge falls back to the default."""
        edge = self.network.edge(edge_id)
        return edge.capital_cost if edge.capital_cost > 0 else self.edge_capital_cost

    @property
    def baseline_flow(self) -> dict[str, float]:
        """Capacity already paid for: the menu lower values."""
        return {e: menu.lower for e, menu in self.bound_menus.flow.items()}

    @property
    def baseline_control(self) -> dict[str, float]:
        """Control capacity already paid for: the menu lower values."""
        return {n: menu.lower for n, menu in self.bound_menus.control.items()}

    def cost(
        self,
        chosen_edges: Mapping[str, float],
        flow_caps: Mapping[str, float],
        control_caps: Mapping[str, float],
    ) -> float:
        """Capital for bought candidates plus capacity above the baseline."""
        return cost_of(
            chosen_edges,
            flow_caps,
            control_caps,
            {e: self.capital_cost(e) for e in chosen_edges},
            self.baseline_flow,
            self.baseline_control,
        )

    def with_budget(self, budget: float) -> "DesignProblem":
        """Same problem with another budget."""
        return replace(self, budget=budget)

    def with_relaxed(self, relaxed: bool) -> "DesignProblem":
        """Same problem solved exactly or by LP relaxation."""
        return replace(self, relaxed=relaxed)
