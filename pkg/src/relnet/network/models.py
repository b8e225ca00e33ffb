"""Network data model: node roles, lifetimes, nodes, edges and networks."""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property


class NodeRole(str, Enum):
    """Role of a node in the flow balance."""

    SOURCE = "source"
    SINK = "sink"
    RELAY = "relay"


@dataclass(frozen=True)
class Exponential:
    """Exponentially distributed lifetime in years."""

    mean: float

    def survival(self, t: float) -> float:
        """P(T > t)."""
        return math.exp(-t / self.mean)


@dataclass(frozen=True)
class AlwaysOn:
    """Component that never fails."""

    def survival(self, t: float) -> float:
        return 1.0


@dataclass(frozen=True)
class Bernoulli:
    """Survives with a fixed probability, independent of time."""

    survive_prob: float

    def survival(self, t: float) -> float:
        return self.survive_prob


Lifetime = Exponential | AlwaysOn | Bernoulli

ALWAYS_ON = AlwaysOn()


@dataclass(frozen=True)
class Node:
    """A network node.

    `control` is the box (lower, upper) for the controllable injection u_n, or None
    when the node has no control. `menu` optionally overrides the design range of
    the control upper bound.
    """

    id: str
    role: NodeRole
    d: float = 0.0
    control: tuple[float, float] | None = None
    lifetime: Lifetime = ALWAYS_ON
    menu: tuple[float, float] | None = None

    @property
    def controllable(self) -> bool:
        """Whether the node has a control variable u_n."""
        return self.control is not None

    @property
    def control_lower(self) -> float:
        """Lower supply bound, 0 without a control range."""
        return self.control[0] if self.control else 0.0

    @property
    def control_upper(self) -> float:
        """Upper supply bound, 0 without a control range."""
        return self.control[1] if self.control else 0.0

    @property
    def is_terminal(self) -> bool:
        """Source or sink node (carries a relaxation indicator)."""
        return self.role in (NodeRole.SOURCE, NodeRole.SINK)


@dataclass(frozen=True)
class Edge:
    """A directed edge from `tail` to `head` with flow box [flow_lower, flow_upper]."""

    id: str
    tail: str
    head: str
    flow_lower: float = 0.0
    flow_upper: float = math.inf
    lifetime: Lifetime = ALWAYS_ON
    is_candidate: bool = False
    capital_cost: float = 0.0
    menu: tuple[float, float] | None = None


@dataclass(frozen=True)
class Network:
    """Immutable directed network. Matrix indices follow the order of `nodes` and `edges`."""

    name: str
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        # Accept lists from callers but store tuples
        if not isinstance(self.nodes, tuple):
            object.__setattr__(self, "nodes", tuple(self.nodes))
        if not isinstance(self.edges, tuple):
            object.__setattr__(self, "edges", tuple(self.edges))

    @cached_property
    def node_index(self) -> dict[str, int]:
        """Node id to row index."""
        return {node.id: i for i, node in enumerate(self.nodes)}

    @cached_property
    def edge_index(self) -> dict[str, int]:
        """Edge id to column index."""
        return {edge.id: j for j, edge in enumerate(self.edges)}

    def node(self, node_id: str) -> Node:
        """Node by id; raises KeyError when absent."""
        return self.nodes[self.node_index[node_id]]

    def edge(self, edge_id: str) -> Edge:
        """Edge by id; raises KeyError when absent."""
        return self.edges[self.edge_index[edge_id]]

    def nodes_with_role(self, role: NodeRole) -> list[Node]:
        """Nodes with `role` in network order."""
        return [n for n in self.nodes if n.role == role]

    @property
    def sources(self) -> list[Node]:
        """Source nodes in network order."""
        return self.nodes_with_role(NodeRole.SOURCE)

    @property
    def sinks(self) -> list[Node]:
        """Sink nodes in network order."""
        return self.nodes_with_role(NodeRole.SINK)

    @property
    def candidate_edges(self) -> list[Edge]:
        """Purchasable edges in network order."""
        return [e for e in self.edges if e.is_candidate]

    def __len__(self) -> int:
        return len(self.nodes)
