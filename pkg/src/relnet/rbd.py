"""Series/parallel reliability block diagrams: analytic value and graph compilation."""

import itertools
import math
from dataclasses import dataclass
from typing import Any

import networkx as nx
import structlog

from relnet.network.graph import ensure_valid, to_digraph
from relnet.network.io import SchemaError
from relnet.network.models import ALWAYS_ON, Bernoulli, Edge, Exponential, Network, Node, NodeRole

logger = structlog.get_logger()

# Generated node ids live under this prefix; components may not use it
RESERVED_PREFIX = "rbd:"
SOURCE_ID = f"{RESERVED_PREFIX}source"
SINK_ID = f"{RESERVED_PREFIX}sink"


@dataclass(frozen=True)
class Component:
    """A block that works with probability `reliability`."""

    id: str
    reliability: float
    mean_life: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.reliability <= 1.0:
            raise ValueError(f"component '{self.id}': reliability must lie in [0, 1]")
        if self.id.startswith(RESERVED_PREFIX):
            raise ValueError(
                f"component '{self.id}': ids starting with {RESERVED_PREFIX!r} are reserved"
            )


@dataclass(frozen=True)
class Series:
    children: tuple["RbdExpr", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("series block needs at least one child")


@dataclass(frozen=True)
class Parallel:
    children: tuple["RbdExpr", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("parallel block needs at least one child")


RbdExpr = Component | Series | Parallel


def eval_rbd(expr: RbdExpr) -> float:
    """Series multiplies reliabilities, parallel multiplies unreliabilities."""
    if isinstance(expr, Component):
        return expr.reliability
    values = [eval_rbd(child) for child in expr.children]
    if isinstance(expr, Series):
        return math.prod(values)
    return 1.0 - math.prod(1.0 - v for v in values)


def components(expr: RbdExpr) -> list[Component]:
    """Leaf components in left-to-right order."""
    if isinstance(expr, Component):
        return [expr]
    return [c for child in expr.children for c in components(child)]


class _Compiler:
    def __init__(self):
        self.nodes: list[Node] = []
        self.edges: list[Edge] = []
        self.junctions = 0

    def node(self, node: Node) -> str:
        self.nodes.append(node)
        return node.id

    def connect(self, tail: str, head: str) -> None:
        self.edges.append(Edge(id=f"e{len(self.edges) + 1}", tail=tail, head=head))

    def compile(self, expr: RbdExpr) -> tuple[str, str]:
        """Add the block's nodes and edges; return its (entry, exit) node ids."""
        if isinstance(expr, Component):
            lifetime = (
                Exponential(expr.mean_life)
                if expr.mean_life is not None
                else Bernoulli(expr.reliability)
            )
            node_id = self.node(Node(id=expr.id, role=NodeRole.RELAY, lifetime=lifetime))
            return node_id, node_id

        if len(expr.children) == 1:
            return self.compile(expr.children[0])

        if isinstance(expr, Series):
            entry, exit_ = self.compile(expr.children[0])
            for child in expr.children[1:]:
                child_entry, child_exit = self.compile(child)
                self.connect(exit_, child_entry)
                exit_ = child_exit
            return entry, exit_

        self.junctions += 1
        split = self.node(Node(id=f"{RESERVED_PREFIX}split_{self.junctions}", role=NodeRole.RELAY))
        merge = self.node(Node(id=f"{RESERVED_PREFIX}merge_{self.junctions}", role=NodeRole.RELAY))
        for child in expr.children:
            child_entry, child_exit = self.compile(child)
            self.connect(split, child_entry)
            self.connect(child_exit, merge)
        return split, merge


def rbd_to_network(expr: RbdExpr, name: str = "rbd") -> Network:
    """Single-source/single-sink graph: components become failing relay nodes.

    Parallel blocks fan out and merge through always-on junction relays. Edges,
    source and sink never fail and carry no capacity limit.
    """
    compiler = _Compiler()
    compiler.node(Node(id=SOURCE_ID, role=NodeRole.SOURCE, d=1.0, lifetime=ALWAYS_ON))
    entry, exit_ = compiler.compile(expr)
    compiler.node(Node(id=SINK_ID, role=NodeRole.SINK, d=-1.0, lifetime=ALWAYS_ON))
    compiler.connect(SOURCE_ID, entry)
    compiler.connect(exit_, SINK_ID)
    network = Network(name=name, nodes=tuple(compiler.nodes), edges=tuple(compiler.edges))
    logger.debug("Compiled block diagram", nodes=len(network.nodes), edges=len(network.edges))
    return ensure_valid(network)


def connectivity_probability(network: Network, threshold: float = 0.0) -> float:
    """Exact probability that every sink is reachable from a source over surviving nodes.

    Enumerates the states of the failing nodes; edges must never fail. Flow bounds are
    ignored, so this matches ψ only for uncapacitated networks.
    """
    if any(e.lifetime != ALWAYS_ON for e in network.edges):
        raise ValueError("connectivity_probability requires always-on edges")
    graph = to_digraph(network)
    survival = {n.id: n.lifetime.survival(threshold) for n in network.nodes}
    uncertain = [n for n, p in survival.items() if 0.0 < p < 1.0]
    dead = {n for n, p in survival.items() if p <= 0.0}
    sources = [n.id for n in network.sources]
    sinks = [n.id for n in network.sinks]

    total = 0.0
    for states in itertools.product((True, False), repeat=len(uncertain)):
        failed = dead | {n for n, alive in zip(uncertain, states) if not alive}
        weight = math.prod(
            survival[n] if alive else 1.0 - survival[n] for n, alive in zip(uncertain, states)
        )
        alive_graph = graph.subgraph(n for n in graph.nodes if n not in failed)
        live_sources = [s for s in sources if s in alive_graph]
        if all(
            t in alive_graph and any(nx.has_path(alive_graph, s, t) for s in live_sources)
            for t in sinks
        ) and len(live_sources) == len(sources):
            total += weight
    return total


def parse_rbd(data: Any, eval_time: float | None = None, path: str = "rbd") -> RbdExpr:
    """Nested JSON: {"series": [...]}, {"parallel": [...]} or {"component": {...}}.

    A component gives either "reliability" or "mean_life"; the latter is evaluated at
    its own "eval_time" or the inherited one.
    """
    if isinstance(data, dict) and "eval_time" in data and len(data) == 2:
        eval_time = float(data["eval_time"])
        data = {k: v for k, v in data.items() if k != "eval_time"}
    if not isinstance(data, dict) or len(data) != 1:
        raise SchemaError(path, "expected exactly one of series, parallel or component")

    kind, body = next(iter(data.items()))
    if kind in ("series", "parallel"):
        if not isinstance(body, list) or not body:
            raise SchemaError(f"{path}.{kind}", "expected a nonempty list")
        children = tuple(
            parse_rbd(child, eval_time, f"{path}.{kind}[{i}]") for i, child in enumerate(body)
        )
        return Series(children) if kind == "series" else Parallel(children)

    if kind != "component":
        raise SchemaError(path, f"unknown block {kind!r}")
    if not isinstance(body, dict) or "id" not in body:
        raise SchemaError(f"{path}.component", "missing field id")
    if str(body["id"]).startswith(RESERVED_PREFIX):
        raise SchemaError(f"{path}.component.id", f"prefix {RESERVED_PREFIX!r} is reserved")
    if "reliability" in body:
        return Component(id=str(body["id"]), reliability=float(body["reliability"]))
    if "mean_life" not in body:
        raise SchemaError(f"{path}.component", "needs reliability or mean_life")
    mean_life = float(body["mean_life"])
    t = body.get("eval_time", eval_time)
    if t is None:
        raise SchemaError(f"{path}.component.eval_time", "missing field")
    if not mean_life > 0:
        raise SchemaError(f"{path}.component.mean_life", "must be positive")
    return Component(
        id=str(body["id"]), reliability=math.exp(-float(t) / mean_life), mean_life=mean_life
    )


def rbd_eval_time(data: Any) -> float | None:
    """Top-level evaluation time of an RBD document, if it declares one."""
    if isinstance(data, dict) and "eval_time" in data:
        return float(data["eval_time"])
    return None
