"""Incidence matrices, validation and candidate-edge expansion."""

from collections import Counter
from dataclasses import replace

import networkx as nx
import numpy as np
import structlog

from relnet.network.models import Bernoulli, Edge, Exponential, Network, NodeRole

logger = structlog.get_logger()


class NetworkValidationError(ValueError):
    """Raised when a network violates its structural invariants."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))

    def __reduce__(self):
        return type(self), (self.violations,)


def incidence(network: Network) -> np.ndarray:
    """Dense |N| x |E| incidence matrix: +1 where the edge enters the node, -1 where it leaves."""
    index = network.node_index
    matrix = np.zeros((len(network.nodes), len(network.edges)))
    for j, edge in enumerate(network.edges):
        matrix[index[edge.head], j] = 1.0
        matrix[index[edge.tail], j] = -1.0
    return matrix


def _lifetime_violations(owner: str, lifetime) -> list[str]:
    if isinstance(lifetime, Exponential) and not lifetime.mean > 0:
        return [f"{owner}: exponential mean must be positive"]
    if isinstance(lifetime, Bernoulli) and not 0.0 <= lifetime.survive_prob <= 1.0:
        return [f"{owner}: survival probability must lie in [0, 1]"]
    return []


def validate(network: Network) -> list[str]:
    """Return every invariant violation of `network`; an empty list means valid."""
    violations: list[str] = []

    for node_id, count in Counter(n.id for n in network.nodes).items():
        if count > 1:
            violations.append(f"duplicate node id '{node_id}'")
    for edge_id, count in Counter(e.id for e in network.edges).items():
        if count > 1:
            violations.append(f"duplicate edge id '{edge_id}'")

    for node in network.nodes:
        owner = f"node '{node.id}'"
        if node.role == NodeRole.SINK and not node.d < 0:
            violations.append(f"{owner}: sink flow must be negative")
        elif node.role == NodeRole.RELAY and node.d != 0:
            violations.append(f"{owner}: relay flow must be zero")
        elif node.role == NodeRole.SOURCE:
            if node.d < 0:
                violations.append(f"{owner}: source flow must be positive")
            elif node.d == 0 and not node.controllable:
                violations.append(f"{owner}: source needs positive flow or a control")
        if node.controllable:
            lower, upper = node.control
            if lower < 0:
                violations.append(f"{owner}: controls must be non-negative")
            if lower > upper:
                violations.append(f"{owner}: control lower bound exceeds upper bound")
        violations.extend(_lifetime_violations(owner, node.lifetime))

    node_ids = {n.id for n in network.nodes}
    for edge in network.edges:
        owner = f"edge '{edge.id}'"
        for end in ("tail", "head"):
            if getattr(edge, end) not in node_ids:
                violations.append(f"{owner}: {end} '{getattr(edge, end)}' does not exist")
        if edge.tail == edge.head:
            violations.append(f"{owner}: self-loop")
        if edge.flow_lower < 0:
            violations.append(f"{owner}: flow lower bound must be non-negative")
        if edge.flow_lower > edge.flow_upper:
            violations.append(f"{owner}: flow lower bound exceeds upper bound")
        if edge.capital_cost < 0:
            violations.append(f"{owner}: capital cost must be non-negative")
        if not edge.is_candidate and edge.capital_cost != 0:
            violations.append(f"{owner}: non-candidate edge must have zero capital cost")
        violations.extend(_lifetime_violations(owner, edge.lifetime))

    if not network.sources:
        violations.append("no source nodes")
    if not network.sinks:
        violations.append("no sink nodes")

    return violations


def ensure_valid(network: Network) -> Network:
    """Return `network` unchanged, or raise NetworkValidationError listing its violations."""
    violations = validate(network)
    if violations:
        raise NetworkValidationError(violations)
    return network


def with_candidates(network: Network, candidates: list[Edge]) -> Network:
    """Expanded network E ∪ Ê; the added edges are flagged as candidates."""
    existing = {e.id for e in network.edges}
    duplicates = [c.id for c in candidates if c.id in existing]
    seen: set[str] = set()
    for c in candidates:
        if c.id in seen:
            duplicates.append(c.id)
        seen.add(c.id)
    if duplicates:
        raise NetworkValidationError(
            [f"candidate edge id '{edge_id}' already exists" for edge_id in duplicates]
        )

    flagged = tuple(replace(c, is_candidate=True) for c in candidates)
    expanded = replace(network, edges=network.edges + flagged)
    logger.debug("Expanded network", network=network.name, candidates=len(flagged))
    return expanded


def promote_to_candidates(network: Network, capital_cost: float = 100.0) -> Network:
    """Treat every edge as a purchasable candidate with the given capital cost."""
    edges = tuple(
        replace(
            e,
            is_candidate=True,
            capital_cost=e.capital_cost if e.is_candidate else capital_cost,
        )
        for e in network.edges
    )
    return replace(network, edges=edges)


def to_digraph(network: Network) -> nx.DiGraph:
    """networkx view of the network with role and edge-id attributes."""
    graph = nx.DiGraph(name=network.name)
    for node in network.nodes:
        graph.add_node(node.id, role=node.role.value)
    for edge in network.edges:
        graph.add_edge(edge.tail, edge.head, id=edge.id)
    return graph


def unreachable_sinks(network: Network) -> list[str]:
    """Sinks with no directed path from any source in the intact network."""
    graph = to_digraph(network)
    reachable: set[str] = set()
    for source in network.sources:
        reachable |= nx.descendants(graph, source.id) | {source.id}
    return [s.id for s in network.sinks if s.id not in reachable]
