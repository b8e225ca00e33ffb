"""JSON reading and writing of networks."""

import json
import math
from dataclasses import replace
from pathlib import Path
from typing import Any

import structlog

from relnet.network.graph import ensure_valid, unreachable_sinks
from relnet.network.models import (
    ALWAYS_ON,
    AlwaysOn,
    Bernoulli,
    Edge,
    Exponential,
    Lifetime,
    Network,
    Node,
    NodeRole,
)

logger = structlog.get_logger()


class SchemaError(ValueError):
    """Raised when a JSON document does not follow the expected schema."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")

    def __reduce__(self):
        return type(self), (self.path, self.message)


def _number(value: Any, path: str, allow_none: bool = False) -> float:
    if value is None and allow_none:
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {value!r}")
    return float(value)


def _require(data: dict, key: str, path: str) -> Any:
    if not isinstance(data, dict):
        raise SchemaError(path, "expected an object")
    if key not in data:
        raise SchemaError(f"{path}.{key}", "missing field")
    return data[key]


def parse_lifetime(data: Any, path: str) -> Lifetime:
    """Lifetime from "always_on", an exponential mean or a Bernoulli p; None is always on."""
    if data is None or data == "always_on":
        return ALWAYS_ON
    if isinstance(data, dict) and len(data) == 1:
        kind, params = next(iter(data.items()))
        if kind == "exponential":
            return Exponential(mean=_number(_require(params, "mean", f"{path}.exponential"),
                                            f"{path}.exponential.mean"))
        if kind == "bernoulli":
            return Bernoulli(survive_prob=_number(_require(params, "p", f"{path}.bernoulli"),
                                                  f"{path}.bernoulli.p"))
    raise SchemaError(path, f"unknown lifetime {data!r}")


def lifetime_to_json(lifetime: Lifetime) -> Any:
    """Inverse of parse_lifetime."""
    if isinstance(lifetime, Exponential):
        return {"exponential": {"mean": lifetime.mean}}
    if isinstance(lifetime, Bernoulli):
        return {"bernoulli": {"p": lifetime.survive_prob}}
    return "always_on"


def _parse_box(data: Any, path: str) -> tuple[float, float] | None:
    if data is None:
        return None
    lower = _number(_require(data, "lower", path), f"{path}.lower")
    upper = _number(_require(data, "upper", path), f"{path}.upper", allow_none=True)
    return lower, upper


def _box_to_json(box: tuple[float, float] | None) -> dict | None:
    if box is None:
        return None
    lower, upper = box
    return {"lower": lower, "upper": None if math.isinf(upper) else upper}


def parse_node(data: dict, path: str) -> Node:
    """One node entry; `path` prefixes schema error locations."""
    role = _require(data, "role", path)
    try:
        role = NodeRole(role)
    except ValueError:
        raise SchemaError(f"{path}.role", f"unknown role {role!r}") from None
    return Node(
        id=str(_require(data, "id", path)),
        role=role,
        d=_number(data.get("d", 0.0), f"{path}.d"),
        control=_parse_box(data.get("control"), f"{path}.control"),
        lifetime=parse_lifetime(data.get("lifetime"), f"{path}.lifetime"),
        menu=_parse_box(data.get("menu"), f"{path}.menu"),
    )


def parse_edge(data: dict, path: str) -> Edge:
    """One edge entry; a missing flow box means [0, unbounded]."""
    flow = _parse_box(data.get("flow", {"lower": 0.0, "upper": None}), f"{path}.flow")
    candidate = data.get("candidate", False)
    if not isinstance(candidate, bool):
        raise SchemaError(f"{path}.candidate", "expected a boolean")
    return Edge(
        id=str(_require(data, "id", path)),
        tail=str(_require(data, "tail", path)),
        head=str(_require(data, "head", path)),
        flow_lower=flow[0],
        flow_upper=flow[1],
        lifetime=parse_lifetime(data.get("lifetime"), f"{path}.lifetime"),
        is_candidate=candidate,
        capital_cost=_number(data.get("capital_cost", 0.0), f"{path}.capital_cost"),
        menu=_parse_box(data.get("menu"), f"{path}.menu"),
    )


def _default_flows(nodes: list[Node], missing: list[bool]) -> list[Node]:
    """Default d for nodes that omit it: +1 per uncontrolled source, sinks split the total."""
    supplied = [
        i for i, n in enumerate(nodes)
        if missing[i] and n.role == NodeRole.SOURCE and not n.controllable
    ]
    for i in supplied:
        nodes[i] = replace(nodes[i], d=1.0)
    sinks = [i for i, n in enumerate(nodes) if missing[i] and n.role == NodeRole.SINK]
    share = len(supplied) / len(sinks) if sinks and supplied else 1.0
    for i in sinks:
        nodes[i] = replace(nodes[i], d=-share)
    return nodes


def parse_network(data: dict) -> Network:
    """Build and validate a Network from its JSON document."""
    nodes = _require(data, "nodes", "network")
    edges = _require(data, "edges", "network")
    if not isinstance(nodes, list):
        raise SchemaError("nodes", "expected a list")
    if not isinstance(edges, list):
        raise SchemaError("edges", "expected a list")

    parsed = [parse_node(n, f"nodes[{i}]") for i, n in enumerate(nodes)]
    parsed = _default_flows(parsed, [isinstance(n, dict) and "d" not in n for n in nodes])
    network = Network(
        name=str(data.get("name", "network")),
        nodes=tuple(parsed),
        edges=tuple(parse_edge(e, f"edges[{j}]") for j, e in enumerate(edges)),
        metadata={k: v for k, v in data.items() if k not in ("name", "nodes", "edges")},
    )
    return ensure_valid(network)


def network_to_dict(network: Network) -> dict:
    """JSON document for `network`; metadata keys are written back at the top level."""
    nodes = []
    for node in network.nodes:
        entry = {
            "id": node.id,
            "role": node.role.value,
            "d": node.d,
            "control": _box_to_json(node.control),
            "lifetime": lifetime_to_json(node.lifetime),
        }
        if node.menu is not None:
            entry["menu"] = _box_to_json(node.menu)
        nodes.append(entry)

    edges = []
    for edge in network.edges:
        entry = {
            "id": edge.id,
            "tail": edge.tail,
            "head": edge.head,
            "flow": _box_to_json((edge.flow_lower, edge.flow_upper)),
            "lifetime": lifetime_to_json(edge.lifetime),
            "candidate": edge.is_candidate,
            "capital_cost": edge.capital_cost,
        }
        if edge.menu is not None:
            entry["menu"] = _box_to_json(edge.menu)
        edges.append(entry)

    return {"name": network.name, **network.metadata, "nodes": nodes, "edges": edges}


def load_json(path: str | Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(str(path), f"invalid JSON ({e.msg} at line {e.lineno})") from e


def load_network(path: str | Path) -> Network:
    """Read, parse and validate a network JSON file."""
    network = parse_network(load_json(path))
    orphans = unreachable_sinks(network)
    if orphans:
        logger.warning("Sinks unreachable in intact network", network=network.name, sinks=orphans)
    logger.info(
        "Loaded network",
        network=network.name,
        nodes=len(network.nodes),
        edges=len(network.edges),
        candidates=len(network.candidate_edges),
    )
    return network


def save_network(network: Network, path: str | Path) -> None:
    """Write `network` as indented JSON, creating parent directories."""
    write_json(network_to_dict(network), path)


def write_json(data: Any, path: str | Path) -> None:
    """Write JSON with stable key order and LF line endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(data, f, indent=2)
        f.write("\n")
