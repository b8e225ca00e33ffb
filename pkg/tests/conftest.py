"""Shared fixtures: small hand-built networks and the bundled data files."""

import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from relnet.network.io import load_network
from relnet.network.models import ALWAYS_ON, Bernoulli, Edge, Exponential, Network, Node, NodeRole
from relnet.scenario import Scenario

ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = ROOT / "data"

PUMP_RELIABILITY = 0.896643

# 3node at t = 5: all nodes alive, and each base line alive
THREE_NODE_NODES_ALIVE = math.exp(-5 / 80 - 3 * 5 / 50)
LINE_ALIVE = {
    line: math.exp(-5 / mean)
    for line, mean in {"l1": 20, "l12": 80, "l12b": 100, "l13": 30, "l23": 100}.items()
}


def _alive(*lines: str) -> float:
    return math.prod(LINE_ALIVE[line] for line in lines)


# Weights of the 3node patterns when only base lines fail. The base design serves
# BASE_SERVED; l12 down is fixed by 25 on l12b; l13 down needs 43 (l12b +25, l23 +18).
BASE_SERVED = _alive("l1", "l12", "l13")
L12_DOWN = _alive("l1", "l12b", "l13") * (1 - LINE_ALIVE["l12"])
L13_DOWN = _alive("l1", "l12", "l12b", "l23") * (1 - LINE_ALIVE["l13"])


def make_scenario(xi_nodes, xi_edges, index: int = 0) -> Scenario:
    return Scenario(
        index=index,
        xi_nodes=np.asarray(xi_nodes, dtype=np.uint8),
        xi_edges=np.asarray(xi_edges, dtype=np.uint8),
    )


def all_alive(network: Network) -> Scenario:
    return make_scenario(np.ones(len(network.nodes)), np.ones(len(network.edges)))


def edges_only(network: Network) -> Network:
    """Only base edges fail; nodes and candidates are always on."""
    return replace(
        network,
        nodes=tuple(replace(n, lifetime=ALWAYS_ON) for n in network.nodes),
        edges=tuple(
            replace(e, lifetime=ALWAYS_ON) if e.is_candidate else e for e in network.edges
        ),
    )


@pytest.fixture
def line_network() -> Network:
    """s -> r -> t with unit flows; only the relay can fail."""
    return Network(
        name="line",
        nodes=(
            Node("s", NodeRole.SOURCE, d=1.0),
            Node("r", NodeRole.RELAY, lifetime=Bernoulli(0.9)),
            Node("t", NodeRole.SINK, d=-1.0),
        ),
        edges=(Edge("a", "s", "r"), Edge("b", "r", "t")),
    )


@pytest.fixture
def bridge_network() -> Network:
    """Two parallel routes s -> a -> t and s -> b -> t with exponential relays."""
    return Network(
        name="bridge",
        nodes=(
            Node("s", NodeRole.SOURCE, d=1.0),
            Node("a", NodeRole.RELAY, lifetime=Exponential(10.0)),
            Node("b", NodeRole.RELAY, lifetime=Exponential(20.0)),
            Node("t", NodeRole.SINK, d=-1.0),
        ),
        edges=(
            Edge("sa", "s", "a"),
            Edge("at", "a", "t"),
            Edge("sb", "s", "b"),
            Edge("bt", "b", "t"),
        ),
    )


@pytest.fixture
def single_link_network() -> Network:
    """One controlled source feeding one sink over a purchasable link."""
    return Network(
        name="single-link",
        nodes=(
            Node("s", NodeRole.SOURCE, control=(0.0, 10.0)),
            Node("t", NodeRole.SINK, d=-5.0),
        ),
        edges=(
            Edge(
                "e1",
                "s",
                "t",
                flow_upper=10.0,
                lifetime=Bernoulli(0.8),
                is_candidate=True,
                capital_cost=100.0,
            ),
        ),
    )


@pytest.fixture
def always_on_pair() -> Network:
    return Network(
        name="pair",
        nodes=(Node("s", NodeRole.SOURCE, d=2.0), Node("t", NodeRole.SINK, d=-2.0)),
        edges=(Edge("st", "s", "t", flow_upper=2.0, lifetime=ALWAYS_ON),),
    )


@pytest.fixture
def three_node() -> Network:
    return load_network(DATA_DIR / "3node.json")


@pytest.fixture
def three_node_topology() -> Network:
    return load_network(DATA_DIR / "3node_topology.json")


@pytest.fixture
def pump() -> Network:
    return load_network(DATA_DIR / "pump.json")


@pytest.fixture
def ieee14() -> Network:
    return load_network(DATA_DIR / "ieee14.json")
