"""Tests for block diagram evaluation and compilation to networks."""

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relnet.network.io import SchemaError
from relnet.network.models import Bernoulli, Exponential, NodeRole
from relnet.rbd import (
    SINK_ID,
    SOURCE_ID,
    Component,
    Parallel,
    Series,
    components,
    connectivity_probability,
    eval_rbd,
    parse_rbd,
    rbd_eval_time,
    rbd_to_network,
)
from relnet.reliability.estimator import estimate_reliability
from relnet.scenario import enumerate_scenarios
from tests.conftest import DATA_DIR, PUMP_RELIABILITY


@pytest.fixture
def pump_rbd():
    with open(DATA_DIR / "pump_rbd.json", encoding="utf-8") as f:
        return json.load(f)


class TestEvalRbd:
    def test_series_and_parallel(self):
        a, b = Component("a", 0.9), Component("b", 0.8)
        assert eval_rbd(Series((a, b))) == pytest.approx(0.72)
        assert eval_rbd(Parallel((a, b))) == pytest.approx(0.98)

    def test_pump(self, pump_rbd):
        assert eval_rbd(parse_rbd(pump_rbd)) == pytest.approx(PUMP_RELIABILITY, abs=1e-6)

    def test_reliability_range(self):
        with pytest.raises(ValueError, match="must lie in"):
            Component("a", 1.5)

    def test_reserved_prefix(self):
        with pytest.raises(ValueError, match="reserved"):
            Component("rbd:split_1", 0.5)

    def test_empty_blocks(self):
        with pytest.raises(ValueError, match="at least one child"):
            Series(())
        with pytest.raises(ValueError, match="at least one child"):
            Parallel(())


class TestParseRbd:
    def test_eval_time_is_inherited(self, pump_rbd):
        expr = parse_rbd(pump_rbd)
        assert rbd_eval_time(pump_rbd) == 5.0
        assert [c.id for c in components(expr)] == ["c1", "c2", "c3", "c4", "c5", "c6"]
        assert all(c.reliability == pytest.approx(math.exp(-0.05)) for c in components(expr))

    def test_component_eval_time_wins(self):
        component = {"id": "a", "mean_life": 10, "eval_time": 1}
        expr = parse_rbd({"eval_time": 5, "series": [{"component": component}]})
        assert components(expr)[0].reliability == pytest.approx(math.exp(-0.1))

    def test_fixed_reliability(self):
        expr = parse_rbd({"parallel": [{"component": {"id": "a", "reliability": 0.5}}]})
        assert eval_rbd(expr) == 0.5
        assert components(expr)[0].mean_life is None

    @pytest.mark.parametrize(
        ("document", "path"),
        [
            ({"series": []}, "rbd.series"),
            ({"ring": [1]}, "rbd"),
            ({"series": [{"component": {"reliability": 0.5}}]}, "rbd.series[0].component"),
            ({"component": {"id": "a", "mean_life": 10}}, "rbd.component.eval_time"),
            ({"component": {"id": "a"}}, "rbd.component"),
            ({"component": {"id": "rbd:sink", "reliability": 0.5}}, "rbd.component.id"),
            ([], "rbd"),
        ],
    )
    def test_schema_errors(self, document, path):
        with pytest.raises(SchemaError) as exc_info:
            parse_rbd(document)
        assert exc_info.value.path == path


class TestRbdToNetwork:
    def test_pump_layout(self, pump_rbd, pump):
        network = rbd_to_network(parse_rbd(pump_rbd), name="pump")
        assert len(network.nodes) == 10
        assert len(network.edges) == 10
        assert network == pump
        assert network.node(SOURCE_ID).role == NodeRole.SOURCE
        assert network.node(SINK_ID).d == -1.0
        assert network.node("c1").lifetime == Exponential(100.0)

    def test_single_component(self):
        network = rbd_to_network(Component("a", 0.7))
        assert [n.id for n in network.nodes] == [SOURCE_ID, "a", SINK_ID]
        assert network.node("a").lifetime == Bernoulli(0.7)
        assert connectivity_probability(network) == pytest.approx(0.7)

    def test_component_ids_never_collide_with_junctions(self):
        names = ["rbd_source", "split_1", "merge_1", "rbd_sink"]
        expr = Series((Parallel(tuple(Component(n, 0.9) for n in names)), Component("e1", 0.8)))
        network = rbd_to_network(expr)
        assert {"rbd_source", "split_1", "merge_1", "rbd_sink", "e1"} <= set(network.node_index)
        assert connectivity_probability(network) == pytest.approx(eval_rbd(expr))

    def test_pump_connectivity(self, pump):
        assert connectivity_probability(pump, 5.0) == pytest.approx(PUMP_RELIABILITY, abs=1e-6)

    def test_connectivity_needs_reliable_edges(self, three_node):
        with pytest.raises(ValueError, match="always-on edges"):
            connectivity_probability(three_node)


def _build(tree, counter):
    if isinstance(tree, float):
        counter[0] += 1
        return Component(f"c{counter[0]}", tree)
    kind, children = tree
    built = tuple(_build(child, counter) for child in children)
    return Series(built) if kind == "series" else Parallel(built)


rbd_trees = st.recursive(
    st.floats(0.05, 0.95),
    lambda children: st.tuples(
        st.sampled_from(["series", "parallel"]), st.lists(children, min_size=1, max_size=3)
    ),
    max_leaves=8,
).map(lambda tree: _build(tree, [0]))


class TestCompiledAgreement:
    @given(rbd_trees)
    @settings(max_examples=60, deadline=None)
    def test_connectivity_matches_formula(self, expr):
        network = rbd_to_network(expr)
        assert connectivity_probability(network) == pytest.approx(eval_rbd(expr), abs=1e-9)

    @given(rbd_trees)
    @settings(max_examples=15, deadline=None)
    def test_flow_estimate_matches_formula(self, expr):
        network = rbd_to_network(expr)
        estimate = estimate_reliability(network, enumerate_scenarios(network, 0.0))
        assert estimate.value == pytest.approx(eval_rbd(expr), abs=1e-9)
