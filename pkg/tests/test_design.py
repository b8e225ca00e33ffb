"""Tests for design problems, the cost function and the joint design program."""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from relnet.design import solve as solve_module
from relnet.design.problem import (
    BoundMenu,
    BoundMenus,
    DesignError,
    DesignProblem,
    cost_of,
    default_bound_menus,
)
from relnet.design.solve import DesignResult, screen_patterns, solve_design
from relnet.network.graph import promote_to_candidates
from relnet.network.models import ALWAYS_ON
from relnet.scenario import enumerate_scenarios, sample_scenarios
from tests.conftest import BASE_SERVED, L12_DOWN, L13_DOWN, edges_only


@pytest.fixture
def capacity_problem(three_node) -> DesignProblem:
    network = edges_only(three_node)
    return DesignProblem(network, enumerate_scenarios(network, 5.0), budget=0.0)


@pytest.fixture
def topology_problem(single_link_network) -> DesignProblem:
    return DesignProblem(
        single_link_network,
        enumerate_scenarios(single_link_network, 0.0),
        budget=100.0,
        enable_topology=True,
    )


class TestCostOf:
    def test_one_candidate_without_capacity(self):
        assert cost_of({"c": 1}, {}, {}) == 100.0

    def test_capacity_above_baseline(self):
        cost = cost_of(
            {},
            {"a": 60.0, "b": 20.0},
            {"n": 95.0},
            baseline_flow={"a": 50.0, "b": 20.0},
            baseline_control={"n": 90.0},
        )
        assert cost == pytest.approx(15.0)

    def test_per_edge_capital(self):
        cost = cost_of({"c": 1, "d": 0, "e": 1}, {"c": 4.0}, {}, {"c": 30.0, "d": 7.0, "e": 2.0})
        assert cost == pytest.approx(36.0)


class TestBoundMenus:
    def test_capacity_mode(self, three_node):
        menus = default_bound_menus(three_node)
        assert set(menus.flow) == {"l1", "l12", "l12b", "l13", "l23"}
        assert menus.flow["l1"] == BoundMenu(90.0, 900.0)
        assert menus.flow["l12"] == BoundMenu(30.0, 50.0)
        assert menus.control["plant"] == BoundMenu(90.0, 900.0)

    def test_topology_mode(self, three_node):
        menus = default_bound_menus(three_node, topology=True)
        assert len(menus.flow) == 7
        assert menus.flow["l21"] == BoundMenu(20.0, 200.0)
        assert menus.control["plant"] == BoundMenu(90.0, 900.0)

    def test_network_menu_overrides(self, three_node):
        network = replace(
            three_node,
            edges=tuple(
                replace(e, menu=(10.0, 15.0)) if e.id == "l13" else e for e in three_node.edges
            ),
        )
        assert default_bound_menus(network).flow["l13"] == BoundMenu(10.0, 15.0)

    def test_invalid_menu(self):
        with pytest.raises(DesignError):
            BoundMenu(5.0, 1.0)
        with pytest.raises(DesignError, match="finite"):
            BoundMenu(0.0, math.inf)


class TestDesignProblem:
    def test_baseline_cost_is_zero(self, capacity_problem):
        menus = capacity_problem.bound_menus
        caps = {e: m.lower for e, m in menus.flow.items()}
        controls = {n: m.lower for n, m in menus.control.items()}
        assert capacity_problem.cost({}, caps, controls) == 0.0
        assert capacity_problem.candidate_ids == []

    def test_topology_charges_capital_and_expansion(self, topology_problem):
        assert topology_problem.candidate_ids == ["e1"]
        assert topology_problem.baseline_flow == {"e1": 10.0}
        assert topology_problem.cost({"e1": 1}, {"e1": 10.0}, {"s": 10.0}) == pytest.approx(100.0)
        assert topology_problem.cost({"e1": 1}, {"e1": 15.0}, {"s": 10.0}) == pytest.approx(105.0)
        assert topology_problem.cost({"e1": 0}, {"e1": 10.0}, {"s": 10.0}) == 0.0

    def test_negative_budget(self, capacity_problem):
        with pytest.raises(DesignError, match="non-negative"):
            capacity_problem.with_budget(-1.0)

    def test_scenario_dimensions(self, capacity_problem, pump):
        with pytest.raises(DesignError, match="network has"):
            replace(capacity_problem, network=pump, bound_menus=None)

    def test_positive_lower_bound(self, single_link_network):
        network = replace(
            single_link_network,
            edges=(replace(single_link_network.edges[0], flow_lower=1.0),),
        )
        with pytest.raises(DesignError, match="zero flow lower bound"):
            DesignProblem(network, enumerate_scenarios(network, 0.0), budget=1.0)

    def test_unknown_menu_entry(self, capacity_problem):
        menus = BoundMenus(flow={"nope": BoundMenu(0.0, 1.0)})
        with pytest.raises(DesignError, match="unknown edge 'nope'"):
            replace(capacity_problem, bound_menus=menus)

    def test_unbounded_candidate(self, single_link_network):
        network = replace(
            single_link_network,
            edges=(replace(single_link_network.edges[0], flow_upper=math.inf),),
        )
        with pytest.raises(DesignError, match="finite capacity or menu"):
            DesignProblem(
                network, enumerate_scenarios(network, 0.0), budget=1.0, enable_topology=True
            )


class TestScreening:
    def test_classifies_patterns(self, capacity_problem):
        patterns, weights, status = screen_patterns(capacity_problem)
        assert len(patterns) == 32
        assert weights.sum() == pytest.approx(1.0)
        assert weights[status == 1].sum() == pytest.approx(BASE_SERVED)
        assert weights[status == -1].sum() == pytest.approx(L12_DOWN + L13_DOWN)
        # l12 down with l23 up or down, and l13 down
        assert (status == -1).sum() == 3


class TestSolveDesign:
    @pytest.mark.parametrize(
        ("budget", "expected"),
        [
            (0.0, BASE_SERVED),
            (20.0, BASE_SERVED),
            (30.0, BASE_SERVED + L12_DOWN),
            (40.0, BASE_SERVED + L12_DOWN),
            (45.0, BASE_SERVED + L12_DOWN + L13_DOWN),
            (75.0, BASE_SERVED + L12_DOWN + L13_DOWN),
        ],
    )
    def test_exact_capacity_design(self, capacity_problem, budget, expected):
        result = solve_design(capacity_problem.with_budget(budget))
        assert result.reliability == pytest.approx(expected, abs=1e-6)
        assert result.model_objective == pytest.approx(result.reliability, abs=1e-6)
        assert result.cost <= budget + 1e-6
        assert not result.relaxed
        assert result.chosen_edges == {}

    def test_zero_budget_keeps_base_network(self, capacity_problem):
        result = solve_design(capacity_problem)
        assert result.cost == pytest.approx(0.0, abs=1e-6)
        assert result.flow_caps["l12"] == pytest.approx(30.0)
        assert result.flow_caps["l13"] == pytest.approx(30.0)
        assert result.control_caps["plant"] == pytest.approx(90.0)

    @pytest.mark.parametrize("budget", [0.0, 20.0, 30.0, 45.0])
    def test_relaxation_is_bounded_by_exact(self, capacity_problem, budget):
        problem = capacity_problem.with_budget(budget)
        exact = solve_design(problem)
        relaxed = solve_design(problem.with_relaxed(True))
        assert relaxed.relaxed
        assert relaxed.reliability <= exact.reliability + 1e-9
        assert relaxed.relaxed_bound >= exact.reliability - 1e-9
        assert relaxed.cost <= budget + 1e-6
        served = np.asarray(relaxed.functional)
        assert np.all(np.asarray(exact.functional)[served])

    def test_relaxation_spreads_capacity_at_thirty(self, capacity_problem):
        # The LP splits 30 between l12b and l23 and completes neither repair
        problem = capacity_problem.with_budget(30.0)
        relaxed = solve_design(problem.with_relaxed(True))
        assert relaxed.reliability == pytest.approx(BASE_SERVED, abs=1e-6)
        assert relaxed.flow_caps["l12b"] < 30.0
        assert relaxed.flow_caps["l23"] < 30.0
        assert solve_design(problem).reliability == pytest.approx(BASE_SERVED + L12_DOWN)

    def test_relaxation_matches_exact_once_both_repairs_fit(self, capacity_problem):
        relaxed = solve_design(capacity_problem.with_budget(45.0).with_relaxed(True))
        assert relaxed.reliability == pytest.approx(BASE_SERVED + L12_DOWN + L13_DOWN)

    def test_topology_threshold(self, topology_problem):
        short = solve_design(topology_problem.with_budget(99.0))
        assert short.reliability == pytest.approx(0.0)

        enough = solve_design(topology_problem)
        assert enough.reliability == pytest.approx(0.8)
        assert enough.chosen_edges == {"e1": 1}
        assert enough.cost == pytest.approx(100.0, abs=1e-6)

    def test_topology_relaxed_bound(self, topology_problem):
        relaxed = solve_design(topology_problem.with_relaxed(True))
        assert relaxed.relaxed_bound == pytest.approx(0.8)
        assert relaxed.reliability <= 0.8 + 1e-9
        assert relaxed.cost <= 100.0 + 1e-6

    def test_frozen_design_reproduces_reliability(self, capacity_problem):
        from relnet.reliability.estimator import estimate_reliability

        problem = capacity_problem.with_budget(40.0)
        result = solve_design(problem)
        estimate = estimate_reliability(
            result.apply(problem.network),
            problem.scenarios,
            active_candidates=result.active_candidates(problem.network),
            use_milp=True,
        )
        assert estimate.value == pytest.approx(result.reliability)

    def test_monte_carlo_scenarios(self, three_node):
        scenarios = sample_scenarios(three_node, 60, 5.0, seed=4)
        problem = DesignProblem(three_node, scenarios, budget=40.0)
        result = solve_design(problem)
        base = solve_design(problem.with_budget(0.0))
        assert result.reliability >= base.reliability
        assert len(result.functional) == 60


class TestDesignResult:
    def test_overlay_drops_unbought_candidates(self, three_node):
        result = DesignResult(
            budget=100.0,
            reliability=0.5,
            cost=100.0,
            chosen_edges={"l21": 1, "l32": 0},
            flow_caps={"l13": 25.0},
        )
        overlay = result.overlay(three_node)
        assert [e.id for e in overlay.edges] == ["l1", "l12", "l12b", "l13", "l23", "l21"]
        assert overlay.edge("l13").flow_upper == 25.0
        np.testing.assert_array_equal(result.active_candidates(three_node), [1.0, 0.0])

    def test_to_json(self, three_node):
        result = DesignResult(
            budget=10.0,
            reliability=0.5,
            cost=10.0,
            flow_caps={"l23": 30.0, "l12": 60.0},
            solve_seconds=1.5,
            evaluate_seconds=0.5,
        )
        data = result.to_json(three_node, include_timings=False)
        assert data["solve_seconds"] == 0.0
        assert data["evaluate_seconds"] == 0.0
        assert result.to_json()["evaluate_seconds"] == 0.5
        assert list(data["flow_caps"]) == ["l12", "l23"]
        assert [e["id"] for e in data["network"]["edges"]] == ["l1", "l12", "l12b", "l13", "l23"]


class TestTimings:
    def test_evaluation_is_timed_apart_from_the_solve(self, capacity_problem, monkeypatch):
        problem = capacity_problem.with_budget(45.0)
        screening = screen_patterns(problem)
        evaluate = solve_module.estimate_reliability

        def slow_evaluate(*args, **kwargs):
            time.sleep(0.5)
            return evaluate(*args, **kwargs)

        monkeypatch.setattr(solve_module, "estimate_reliability", slow_evaluate)
        result = solve_design(problem, screening=screening)
        assert result.evaluate_seconds >= 0.5
        assert result.solve_seconds < 0.5


class TestBuildFromScratch:
    @pytest.fixture
    def intact_plant(self, three_node_topology):
        """Every component survives, so one scenario decides the threshold."""
        network = replace(
            three_node_topology,
            nodes=tuple(replace(n, lifetime=ALWAYS_ON) for n in three_node_topology.nodes),
            edges=tuple(replace(e, lifetime=ALWAYS_ON) for e in three_node_topology.edges),
        )
        return promote_to_candidates(network)

    def test_six_lines_cost_exactly_600(self, intact_plant):
        problem = DesignProblem(
            intact_plant, enumerate_scenarios(intact_plant, 5.0), budget=600.0,
            enable_topology=True,
        )
        built = solve_design(problem)
        assert built.reliability == pytest.approx(1.0)
        assert built.chosen_edges == {e.id: 1 for e in intact_plant.edges}
        assert built.cost == pytest.approx(600.0, abs=1e-6)

    @pytest.mark.parametrize("budget", [0.0, 300.0, 500.0, 599.0])
    def test_nothing_fits_below_600(self, intact_plant, budget):
        problem = DesignProblem(
            intact_plant, enumerate_scenarios(intact_plant, 5.0), budget=budget,
            enable_topology=True,
        )
        assert solve_design(problem).reliability == 0.0

    def test_base_capacities_are_free(self, intact_plant):
        menus = default_bound_menus(intact_plant, topology=True)
        assert menus.flow["l1"] == BoundMenu(900.0, 9000.0)
        assert menus.control["plant"] == BoundMenu(1500.0, 15000.0)
        problem = DesignProblem(
            intact_plant, enumerate_scenarios(intact_plant, 5.0), budget=0.0,
            enable_topology=True,
        )
        caps = {e: m.lower for e, m in menus.flow.items()}
        controls = {n: m.lower for n, m in menus.control.items()}
        assert problem.cost({e: 1 for e in caps}, caps, controls) == pytest.approx(600.0)

    @pytest.mark.slow
    def test_sampled_threshold(self, three_node_topology):
        network = promote_to_candidates(three_node_topology)
        problem = DesignProblem(
            network,
            sample_scenarios(network, 40, 5.0, seed=0),
            budget=599.0,
            enable_topology=True,
        )
        assert solve_design(problem).reliability == 0.0
        built = solve_design(problem.with_budget(600.0))
        assert built.reliability > 0.0
        assert sum(built.chosen_edges.values()) == 6
