"""Joint design program over all scenario patterns, exact or relaxed and rounded."""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import structlog

from relnet.design.problem import DesignError, DesignProblem
from relnet.network.io import network_to_dict
from relnet.network.models import Network
from relnet.reliability.estimator import ReliabilityEstimate, estimate_reliability
from relnet.scenario import Scenario, ScenarioSet, effective_edge_mask, unique_patterns
from relnet.solvers.lp import LinearProgram, LpStatus, Relation, solve
from relnet.solvers.milp import MixedIntegerProgram, solve_mip

logger = structlog.get_logger()

V_ROUND_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class DesignResult:
    """A frozen design (v, z̄, ū) and its reliability on the problem's scenario set."""

    budget: float
    reliability: float
    cost: float
    chosen_edges: dict[str, int] = field(default_factory=dict)
    flow_caps: dict[str, float] = field(default_factory=dict)
    control_caps: dict[str, float] = field(default_factory=dict)
    solve_seconds: float = 0.0
    evaluate_seconds: float = 0.0
    relaxed: bool = False
    functional: tuple[bool, ...] = ()
    relaxed_bound: float | None = None
    model_objective: float | None = None
    nodes_explored: int = 0
    incumbent: np.ndarray | None = field(default=None, repr=False)

    def active_candidates(self, network: Network) -> np.ndarray:
        """0/1 vector over the network's candidate edges, in network order."""
        return np.array(
            [float(self.chosen_edges.get(e.id, 0)) for e in network.candidate_edges]
        )

    def apply(self, network: Network) -> Network:
        """Network with the designed capacities; candidate columns stay in place."""
        edges = tuple(
            replace(e, flow_upper=self.flow_caps[e.id]) if e.id in self.flow_caps else e
            for e in network.edges
        )
        nodes = tuple(
            replace(n, control=(n.control_lower, self.control_caps[n.id]))
            if n.id in self.control_caps
            else n
            for n in network.nodes
        )
        return replace(network, nodes=nodes, edges=edges)

    def overlay(self, network: Network) -> Network:
        """Designed network with unbought candidates removed."""
        designed = self.apply(network)
        edges = tuple(
            e for e in designed.edges if not e.is_candidate or self.chosen_edges.get(e.id, 0)
        )
        return replace(designed, edges=edges)

    def to_json(self, network: Network | None = None, include_timings: bool = True) -> dict:
        """JSON view; with `network` the overlaid design is included."""
        data = {
            "budget": self.budget,
            "reliability": self.reliability,
            "cost": self.cost,
            "relaxed": self.relaxed,
            "relaxed_bound": self.relaxed_bound,
            "chosen_edges": dict(sorted(self.chosen_edges.items())),
            "flow_caps": dict(sorted(self.flow_caps.items())),
            "control_caps": dict(sorted(self.control_caps.items())),
            "nodes_explored": self.nodes_explored,
            "solve_seconds": self.solve_seconds if include_timings else 0.0,
            "evaluate_seconds": self.evaluate_seconds if include_timings else 0.0,
        }
        if network is not None:
            data["network"] = network_to_dict(self.overlay(network))
        return data


class _ModelBuilder:
    """Accumulates columns and sparse rows, then emits a dense LinearProgram."""

    def __init__(self):
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.objective: list[float] = []
        self.rows: list[tuple[dict[int, float], Relation, float]] = []

    def add_var(self, lower: float, upper: float, objective: float = 0.0) -> int:
        self.lower.append(lower)
        self.upper.append(upper)
        self.objective.append(objective)
        return len(self.lower) - 1

    def add_row(self, coefs: dict[int, float], relation: Relation, rhs: float) -> None:
        self.rows.append((coefs, relation, rhs))

    def build(self) -> LinearProgram:
        matrix = np.zeros((len(self.rows), len(self.lower)))
        for i, (coefs, _, _) in enumerate(self.rows):
            for j, value in coefs.items():
                matrix[i, j] += value
        return LinearProgram(
            objective=np.array(self.objective),
            matrix=matrix,
            relations=tuple(r[1] for r in self.rows),
            rhs=np.array([r[2] for r in self.rows]),
            lower=np.array(self.lower),
            upper=np.array(self.upper),
        )


@dataclass
class _DesignModel:
    lp: LinearProgram
    binaries: list[int]
    flow_cols: dict[str, int]
    control_cols: dict[str, int]
    candidate_cols: dict[str, int]
    fixed_value: float
    blocks: int


def _pattern_set(patterns: np.ndarray, weights: np.ndarray, n_nodes: int) -> ScenarioSet:
    return ScenarioSet(
        xi_nodes=patterns[:, :n_nodes],
        xi_edges=patterns[:, n_nodes:],
        seed=None,
        threshold=math.nan,
        weights=weights,
    )


def _extreme_design(problem: DesignProblem, permissive: bool) -> tuple[Network, np.ndarray]:
    """Every menu at its upper (permissive) or lower value, with candidates all on or off."""
    menus = problem.bound_menus
    design = DesignResult(
        budget=problem.budget,
        reliability=math.nan,
        cost=math.nan,
        chosen_edges={e: int(permissive) for e in problem.candidate_ids},
        flow_caps={e: m.upper if permissive else m.lower for e, m in menus.flow.items()},
        control_caps={n: m.upper if permissive else m.lower for n, m in menus.control.items()},
    )
    return design.apply(problem.network), design.active_candidates(problem.network)


def screen_patterns(problem: DesignProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classify distinct patterns as always working, never working, or design dependent.

    Returns (patterns, pattern weights, status) with status 1 = functional under every
    design, 0 = functional under none, -1 = depends on the design.
    """
    n_nodes = len(problem.network.nodes)
    patterns, _, weights = unique_patterns(problem.scenarios)
    pattern_set = _pattern_set(patterns, weights, n_nodes)

    best_net, best_v = _extreme_design(problem, permissive=True)
    worst_net, worst_v = _extreme_design(problem, permissive=False)
    best = estimate_reliability(
        best_net, pattern_set, problem.logic, use_milp=True, active_candidates=best_v,
        workers=problem.workers, node_limit=problem.node_limit,
    ).functional
    worst = estimate_reliability(
        worst_net, pattern_set, problem.logic, use_milp=True, active_candidates=worst_v,
        workers=problem.workers, node_limit=problem.node_limit,
    ).functional

    status = np.where(worst, 1, np.where(best, -1, 0))
    logger.info(
        "Screened scenario patterns",
        patterns=len(patterns),
        always=int((status == 1).sum()),
        never=int((status == 0).sum()),
        design_dependent=int((status == -1).sum()),
    )
    return patterns, weights, status


def build_design_model(
    problem: DesignProblem,
    patterns: np.ndarray,
    weights: np.ndarray,
    status: np.ndarray,
) -> _DesignModel:
    """Joint program: budget row, then one balance block per design-dependent pattern."""
    network = problem.network
    menus = problem.bound_menus
    n_nodes = len(network.nodes)
    required = set(problem.logic.required_nodes(network))
    model = _ModelBuilder()

    flow_cols = {e: model.add_var(m.lower, m.upper) for e, m in menus.flow.items()}
    control_cols = {n: model.add_var(m.lower, m.upper) for n, m in menus.control.items()}
    candidate_cols = {e: model.add_var(0.0, 1.0) for e in problem.candidate_ids}
    binaries = list(candidate_cols.values())

    budget_row = {col: 1.0 for col in flow_cols.values()}
    budget_row.update({col: 1.0 for col in control_cols.values()})
    for e, col in candidate_cols.items():
        budget_row[col] = problem.capital_cost(e)
    baseline = sum(problem.baseline_flow.values()) + sum(problem.baseline_control.values())
    model.add_row(budget_row, Relation.LE, problem.budget + baseline)

    candidates = set(candidate_cols)
    index = network.node_index
    blocks = 0
    for p in np.flatnonzero(status == -1):
        scenario = Scenario(int(p), patterns[p, :n_nodes], patterns[p, n_nodes:])
        alive_edges = effective_edge_mask(network, scenario)
        alive_nodes = scenario.xi_nodes
        blocks += 1

        y_shared = model.add_var(0.0, 1.0, -float(weights[p]))
        binaries.append(y_shared)
        balance: dict[int, dict[int, float]] = {i: {} for i in range(n_nodes) if alive_nodes[i]}

        for j, edge in enumerate(network.edges):
            if not alive_edges[j] or (edge.is_candidate and edge.id not in candidates):
                continue
            menu = menus.flow.get(edge.id)
            upper = menu.upper if menu else edge.flow_upper
            z = model.add_var(0.0, upper)
            balance[index[edge.head]][z] = 1.0
            balance[index[edge.tail]][z] = -1.0
            if edge.id in flow_cols:
                model.add_row({z: 1.0, flow_cols[edge.id]: -1.0}, Relation.LE, 0.0)
            if edge.id in candidates:
                model.add_row({z: 1.0, candidate_cols[edge.id]: -upper}, Relation.LE, 0.0)

        rhs: dict[int, float] = {}
        for i, node in enumerate(network.nodes):
            if not alive_nodes[i]:
                continue
            if node.controllable:
                menu = menus.control.get(node.id)
                u = model.add_var(node.control_lower, menu.upper if menu else node.control_upper)
                balance[i][u] = 1.0
                if node.id in control_cols:
                    model.add_row({u: 1.0, control_cols[node.id]: -1.0}, Relation.LE, 0.0)
            if node.is_terminal and node.d != 0:
                y = y_shared if node.id in required else model.add_var(0.0, 1.0)
                balance[i][y] = balance[i].get(y, 0.0) - node.d
            rhs[i] = -node.d

        for i, coefs in balance.items():
            if coefs or rhs[i] != 0:
                model.add_row(coefs, Relation.EQ, rhs[i])

    fixed_value = float(weights[status == 1].sum())
    lp = model.build()
    logger.debug(
        "Built design model",
        variables=lp.num_vars,
        rows=lp.num_rows,
        blocks=blocks,
        binaries=len(binaries),
    )
    return _DesignModel(lp, binaries, flow_cols, control_cols, candidate_cols, fixed_value, blocks)


def _design_from_primal(
    problem: DesignProblem, model: _DesignModel, primal: np.ndarray
) -> tuple[dict[str, int], dict[str, float], dict[str, float]]:
    menus = problem.bound_menus
    chosen = {e: int(round(primal[col])) for e, col in model.candidate_cols.items()}
    flow_caps = {
        e: float(np.clip(primal[col], menus.flow[e].lower, menus.flow[e].upper))
        for e, col in model.flow_cols.items()
    }
    control_caps = {
        n: float(np.clip(primal[col], menus.control[n].lower, menus.control[n].upper))
        for n, col in model.control_cols.items()
    }
    return chosen, flow_caps, control_caps


def _evaluate(
    problem: DesignProblem,
    chosen: dict[str, int],
    flow_caps: dict[str, float],
    control_caps: dict[str, float],
) -> tuple[DesignResult, ReliabilityEstimate]:
    design = DesignResult(
        budget=problem.budget,
        reliability=math.nan,
        cost=problem.cost(chosen, flow_caps, control_caps),
        chosen_edges=chosen,
        flow_caps=flow_caps,
        control_caps=control_caps,
        relaxed=problem.relaxed,
    )
    estimate = estimate_reliability(
        design.apply(problem.network),
        problem.scenarios,
        problem.logic,
        use_milp=not problem.relaxed,
        active_candidates=design.active_candidates(problem.network),
        workers=problem.workers,
        node_limit=problem.node_limit,
    )
    return design, estimate


def _solve_exact(problem: DesignProblem, model: _DesignModel, incumbent: np.ndarray | None):
    solution = solve_mip(
        MixedIntegerProgram(model.lp, tuple(model.binaries)),
        node_limit=problem.node_limit,
        incumbent=incumbent,
    )
    if not solution.is_optimal:
        raise DesignError("design program is infeasible")
    chosen, flow_caps, control_caps = _design_from_primal(problem, model, solution.primal)
    weight_total = float(-model.lp.objective.sum())
    objective = model.fixed_value + weight_total + solution.objective_value
    nodes = solution.nodes_explored
    return chosen, flow_caps, control_caps, objective, None, nodes, solution.primal


def _solve_relaxed(problem: DesignProblem, model: _DesignModel):
    relaxation = solve(model.lp)
    if relaxation.status != LpStatus.OPTIMAL:
        raise DesignError("relaxed design program is infeasible")
    weight_total = float(-model.lp.objective.sum())
    relaxed_bound = model.fixed_value + weight_total + relaxation.objective_value

    relaxed_v = {e: float(relaxation.primal[col]) for e, col in model.candidate_cols.items()}
    rounded = [e for e, value in relaxed_v.items() if value > V_ROUND_THRESHOLD]
    # Drop the least-supported candidates until the frozen-v program fits the budget
    rounded.sort(key=lambda e: (relaxed_v[e], e))
    while True:
        lower, upper = model.lp.lower.copy(), model.lp.upper.copy()
        for e, col in model.candidate_cols.items():
            lower[col] = upper[col] = 1.0 if e in rounded else 0.0
        fixed = solve(model.lp.with_bounds(lower, upper))
        if fixed.status == LpStatus.OPTIMAL:
            break
        if not rounded:
            raise DesignError("no design fits the budget after rounding")
        dropped = rounded.pop(0)
        logger.debug("Dropped rounded candidate", edge=dropped, relaxed_v=relaxed_v[dropped])

    chosen, flow_caps, control_caps = _design_from_primal(problem, model, fixed.primal)
    objective = model.fixed_value + weight_total + fixed.objective_value
    return chosen, flow_caps, control_caps, objective, relaxed_bound, 0, None


def solve_design(
    problem: DesignProblem,
    incumbent: np.ndarray | None = None,
    screening: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> DesignResult:
    """Solve one budget; `screening` and `incumbent` let a sweep reuse earlier work.

    `solve_seconds` covers building and solving the design program only; the
    re-evaluation of the frozen design is timed separately in `evaluate_seconds`.
    """
    patterns, weights, status = screening or screen_patterns(problem)
    started = time.perf_counter()
    model = build_design_model(problem, patterns, weights, status)

    if problem.relaxed:
        chosen, flow_caps, control_caps, objective, bound, nodes, primal = _solve_relaxed(
            problem, model
        )
    else:
        chosen, flow_caps, control_caps, objective, bound, nodes, primal = _solve_exact(
            problem, model, incumbent
        )
    solve_seconds = time.perf_counter() - started

    started = time.perf_counter()
    design, estimate = _evaluate(problem, chosen, flow_caps, control_caps)
    evaluate_seconds = time.perf_counter() - started
    if not problem.relaxed and abs(estimate.value - objective) > 1e-6:
        logger.warning(
            "Re-evaluated design differs from model objective",
            model=objective,
            evaluated=estimate.value,
        )
    result = replace(
        design,
        reliability=estimate.value,
        solve_seconds=solve_seconds,
        evaluate_seconds=evaluate_seconds,
        functional=tuple(bool(x) for x in estimate.functional),
        relaxed_bound=bound,
        model_objective=objective,
        nodes_explored=nodes,
        incumbent=primal,
    )
    if result.cost > problem.budget + 1e-6 * max(1.0, problem.budget):
        raise DesignError(f"design cost {result.cost} exceeds budget {problem.budget}")
    logger.info(
        "Solved design",
        budget=problem.budget,
        relaxed=problem.relaxed,
        reliability=round(result.reliability, 6),
        cost=round(result.cost, 6),
        nodes=nodes,
        seconds=round(result.solve_seconds, 3),
        evaluate_seconds=round(result.evaluate_seconds, 3),
    )
    return result
