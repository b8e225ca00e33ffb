"""Sample-average reliability estimate over a scenario set."""

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import structlog

from relnet.network.models import Network
from relnet.reliability.executor import ScenarioEvaluationError, ScenarioExecutor
from relnet.reliability.feasibility import FeasibilityOutcome, LogicSpec, psi_general
from relnet.scenario import Scenario, ScenarioSet, unique_patterns
from relnet.solvers.milp import DEFAULT_NODE_LIMIT

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class PatternTask:
    """One distinct failure pattern to evaluate; picklable for worker processes."""

    network: Network
    scenario: Scenario
    logic: LogicSpec
    use_milp: bool
    active_candidates: np.ndarray | None
    node_limit: int


def evaluate_pattern(task: PatternTask) -> FeasibilityOutcome:
    """Worker entry point: ψ for one failure pattern."""
    return psi_general(
        task.network,
        task.scenario,
        task.logic,
        use_milp=task.use_milp,
        active_candidates=task.active_candidates,
        node_limit=task.node_limit,
    )


@dataclass(frozen=True, eq=False)
class ReliabilityEstimate:
    """R = Σ p_k ψ_k with the per-scenario outcomes kept for diagnostics."""

    value: float
    samples: int
    standard_error: float
    per_scenario: tuple[FeasibilityOutcome, ...]
    patterns: int = 0
    seconds: float = 0.0

    @property
    def functional(self) -> np.ndarray:
        """Per-scenario ψ as a boolean vector in scenario order."""
        return np.array([o.functional for o in self.per_scenario], dtype=bool)

    def to_json(self, include_timings: bool = True) -> dict:
        """The `eval` command's JSON payload."""
        return {
            "R": self.value,
            "samples": self.samples,
            "stderr": self.standard_error,
            "seconds": self.seconds if include_timings else 0.0,
        }


def estimate_reliability(
    network: Network,
    scenarios: ScenarioSet,
    logic: LogicSpec | None = None,
    use_milp: bool = False,
    active_candidates: np.ndarray | None = None,
    workers: int = 1,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> ReliabilityEstimate:
    """Evaluate ψ once per distinct failure pattern and average over the scenarios."""
    scenarios.check_dimensions(network)
    logic = logic or LogicSpec()
    started = time.perf_counter()

    patterns, inverse, _ = unique_patterns(scenarios)
    _, first_scenario = np.unique(inverse, return_index=True)
    n_nodes = len(network.nodes)
    tasks = [
        PatternTask(
            network=network,
            scenario=Scenario(int(first_scenario[p]), row[:n_nodes], row[n_nodes:]),
            logic=logic,
            use_milp=use_milp,
            active_candidates=active_candidates,
            node_limit=node_limit,
        )
        for p, row in enumerate(patterns)
    ]

    results = ScenarioExecutor(workers).run(evaluate_pattern, tasks)
    for result in results:
        if not result.success:
            k = int(first_scenario[result.index])
            raise ScenarioEvaluationError(k, str(result.error)) from result.error

    outcomes = [result.value for result in results]
    functional = np.array([outcomes[p].functional for p in inverse], dtype=float)
    if scenarios.weights is None:
        value = float(functional.mean())
        standard_error = math.sqrt(value * (1.0 - value) / len(scenarios))
    else:
        # Weighted sets enumerate every pattern, so the value is exact
        value = float(min(1.0, max(0.0, scenarios.weights @ functional)))
        standard_error = 0.0

    estimate = ReliabilityEstimate(
        value=value,
        samples=len(scenarios),
        standard_error=standard_error,
        per_scenario=tuple(outcomes[p] for p in inverse),
        patterns=len(patterns),
        seconds=time.perf_counter() - started,
    )
    logger.info(
        "Estimated reliability",
        network=network.name,
        reliability=round(value, 6),
        samples=len(scenarios),
        patterns=len(patterns),
        milp=use_milp,
        seconds=round(estimate.seconds, 3),
    )
    return estimate


def write_outcomes_jsonl(estimate: ReliabilityEstimate, path: str | Path) -> None:
    """One JSON object per scenario: {k, functional, y}."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for k, outcome in enumerate(estimate.per_scenario):
            f.write(json.dumps(outcome.to_json(k), sort_keys=True) + "\n")
    logger.info("Wrote scenario outcomes", path=str(path), scenarios=len(estimate.per_scenario))
