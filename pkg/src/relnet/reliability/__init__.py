"""Reliability module - per-scenario feasibility and the sample-average estimate."""

from relnet.reliability.estimator import (
    ReliabilityEstimate,
    estimate_reliability,
    write_outcomes_jsonl,
)
from relnet.reliability.executor import ScenarioEvaluationError, ScenarioExecutor, TaskResult
from relnet.reliability.feasibility import (
    FeasibilityOutcome,
    LogicMode,
    LogicSpec,
    psi_general,
    psi_single,
    rounding_rule,
)

__all__ = [
    "FeasibilityOutcome",
    "LogicMode",
    "LogicSpec",
    "ReliabilityEstimate",
    "ScenarioEvaluationError",
    "ScenarioExecutor",
    "TaskResult",
    "estimate_reliability",
    "psi_general",
    "psi_single",
    "rounding_rule",
    "write_outcomes_jsonl",
]
