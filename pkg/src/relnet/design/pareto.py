"""Budget sweeps, Pareto frontiers and the exact/relaxed comparison table."""

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import structlog

from relnet.design.problem import DesignError, DesignProblem
from relnet.design.solve import DesignResult, screen_patterns, solve_design
from relnet.reliability.executor import ScenarioEvaluationError
from relnet.solvers.lp import SolverLimitError

logger = structlog.get_logger()

CSV_COLUMNS = (
    "epsilon",
    "cost",
    "reliability_milp",
    "reliability_lp",
    "active_diff_pct",
    "milp_seconds",
    "lp_seconds",
)


@dataclass(frozen=True)
class ParetoPoint:
    """One budget of a sweep; `result` is None when the budget failed."""

    budget: float
    cost: float
    reliability: float
    result: DesignResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        """Whether this budget produced a design."""
        return self.result is not None


@dataclass(frozen=True)
class ParetoFrontier:
    """Pareto pairs in ascending budget order; failed budgets keep their error."""

    pairs: tuple[ParetoPoint, ...]
    relaxed: bool = False

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def budgets(self) -> list[float]:
        """Budgets in sweep order."""
        return [p.budget for p in self.pairs]

    @property
    def reliabilities(self) -> list[float]:
        """Reliability per budget; NaN where the budget failed."""
        return [p.reliability for p in self.pairs]

    def is_monotone(self) -> bool:
        """Whether reliability never drops as the budget grows, ignoring failed budgets."""
        values = [p.reliability for p in self.pairs if p.ok]
        return all(b >= a for a, b in zip(values, values[1:]))


def pareto_sweep(problem: DesignProblem, budgets: list[float]) -> ParetoFrontier:
    """Solve every budget on the same scenarios, carrying the best design forward.

    Exact solves are warm-started from the previous incumbent. A cheaper earlier design
    stays affordable at a larger budget, so it replaces a worse new one.
    """
    budgets = [float(b) for b in budgets]
    if not budgets:
        raise DesignError("at least one budget is required")
    if any(b < a for a, b in zip(budgets, budgets[1:])):
        raise DesignError("budgets must be sorted ascending")

    screening = screen_patterns(problem.with_budget(budgets[0]))
    pairs: list[ParetoPoint] = []
    best: DesignResult | None = None

    for budget in budgets:
        try:
            result = solve_design(
                problem.with_budget(budget),
                incumbent=best.incumbent if best is not None else None,
                screening=screening,
            )
        except (DesignError, SolverLimitError, ScenarioEvaluationError) as e:
            logger.error("Budget failed", budget=budget, error=str(e))
            pairs.append(ParetoPoint(budget, float("nan"), float("nan"), None, str(e)))
            continue

        if best is not None and best.reliability > result.reliability:
            logger.info(
                "Keeping earlier design",
                budget=budget,
                earlier=best.reliability,
                new=result.reliability,
            )
            result = replace(
                best,
                budget=budget,
                solve_seconds=result.solve_seconds,
                evaluate_seconds=result.evaluate_seconds,
            )
        best = result
        pairs.append(ParetoPoint(budget, result.cost, result.reliability, result))

    frontier = ParetoFrontier(tuple(pairs), relaxed=problem.relaxed)
    logger.info(
        "Finished sweep",
        budgets=len(budgets),
        failed=sum(1 for p in pairs if not p.ok),
        relaxed=problem.relaxed,
        reliability=[round(r, 4) for r in frontier.reliabilities],
    )
    return frontier


def active_difference(exact: DesignResult, relaxed: DesignResult) -> float:
    """Percentage of scenarios whose functional indicator differs between two designs."""
    a = np.asarray(exact.functional, dtype=bool)
    b = np.asarray(relaxed.functional, dtype=bool)
    if a.shape != b.shape or a.size == 0:
        raise DesignError(
            f"outcome vectors do not come from the same scenario set ({a.size} vs {b.size})"
        )
    return 100.0 * float((a != b).sum()) / a.size


def frontier_rows(
    exact: ParetoFrontier | None,
    relaxed: ParetoFrontier | None,
) -> list[dict]:
    """Rows of the comparison table; a missing mode leaves its columns empty."""
    reference = exact if exact is not None else relaxed
    if reference is None:
        raise DesignError("no frontier to tabulate")
    if exact is not None and relaxed is not None and exact.budgets != relaxed.budgets:
        raise DesignError("exact and relaxed sweeps use different budgets")

    rows = []
    for i, point in enumerate(reference.pairs):
        e = exact.pairs[i] if exact is not None else None
        r = relaxed.pairs[i] if relaxed is not None else None
        diff = None
        cost = None
        if e is not None and e.ok:
            cost = e.cost
        elif r is not None and r.ok:
            cost = r.cost
        if e is not None and r is not None and e.ok and r.ok:
            diff = active_difference(e.result, r.result)
        rows.append({
            "epsilon": point.budget,
            "cost": cost,
            "reliability_milp": e.reliability if e is not None and e.ok else None,
            "reliability_lp": r.reliability if r is not None and r.ok else None,
            "active_diff_pct": diff,
            "milp_seconds": e.result.solve_seconds if e is not None and e.ok else None,
            "lp_seconds": r.result.solve_seconds if r is not None and r.ok else None,
        })
    return rows


def _format(column: str, value, include_timings: bool) -> str:
    if value is None:
        return ""
    if column.endswith("_seconds"):
        return f"{value if include_timings else 0.0:.4f}"
    if column == "epsilon":
        return f"{value:g}"
    return f"{value:.6f}"


def write_pareto_csv(rows: list[dict], path: str | Path, include_timings: bool = True) -> None:
    """CSV with '.' decimals and LF line endings, independent of locale."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_format(c, row[c], include_timings) for c in CSV_COLUMNS])
    logger.info("Wrote Pareto table", path=str(path), rows=len(rows))
