"""Bounded-variable primal simplex on a dense tableau."""

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
import structlog

logger = structlog.get_logger()

# Tolerances
FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
DEGENERATE_STEP = 1e-12

ITERATION_FACTOR = 50
BLAND_FACTOR = 2

_AT_BASIS, _AT_LOWER, _AT_UPPER, _FREE = 0, 1, 2, 3


class SolverLimitError(RuntimeError):
    """Raised when a solver stops on an iteration or node limit."""

    pass


class IterationLimitError(SolverLimitError):
    """Raised when the simplex exceeds its iteration cap."""

    def __init__(self, iterations: int):
        self.iterations = iterations
        super().__init__(f"Simplex iteration limit reached after {iterations} iterations")

    def __reduce__(self):
        return type(self), (self.iterations,)


class Relation(str, Enum):
    EQ = "="
    LE = "<="
    GE = ">="


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """maximize objective @ x  s.t.  matrix[i] @ x (relation[i]) rhs[i],  lower <= x <= upper."""

    objective: np.ndarray
    matrix: np.ndarray
    relations: tuple[Relation, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        objective = np.asarray(self.objective, dtype=float).reshape(-1)
        n = objective.shape[0]
        matrix = np.asarray(self.matrix, dtype=float).reshape(-1, n)
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        relations = tuple(Relation(r) for r in self.relations)
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)

        if matrix.shape[0] != rhs.shape[0] or len(relations) != rhs.shape[0]:
            raise ValueError("constraint rows, relations and rhs must have the same length")
        if lower.shape != (n,) or upper.shape != (n,):
            raise ValueError("variable bounds must match the objective width")
        if np.any(lower > upper):
            bad = int(np.argmax(lower > upper))
            raise ValueError(f"variable {bad}: lower bound exceeds upper bound")

        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "relations", relations)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_rows(
        cls,
        objective,
        rows: list[tuple[list[float], str, float]],
        bounds: list[tuple[float, float]],
    ) -> "LinearProgram":
        """Build from (coefficients, relation, rhs) rows and (lower, upper) bounds."""
        n = len(objective)
        return cls(
            objective=objective,
            matrix=np.array([r[0] for r in rows], dtype=float).reshape(len(rows), n),
            relations=tuple(r[1] for r in rows),
            rhs=[r[2] for r in rows],
            lower=[b[0] for b in bounds],
            upper=[b[1] for b in bounds],
        )

    @property
    def num_vars(self) -> int:
        """Number of columns."""
        return self.objective.shape[0]

    @property
    def num_rows(self) -> int:
        """Number of constraint rows."""
        return self.rhs.shape[0]

    @property
    def constraints(self) -> list[tuple[np.ndarray, Relation, float]]:
        """(row, relation, rhs) triples in row order."""
        return [
            (self.matrix[i], self.relations[i], float(self.rhs[i])) for i in range(self.num_rows)
        ]

    def with_bounds(self, lower: np.ndarray, upper: np.ndarray) -> "LinearProgram":
        """Same program with other variable bounds."""
        return replace(self, lower=lower, upper=upper)

    def with_objective(self, objective: np.ndarray) -> "LinearProgram":
        """Same program with another objective."""
        return replace(self, objective=objective)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    objective_value: float
    primal: np.ndarray
    iterations: int

    @property
    def is_optimal(self) -> bool:
        """Whether the solve reached an optimum."""
        return self.status == LpStatus.OPTIMAL


@dataclass(frozen=True)
class Residual:
    """One violated constraint row or variable bound."""

    kind: str
    index: int
    magnitude: float

    def __str__(self) -> str:
        return f"{self.kind} {self.index} violated by {self.magnitude:.3g}"


class _Tableau:
    """Working state of one simplex run."""

    def __init__(self, matrix, rhs, lower, upper, basis, state, x, max_iterations):
        self.t = matrix
        self.beta = rhs
        self.lower = lower
        self.upper = upper
        self.basis = basis
        self.state = state
        self.x = x
        self.max_iterations = max_iterations
        self.iterations = 0
        self.degenerate = 0
        self.bland = False
        self.bland_after = 0

    def basic_values(self) -> np.ndarray:
        nonbasic = self.state != _AT_BASIS
        return self.beta - self.t[:, nonbasic] @ self.x[nonbasic]

    def pivot(self, row: int, col: int) -> None:
        t = self.t
        element = t[row, col]
        t[row] /= element
        self.beta[row] /= element
        factors = t[:, col].copy()
        factors[row] = 0.0
        t -= np.outer(factors, t[row])
        self.beta -= factors * self.beta[row]

    def run(self, cost: np.ndarray, eligible: np.ndarray) -> LpStatus:
        """Minimize cost @ x from the current basic feasible point."""
        m = self.t.shape[0]
        while True:
            x_basic = self.basic_values()
            self.x[self.basis] = x_basic
            reduced = cost - cost[self.basis] @ self.t

            movable = eligible & (self.upper > self.lower)
            can_rise = movable & (
                ((self.state == _AT_LOWER) & (reduced < -OPT_TOL))
                | ((self.state == _FREE) & (reduced < -OPT_TOL))
            )
            can_fall = movable & (
                ((self.state == _AT_UPPER) & (reduced > OPT_TOL))
                | ((self.state == _FREE) & (reduced > OPT_TOL))
            )
            candidates = np.flatnonzero(can_rise | can_fall)
            if candidates.size == 0:
                return LpStatus.OPTIMAL

            if self.bland:
                col = int(candidates[0])
            else:
                col = int(candidates[np.argmax(np.abs(reduced[candidates]))])
            direction = 1.0 if can_rise[col] else -1.0

            self.iterations += 1
            if self.iterations > self.max_iterations:
                raise IterationLimitError(self.iterations - 1)

            alpha = self.t[:, col]
            rate = -direction * alpha
            steps = np.full(m, math.inf)
            lower_b = self.lower[self.basis]
            upper_b = self.upper[self.basis]
            falling = rate < -PIVOT_TOL
            rising = rate > PIVOT_TOL
            with np.errstate(invalid="ignore", divide="ignore"):
                steps[falling] = (x_basic[falling] - lower_b[falling]) / -rate[falling]
                steps[rising] = (upper_b[rising] - x_basic[rising]) / rate[rising]
            steps = np.where(np.isnan(steps), math.inf, np.maximum(steps, 0.0))

            flip = self.upper[col] - self.lower[col]
            best = float(steps.min()) if m else math.inf
            step = min(best, flip)
            if math.isinf(step):
                return LpStatus.UNBOUNDED

            if step <= DEGENERATE_STEP:
                self.degenerate += 1
                if not self.bland and self.degenerate >= self.bland_after:
                    self.bland = True
                    logger.debug("Switching to Bland's rule", iterations=self.iterations)

            if flip <= best:
                self.x[col] = self.upper[col] if direction > 0 else self.lower[col]
                self.state[col] = _AT_UPPER if direction > 0 else _AT_LOWER
                continue

            ties = np.flatnonzero(steps <= best + DEGENERATE_STEP)
            if self.bland:
                row = int(ties[np.argmin(self.basis[ties])])
            else:
                row = int(ties[np.argmax(np.abs(alpha[ties]))])

            leaving = int(self.basis[row])
            self.x[col] += direction * step
            if falling[row]:
                self.x[leaving] = self.lower[leaving]
                self.state[leaving] = _AT_LOWER
            else:
                self.x[leaving] = self.upper[leaving]
                self.state[leaving] = _AT_UPPER
            self.pivot(row, col)
            self.basis[row] = col
            self.state[col] = _AT_BASIS


def _presolve(lp: LinearProgram) -> tuple[np.ndarray, list[Relation], np.ndarray] | None:
    """Drop empty rows; None when an empty row is inconsistent."""
    keep = []
    for i in range(lp.num_rows):
        if np.any(lp.matrix[i] != 0.0):
            keep.append(i)
            continue
        rhs, relation = lp.rhs[i], lp.relations[i]
        if relation == Relation.EQ and abs(rhs) > FEAS_TOL:
            return None
        if relation == Relation.LE and rhs < -FEAS_TOL:
            return None
        if relation == Relation.GE and rhs > FEAS_TOL:
            return None
    return lp.matrix[keep], [lp.relations[i] for i in keep], lp.rhs[keep]


def _initial_value(lower: float, upper: float) -> tuple[float, int]:
    if math.isfinite(lower):
        return lower, _AT_LOWER
    if math.isfinite(upper):
        return upper, _AT_UPPER
    return 0.0, _FREE


def solve(lp: LinearProgram, iteration_factor: int = ITERATION_FACTOR) -> LpSolution:
    """Solve `lp` to optimality, or report it infeasible or unbounded."""
    n = lp.num_vars
    max_iterations = iteration_factor * (lp.num_rows + n)

    if np.any(lp.lower > lp.upper + FEAS_TOL):
        return LpSolution(LpStatus.INFEASIBLE, math.nan, np.full(n, math.nan), 0)

    reduced_lp = _presolve(lp)
    if reduced_lp is None:
        return LpSolution(LpStatus.INFEASIBLE, math.nan, np.full(n, math.nan), 0)
    matrix, relations, rhs = reduced_lp
    m = matrix.shape[0]

    # Slack columns: +1 for <= rows, -1 for >= rows
    slack_rows = [i for i, r in enumerate(relations) if r != Relation.EQ]
    slack_cols = np.zeros((m, len(slack_rows)))
    for s, i in enumerate(slack_rows):
        slack_cols[i, s] = 1.0 if relations[i] == Relation.LE else -1.0
    slack_of_row = {i: n + s for s, i in enumerate(slack_rows)}

    full = np.hstack([matrix, slack_cols])
    width = full.shape[1]
    lower = np.concatenate([lp.lower, np.zeros(len(slack_rows))])
    upper = np.concatenate([lp.upper, np.full(len(slack_rows), math.inf)])

    x = np.zeros(width)
    state = np.empty(width, dtype=int)
    for j in range(width):
        x[j], state[j] = _initial_value(lower[j], upper[j])

    residual = rhs - full @ x
    basis = np.empty(m, dtype=int)
    row_sign = np.ones(m)
    artificial_rows = []
    for i in range(m):
        slack = slack_of_row.get(i)
        if slack is not None and full[i, slack] * residual[i] >= 0:
            basis[i] = slack
            row_sign[i] = full[i, slack]
        else:
            artificial_rows.append(i)
            row_sign[i] = 1.0 if residual[i] >= 0 else -1.0

    art_cols = np.zeros((m, len(artificial_rows)))
    for a, i in enumerate(artificial_rows):
        art_cols[i, a] = row_sign[i]
        basis[i] = width + a
    n_art = len(artificial_rows)

    full = np.hstack([full, art_cols])
    lower = np.concatenate([lower, np.zeros(n_art)])
    upper = np.concatenate([upper, np.full(n_art, math.inf)])
    x = np.concatenate([x, np.zeros(n_art)])
    state = np.concatenate([state, np.full(n_art, _AT_BASIS)])
    state[basis] = _AT_BASIS

    tableau = _Tableau(
        matrix=full * row_sign[:, None],
        rhs=rhs * row_sign,
        lower=lower,
        upper=upper,
        basis=basis,
        state=state,
        x=x,
        max_iterations=max_iterations,
    )
    tableau.bland_after = BLAND_FACTOR * (lp.num_rows + n)
    total = full.shape[1]
    artificial = np.zeros(total, dtype=bool)
    artificial[width:] = True

    if n_art:
        phase1_cost = artificial.astype(float)
        tableau.run(phase1_cost, np.ones(total, dtype=bool))
        tableau.x[tableau.basis] = tableau.basic_values()
        infeasibility = float(tableau.x[artificial].sum())
        if infeasibility > FEAS_TOL * max(1.0, float(np.abs(rhs).max(initial=0.0))):
            logger.debug(
                "LP infeasible", infeasibility=infeasibility, iterations=tableau.iterations
            )
            return LpSolution(
                LpStatus.INFEASIBLE, math.nan, np.full(n, math.nan), tableau.iterations
            )
        _drive_out_artificials(tableau, artificial)

    phase2_cost = np.zeros(total)
    phase2_cost[:n] = -lp.objective
    status = tableau.run(phase2_cost, ~artificial)
    tableau.x[tableau.basis] = tableau.basic_values()

    primal = tableau.x[:n].copy()
    if status == LpStatus.UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, math.inf, primal, tableau.iterations)
    return LpSolution(
        LpStatus.OPTIMAL, float(lp.objective @ primal), primal, tableau.iterations
    )


def _drive_out_artificials(tableau: _Tableau, artificial: np.ndarray) -> None:
    """Pivot zero-valued artificials out of the basis and fix them at zero."""
    for row in range(tableau.t.shape[0]):
        if not artificial[tableau.basis[row]]:
            continue
        entries = np.abs(tableau.t[row]) * (~artificial) * (tableau.state != _AT_BASIS)
        col = int(np.argmax(entries))
        if entries[col] > PIVOT_TOL:
            leaving = int(tableau.basis[row])
            tableau.pivot(row, col)
            tableau.basis[row] = col
            tableau.state[col] = _AT_BASIS
            tableau.x[leaving] = 0.0
            tableau.state[leaving] = _AT_LOWER
        # Otherwise the row is redundant and its artificial stays basic at zero
    tableau.upper[artificial] = 0.0
    tableau.x[tableau.basis] = tableau.basic_values()


def check_solution(lp: LinearProgram, sol: LpSolution, tol: float = FEAS_TOL) -> list[Residual]:
    """Recompute row residuals and bound violations of `sol`; empty means feasible."""
    x = np.asarray(sol.primal, dtype=float)
    residuals: list[Residual] = []
    activity = lp.matrix @ x
    for i, relation in enumerate(lp.relations):
        gap = activity[i] - lp.rhs[i]
        if relation == Relation.EQ:
            violation = abs(gap)
        elif relation == Relation.LE:
            violation = max(gap, 0.0)
        else:
            violation = max(-gap, 0.0)
        if violation > tol:
            residuals.append(Residual("row", i, float(violation)))
    below = lp.lower - x
    above = x - lp.upper
    for j in range(lp.num_vars):
        violation = max(below[j], above[j], 0.0)
        if violation > tol:
            residuals.append(Residual("bound", j, float(violation)))
    return residuals


def _fmt_bound(value: float) -> str:
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    return f"{value:g}"


def dump_lp(lp: LinearProgram) -> str:
    """Plain-text standard form, one row per line."""

    def terms(coefs) -> str:
        return " ".join(f"{c:+g} x{j}" for j, c in enumerate(coefs) if c != 0.0) or "0"

    lines = [f"max: {terms(lp.objective)}", "subject to:"]
    for i, (coefs, relation, rhs) in enumerate(lp.constraints):
        lines.append(f"  r{i}: {terms(coefs)} {relation.value} {rhs:g}")
    lines.append("bounds:")
    for j in range(lp.num_vars):
        lines.append(f"  {_fmt_bound(lp.lower[j])} <= x{j} <= {_fmt_bound(lp.upper[j])}")
    return "\n".join(lines) + "\n"
