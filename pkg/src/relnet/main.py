"""relnet - command-line entry point."""

import argparse
import json
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import structlog

from relnet import __version__
from relnet.cases import CaseRegistry
from relnet.config import get_settings
from relnet.design import (
    DesignProblem,
    frontier_rows,
    pareto_sweep,
    solve_design,
    write_pareto_csv,
)
from relnet.network.graph import promote_to_candidates
from relnet.network.io import load_json, load_network, write_json
from relnet.rbd import eval_rbd, parse_rbd, rbd_eval_time, rbd_to_network
from relnet.reliability import (
    LogicSpec,
    ScenarioEvaluationError,
    estimate_reliability,
    write_outcomes_jsonl,
)
from relnet.scenario import sample_scenarios, scenarios_from_json, scenarios_to_json
from relnet.solvers.lp import SolverLimitError
from relnet.utils import setup_logging

logger = structlog.get_logger()

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER_LIMIT = 2
EXIT_INTERRUPTED = 130

DEFAULT_SEED = 0
DEFAULT_THRESHOLD = 5.0


class Command(str, Enum):
    EVAL = "eval"
    DESIGN = "design"
    PARETO = "pareto"
    RBD = "rbd"


class Mode(str, Enum):
    MILP = "milp"
    RELAXED = "relaxed"
    BOTH = "both"


@dataclass
class RunConfig:
    """Everything one CLI invocation needs, after flags, case and settings are merged."""

    command: Command
    network_path: Path | None = None
    samples: int = 1000
    seed: int = DEFAULT_SEED
    threshold_years: float = DEFAULT_THRESHOLD
    mode: Mode = Mode.MILP
    budgets: list[float] = field(default_factory=list)
    logic: LogicSpec = field(default_factory=LogicSpec)
    output_path: Path | None = None
    workers: int = 1
    node_limit: int = 20000
    topology: bool = False
    all_candidates: bool = False
    edge_capital_cost: float = 100.0
    rbd_path: Path | None = None
    scenarios_path: Path | None = None
    export_scenarios: Path | None = None
    outcomes_path: Path | None = None
    include_timings: bool = True

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.command == Command.PARETO and not self.budgets:
            raise ValueError("pareto needs a nonempty budget list")
        if self.command == Command.DESIGN and len(self.budgets) != 1:
            raise ValueError("design needs exactly one budget")
        if self.command == Command.RBD and self.rbd_path is None:
            raise ValueError("rbd needs an RBD file (--rbd or a case with one)")
        if self.command != Command.RBD and self.network_path is None:
            raise ValueError("a network file is required (--network or --case)")


def parse_budgets(text: str) -> list[float]:
    """Comma-separated budgets; empty items are skipped."""
    try:
        return [float(b) for b in text.split(",") if b.strip()]
    except ValueError:
        raise ValueError(f"budgets must be comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per Command."""
    parser = argparse.ArgumentParser(
        prog="relnet",
        description="Network reliability estimation and reliability-optimal design.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--network", type=Path, help="network JSON file")
    common.add_argument("--case", help="bundled case study name (see cases.yaml)")
    common.add_argument("--samples", type=int, help="number of MC scenarios")
    common.add_argument("--seed", type=int, help="scenario seed (RELNET_SEED wins)")
    common.add_argument("--threshold", type=float, help="evaluation time in years")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--node-limit", type=int, help="branch-and-bound node limit")
    common.add_argument("--required", help="comma-separated sinks that must be served")
    common.add_argument("--output", type=Path, help="result file (stdout when omitted)")
    common.add_argument("--log-level", help="logging level")
    common.add_argument(
        "--no-timings", action="store_true", help="write zero for timing fields"
    )

    sub = parser.add_subparsers(dest="command", required=True)

    eval_cmd = sub.add_parser("eval", parents=[common], help="estimate reliability")
    eval_cmd.add_argument("--mode", choices=["milp", "relaxed"], default="milp")
    eval_cmd.add_argument("--scenarios", type=Path, help="import scenarios from JSON")
    eval_cmd.add_argument("--export-scenarios", type=Path, help="write scenarios to JSON")
    eval_cmd.add_argument("--outcomes", type=Path, help="write per-scenario JSON lines")

    for name, help_text in (("design", "solve one budget"), ("pareto", "sweep budgets")):
        cmd = sub.add_parser(name, parents=[common], help=help_text)
        modes = ["milp", "relaxed"] if name == "design" else ["milp", "relaxed", "both"]
        cmd.add_argument("--mode", choices=modes, default="milp")
        if name == "design":
            cmd.add_argument("--budget", type=float, required=True)
        else:
            cmd.add_argument("--budgets", type=parse_budgets, help="comma-separated budgets")
        cmd.add_argument("--topology", action="store_true", help="design candidate edges too")
        cmd.add_argument(
            "--all-candidates",
            action="store_true",
            help="treat every edge as a purchasable candidate",
        )
        cmd.add_argument("--capital-cost", type=float, default=100.0)

    rbd_cmd = sub.add_parser("rbd", parents=[common], help="compare analytic and MC RBD value")
    rbd_cmd.add_argument("--rbd", type=Path, help="RBD JSON file")

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge flags, an optional case and settings; RELNET_SEED beats --seed."""
    settings = get_settings()
    case = None
    if args.case:
        registry = CaseRegistry()
        registry.load_from_yaml(settings.cases_config_path)
        case = registry.get(args.case)

    command = Command(args.command)
    budgets: list[float] = []
    if command == Command.DESIGN:
        budgets = [args.budget]
    elif command == Command.PARETO:
        budgets = args.budgets or (case.budgets if case else [])

    threshold = args.threshold
    if threshold is None:
        threshold = case.threshold if case else DEFAULT_THRESHOLD

    seed = settings.seed if settings.seed is not None else args.seed
    samples = args.samples
    if samples is None:
        samples = case.samples if case else settings.samples
    required = [s.strip() for s in (args.required or "").split(",") if s.strip()]

    return RunConfig(
        command=command,
        network_path=args.network or (case.network if case else None),
        samples=samples,
        seed=DEFAULT_SEED if seed is None else seed,
        threshold_years=threshold,
        mode=Mode(getattr(args, "mode", "milp")),
        budgets=budgets,
        logic=LogicSpec.subset(required) if required else LogicSpec(),
        output_path=args.output,
        workers=settings.workers if args.workers is None else args.workers,
        node_limit=settings.node_limit if args.node_limit is None else args.node_limit,
        topology=getattr(args, "topology", False) or bool(case and case.topology),
        all_candidates=getattr(args, "all_candidates", False) or bool(case and case.topology),
        edge_capital_cost=getattr(args, "capital_cost", 100.0),
        rbd_path=getattr(args, "rbd", None) or (case.rbd if case else None),
        scenarios_path=getattr(args, "scenarios", None),
        export_scenarios=getattr(args, "export_scenarios", None),
        outcomes_path=getattr(args, "outcomes", None),
        include_timings=not args.no_timings,
    )


def _emit(data: dict, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(json.dumps(data, indent=2) + "\n")
    else:
        write_json(data, path)
        logger.info("Wrote result", path=str(path))


def _run_eval(config: RunConfig) -> None:
    """Reliability of the base network; candidate edges count as not bought."""
    network = load_network(config.network_path)
    if config.scenarios_path is not None:
        scenarios = scenarios_from_json(
            load_json(config.scenarios_path), network, config.threshold_years, config.seed
        )
    else:
        scenarios = sample_scenarios(
            network, config.samples, config.threshold_years, config.seed
        )
    if config.export_scenarios is not None:
        write_json(scenarios_to_json(scenarios), config.export_scenarios)

    estimate = estimate_reliability(
        network,
        scenarios,
        config.logic,
        use_milp=config.mode == Mode.MILP,
        active_candidates=np.zeros(len(network.candidate_edges)),
        workers=config.workers,
        node_limit=config.node_limit,
    )
    if config.outcomes_path is not None:
        write_outcomes_jsonl(estimate, config.outcomes_path)
    _emit(estimate.to_json(config.include_timings), config.output_path)


def _design_problem(config: RunConfig, relaxed: bool) -> DesignProblem:
    network = load_network(config.network_path)
    if config.all_candidates:
        network = promote_to_candidates(network, config.edge_capital_cost)
    scenarios = sample_scenarios(network, config.samples, config.threshold_years, config.seed)
    return DesignProblem(
        network=network,
        scenarios=scenarios,
        budget=config.budgets[0],
        enable_topology=config.topology,
        edge_capital_cost=config.edge_capital_cost,
        logic=config.logic,
        relaxed=relaxed,
        node_limit=config.node_limit,
        workers=config.workers,
    )


def _run_design(config: RunConfig) -> None:
    problem = _design_problem(config, relaxed=config.mode == Mode.RELAXED)
    result = solve_design(problem)
    _emit(result.to_json(problem.network, config.include_timings), config.output_path)


def _run_pareto(config: RunConfig) -> None:
    output = config.output_path or Path("pareto.csv")
    problem = _design_problem(config, relaxed=False)
    frontiers = {}
    if config.mode in (Mode.MILP, Mode.BOTH):
        frontiers[Mode.MILP] = pareto_sweep(problem, config.budgets)
    if config.mode in (Mode.RELAXED, Mode.BOTH):
        frontiers[Mode.RELAXED] = pareto_sweep(problem.with_relaxed(True), config.budgets)

    write_pareto_csv(
        frontier_rows(frontiers.get(Mode.MILP), frontiers.get(Mode.RELAXED)),
        output,
        include_timings=config.include_timings,
    )
    design_dir = output.with_name(f"{output.stem}_designs")
    for mode, frontier in frontiers.items():
        for point in frontier:
            if point.ok:
                write_json(
                    point.result.to_json(problem.network, config.include_timings),
                    design_dir / f"eps_{point.budget:g}_{mode.value}.json",
                )


def _run_rbd(config: RunConfig) -> None:
    data = load_json(config.rbd_path)
    eval_time = rbd_eval_time(data)
    threshold = eval_time if eval_time is not None else config.threshold_years
    expr = parse_rbd(data, threshold)
    analytic = eval_rbd(expr)

    network = rbd_to_network(expr, name=config.rbd_path.stem)
    scenarios = sample_scenarios(network, config.samples, threshold, config.seed)
    estimate = estimate_reliability(network, scenarios, workers=config.workers)
    _emit(
        {
            "analytic": analytic,
            "monte_carlo": estimate.value,
            "abs_diff": abs(estimate.value - analytic),
        },
        config.output_path,
    )


RUNNERS = {
    Command.EVAL: _run_eval,
    Command.DESIGN: _run_design,
    Command.PARETO: _run_pareto,
    Command.RBD: _run_rbd,
}


def _solver_limited(error: BaseException) -> bool:
    while error is not None:
        if isinstance(error, SolverLimitError):
            return True
        error = error.__cause__
    return False


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    logger.info(
        "Starting run",
        command=config.command.value,
        network=str(config.network_path) if config.network_path else None,
        samples=config.samples,
        seed=config.seed,
        workers=config.workers,
    )
    try:
        RUNNERS[config.command](config)
    except ScenarioEvaluationError as e:
        logger.error("Scenario evaluation failed", k=e.k, error=str(e))
        return EXIT_SOLVER_LIMIT if _solver_limited(e) else EXIT_INVALID
    except SolverLimitError as e:
        logger.error("Solver limit reached", error=str(e))
        return EXIT_SOLVER_LIMIT
    except FileNotFoundError as e:
        logger.error("File not found", error=str(e))
        return EXIT_INVALID
    except ValueError as e:
        logger.error("Invalid input", error=str(e))
        return EXIT_INVALID
    return EXIT_OK


def main(argv: list[str] | None = None) -> None:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    setup_logging(args.log_level or settings.log_level)

    try:
        config = config_from_args(args)
        code = run(config)
    except KeyboardInterrupt:
        logger.info("Run stopped by user")
        code = EXIT_INTERRUPTED
    except (ValueError, FileNotFoundError) as e:
        logger.error("Invalid configuration", error=str(e))
        code = EXIT_INVALID
    except Exception as e:
        logger.exception("Run crashed", error=str(e))
        code = EXIT_INVALID
    sys.exit(code)


if __name__ == "__main__":
    main()
