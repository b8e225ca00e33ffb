"""End-to-end tests for the command-line entry point."""

import csv
import json
import logging
from pathlib import Path

import pytest
import structlog

from relnet.main import (
    EXIT_INTERRUPTED,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_SOLVER_LIMIT,
    RUNNERS,
    Command,
    RunConfig,
    main,
    parse_budgets,
    run,
)
from relnet.reliability import ScenarioEvaluationError
from relnet.solvers.milp import NodeLimitError
from tests.conftest import DATA_DIR, PUMP_RELIABILITY, ROOT

PUMP = str(DATA_DIR / "pump.json")
THREE_NODE = str(DATA_DIR / "3node.json")


@pytest.fixture(autouse=True)
def isolated(monkeypatch, tmp_path):
    for name in ("SEED", "SAMPLES", "WORKERS", "NODE_LIMIT", "CASES_CONFIG_PATH", "LOG_LEVEL"):
        monkeypatch.delenv(f"RELNET_{name}", raising=False)
    monkeypatch.chdir(tmp_path)
    root = logging.getLogger()
    handlers = list(root.handlers)
    yield
    root.handlers = handlers
    structlog.reset_defaults()


def invoke(capsys, *argv: str) -> tuple[int, str]:
    with pytest.raises(SystemExit) as exc_info:
        main(list(argv))
    return exc_info.value.code, capsys.readouterr().out


class TestEval:
    def test_json_on_stdout(self, capsys):
        code, out = invoke(capsys, "eval", "--network", PUMP, "--samples", "300", "--no-timings")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["samples"] == 300
        assert data["seconds"] == 0.0
        assert data["R"] == pytest.approx(PUMP_RELIABILITY, abs=0.08)

    def test_same_output_for_any_worker_count(self, capsys):
        args = ("eval", "--network", THREE_NODE, "--samples", "120", "--seed", "5", "--no-timings")
        _, serial = invoke(capsys, *args, "--workers", "1")
        _, pooled = invoke(capsys, *args, "--workers", "2")
        assert serial == pooled

    def test_relaxed_mode_matches_milp(self, capsys):
        args = ("eval", "--network", THREE_NODE, "--samples", "80", "--no-timings")
        _, milp = invoke(capsys, *args, "--mode", "milp")
        _, relaxed = invoke(capsys, *args, "--mode", "relaxed")
        assert json.loads(milp)["R"] == json.loads(relaxed)["R"]

    def test_environment_seed_wins(self, capsys, monkeypatch):
        args = ("eval", "--network", THREE_NODE, "--samples", "100", "--no-timings")
        _, expected = invoke(capsys, *args, "--seed", "7")
        monkeypatch.setenv("RELNET_SEED", "7")
        _, overridden = invoke(capsys, *args, "--seed", "1")
        assert overridden == expected

    def test_output_files(self, capsys, tmp_path):
        code, out = invoke(
            capsys,
            "eval",
            "--network",
            THREE_NODE,
            "--samples",
            "40",
            "--output",
            str(tmp_path / "r.json"),
            "--export-scenarios",
            str(tmp_path / "s.json"),
            "--outcomes",
            str(tmp_path / "o.jsonl"),
        )
        assert code == EXIT_OK
        assert out == ""
        assert "R" in json.loads((tmp_path / "r.json").read_text(encoding="utf-8"))
        assert len(json.loads((tmp_path / "s.json").read_text(encoding="utf-8"))) == 40
        assert len((tmp_path / "o.jsonl").read_text(encoding="utf-8").splitlines()) == 40

    def test_imported_scenarios(self, capsys, tmp_path):
        exported = tmp_path / "s.json"
        args = ("eval", "--network", THREE_NODE, "--samples", "50", "--no-timings")
        _, first = invoke(capsys, *args, "--export-scenarios", str(exported))
        _, second = invoke(capsys, *args, "--scenarios", str(exported))
        assert first == second


class TestExitCodes:
    def test_missing_network_file(self, capsys, tmp_path):
        code, _ = invoke(capsys, "eval", "--network", str(tmp_path / "absent.json"))
        assert code == EXIT_INVALID

    def test_malformed_network(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"name": "bad", "nodes": [', encoding="utf-8")
        code, _ = invoke(capsys, "eval", "--network", str(path))
        assert code == EXIT_INVALID

    def test_network_required(self, capsys):
        code, _ = invoke(capsys, "eval")
        assert code == EXIT_INVALID

    def test_pareto_needs_budgets(self, capsys):
        code, _ = invoke(capsys, "pareto", "--network", THREE_NODE)
        assert code == EXIT_INVALID

    def test_node_limit(self, capsys):
        code, out = invoke(
            capsys, "eval", "--network", PUMP, "--samples", "20", "--node-limit", "0"
        )
        assert code == EXIT_SOLVER_LIMIT
        assert out == ""

    def test_interrupt(self, capsys, monkeypatch):
        def interrupted(config):
            raise KeyboardInterrupt

        monkeypatch.setitem(RUNNERS, Command.EVAL, interrupted)
        code, _ = invoke(capsys, "eval", "--network", PUMP)
        assert code == EXIT_INTERRUPTED


class TestRunMapping:
    @pytest.fixture
    def config(self) -> RunConfig:
        return RunConfig(Command.EVAL, network_path=Path("net.json"))

    @staticmethod
    def raising(error: BaseException, cause: BaseException | None = None):
        def runner(config):
            raise error from cause

        return runner

    def test_solver_limit(self, monkeypatch, config):
        monkeypatch.setitem(RUNNERS, Command.EVAL, self.raising(NodeLimitError(5, None)))
        assert run(config) == EXIT_SOLVER_LIMIT

    def test_wrapped_solver_limit(self, monkeypatch, config):
        runner = self.raising(ScenarioEvaluationError(3, "stopped"), NodeLimitError(5, None))
        monkeypatch.setitem(RUNNERS, Command.EVAL, runner)
        assert run(config) == EXIT_SOLVER_LIMIT

    def test_other_scenario_failure(self, monkeypatch, config):
        runner = self.raising(ScenarioEvaluationError(3, "broken"), ZeroDivisionError())
        monkeypatch.setitem(RUNNERS, Command.EVAL, runner)
        assert run(config) == EXIT_INVALID

    def test_success(self, monkeypatch, config):
        monkeypatch.setitem(RUNNERS, Command.EVAL, lambda config: None)
        assert run(config) == EXIT_OK


class TestConfig:
    def test_run_config_checks(self):
        with pytest.raises(ValueError, match="exactly one budget"):
            RunConfig(Command.DESIGN, network_path=Path("n.json"))
        with pytest.raises(ValueError, match="RBD file"):
            RunConfig(Command.RBD)
        with pytest.raises(ValueError, match="workers"):
            RunConfig(Command.EVAL, network_path=Path("n.json"), workers=0)

    def test_parse_budgets(self):
        assert parse_budgets("0, 20,40,") == [0.0, 20.0, 40.0]
        with pytest.raises(ValueError, match="comma-separated"):
            parse_budgets("0,ten")


class TestDesignCommands:
    def test_design(self, capsys):
        code, out = invoke(
            capsys,
            "design",
            "--network",
            THREE_NODE,
            "--budget",
            "20",
            "--samples",
            "30",
            "--no-timings",
        )
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["budget"] == 20.0
        assert data["cost"] <= 20.0 + 1e-6
        assert data["solve_seconds"] == 0.0
        assert data["evaluate_seconds"] == 0.0
        assert [e["id"] for e in data["network"]["edges"]] == ["l1", "l12", "l12b", "l13", "l23"]

    def test_pareto_both_modes(self, capsys, tmp_path):
        output = tmp_path / "results" / "frontier.csv"
        code, _ = invoke(
            capsys,
            "pareto",
            "--network",
            THREE_NODE,
            "--budgets",
            "0,20",
            "--samples",
            "30",
            "--mode",
            "both",
            "--output",
            str(output),
            "--no-timings",
        )
        assert code == EXIT_OK
        with open(output, encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
        assert [r["epsilon"] for r in rows] == ["0", "20"]
        assert all(r["milp_seconds"] == "0.0000" for r in rows)
        assert float(rows[1]["reliability_lp"]) <= float(rows[1]["reliability_milp"]) + 1e-9
        designs = sorted(p.name for p in (output.parent / "frontier_designs").iterdir())
        assert designs == [
            "eps_0_milp.json",
            "eps_0_relaxed.json",
            "eps_20_milp.json",
            "eps_20_relaxed.json",
        ]

    def test_case_defaults(self, capsys, monkeypatch, tmp_path):
        monkeypatch.setenv("RELNET_CASES_CONFIG_PATH", str(ROOT / "cases.yaml"))
        code, out = invoke(capsys, "rbd", "--case", "pump", "--samples", "400")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["analytic"] == pytest.approx(PUMP_RELIABILITY, abs=1e-6)
        assert data["abs_diff"] < 0.08

    def test_rbd_file(self, capsys):
        code, out = invoke(
            capsys, "rbd", "--rbd", str(DATA_DIR / "pump_rbd.json"), "--samples", "200"
        )
        assert code == EXIT_OK
        assert json.loads(out)["abs_diff"] == pytest.approx(
            abs(json.loads(out)["monte_carlo"] - PUMP_RELIABILITY), abs=1e-6
        )


@pytest.mark.slow
class TestAcceptance:
    def test_pump_rbd_agreement(self, capsys):
        code, out = invoke(
            capsys, "rbd", "--rbd", str(DATA_DIR / "pump_rbd.json"), "--samples", "10000"
        )
        assert code == EXIT_OK
        assert json.loads(out)["abs_diff"] <= 0.01

    def test_ieee14_capacity_sweep(self, capsys, monkeypatch, tmp_path):
        monkeypatch.setenv("RELNET_CASES_CONFIG_PATH", str(ROOT / "cases.yaml"))
        code, _ = invoke(
            capsys,
            "pareto",
            "--case",
            "ieee14-capacity",
            "--budgets",
            "0,200,1800",
            "--output",
            str(tmp_path / "ieee14.csv"),
        )
        assert code == EXIT_OK
        with open(tmp_path / "ieee14.csv", encoding="utf-8", newline="") as f:
            values = [float(r["reliability_milp"]) for r in csv.DictReader(f)]
        assert values[0] == 0.0
        assert values == sorted(values)
