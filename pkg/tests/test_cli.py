import json
import re

import pytest

from contract_learn.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def workspace(tmp_path, capsys):
    code, _, _ = run_cli(
        capsys, "gen", "--m", "2", "--n", "2", "--k", "30",
        "--seed", "3", "--out", str(tmp_path),
    )
    assert code == 0
    return tmp_path


class TestGen:
    def test_writes_scenario_and_logs(self, workspace):
        assert (workspace / "scenario.json").exists()
        logs = (workspace / "logs.jsonl").read_text().strip().splitlines()
        assert len(logs) == 30


class TestValidate:
    def test_true_setting_consistent(self, workspace, capsys):
        code, out, _ = run_cli(
            capsys, "validate",
            "--scenario", str(workspace / "scenario.json"),
            "--logs", str(workspace / "logs.jsonl"),
        )
        assert code == 0
        assert "consistent" in out

    def test_perturbed_setting_flagged(self, workspace, capsys):
        scenario = json.loads((workspace / "scenario.json").read_text())
        bad = {"P": scenario["P"], "c": [c + 5.0 for c in scenario["c"]]}
        bad_path = workspace / "bad_setting.json"
        bad_path.write_text(json.dumps(bad))
        code, out, _ = run_cli(
            capsys, "validate",
            "--scenario", str(workspace / "scenario.json"),
            "--logs", str(workspace / "logs.jsonl"),
            "--setting", str(bad_path),
        )
        assert code == 1
        assert "inconsistent" in out


class TestSeedSolveAndOptimize:
    def test_seed_solve_writes_inferred(self, workspace, capsys):
        code, out, _ = run_cli(
            capsys, "seed-solve",
            "--scenario", str(workspace / "scenario.json"),
            "--logs", str(workspace / "logs.jsonl"),
            "--n-hat", "2", "--out", str(workspace),
        )
        assert code == 0
        inferred = json.loads((workspace / "inferred.json").read_text())
        assert len(inferred["P"]) <= 2

    def test_optimize_writes_contract(self, workspace, capsys):
        code, out, _ = run_cli(
            capsys, "optimize",
            "--scenario", str(workspace / "scenario.json"),
            "--out", str(workspace),
        )
        assert code == 0
        contract = json.loads((workspace / "contract.json").read_text())
        assert "payments" in contract and "target_action" in contract


class TestBandit:
    def test_trace_csv_written(self, workspace, capsys):
        code, out, _ = run_cli(
            capsys, "bandit",
            "--scenario", str(workspace / "scenario.json"),
            "--rounds", "30", "--grid-size", "5", "--out", str(workspace),
        )
        assert code == 0
        lines = (workspace / "bandit_trace.csv").read_text().strip().splitlines()
        assert lines[0] == "round,arm_index,beta,reward"
        assert len(lines) == 31


class TestEvolveCli:
    def test_mock_run_is_deterministic(self, workspace, capsys, tmp_path):
        digests = []
        for attempt in range(2):
            out_dir = tmp_path / f"run{attempt}"
            code, out, _ = run_cli(
                capsys, "evolve",
                "--scenario", str(workspace / "scenario.json"),
                "--logs", str(workspace / "logs.jsonl"),
                "--llm", "mock", "--iters", "14", "--seed", "5",
                "--out", str(out_dir),
            )
            assert code == 0
            digests.append(re.search(r"history digest (\w+)", out).group(1))
            assert (out_dir / "history.json").exists()
        assert digests[0] == digests[1]


class TestBenchAndReport:
    def test_three_method_rows(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "bench", "--m", "2", "--n", "2", "--k", "20",
            "--methods", "seed,bandit,oracle", "--rounds", "40",
            "--seed", "2", "--out", str(tmp_path),
        )
        assert code == 0
        lines = (tmp_path / "results.csv").read_text().strip().splitlines()
        assert len(lines) == 4  # header + one row per method
        methods = [line.split(",")[1] for line in lines[1:]]
        assert methods == ["seed", "bandit", "oracle"]
        artifacts = list((tmp_path / "rows").glob("*.json"))
        assert len(artifacts) == 3

    def test_report_summarizes(self, tmp_path, capsys):
        run_cli(
            capsys, "bench", "--m", "2", "--n", "2", "--k", "10",
            "--methods", "oracle", "--seed", "1", "--out", str(tmp_path),
        )
        code, out, _ = run_cli(capsys, "report", str(tmp_path / "results.csv"))
        assert code == 0
        assert "oracle" in out

    def test_usage_error_exit_code(self, tmp_path, capsys):
        code, out, err = run_cli(
            capsys, "validate",
            "--scenario", str(tmp_path / "missing.json"),
            "--logs", str(tmp_path / "missing.jsonl"),
        )
        assert code == 2
        assert "error" in err
