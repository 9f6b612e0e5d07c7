import csv
import shutil

import numpy as np
import pytest

from contract_learn.baselines import (
    bandit_run,
    build_linear_arm_grid,
    write_bandit_trace,
    zero_shot_transfer,
)
from contract_learn.design import optimize_contract
from contract_learn.evolution.loop import SolverCandidate
from contract_learn.evolution.runner import StubSeedRunner
from contract_learn.evolution.seed import SEED_SOLVER_SOURCE
from contract_learn.inference import seed_solve
from contract_learn.model import Contract, OutcomeSpace, principal_utility

from conftest import make_logs, make_sim_scenario


class TestArmGrid:
    def test_eleven_arms(self):
        outcomes = OutcomeSpace.from_valuations([0.0, 1.0])
        arms = build_linear_arm_grid(outcomes, 11)
        assert len(arms) == 11
        for j, arm in enumerate(arms):
            assert np.allclose(arm.payments, j / 10 * outcomes.valuations)

    def test_single_arm_is_zero(self):
        outcomes = OutcomeSpace.from_valuations([2.0, 3.0])
        arms = build_linear_arm_grid(outcomes, 1)
        assert len(arms) == 1
        assert np.all(arms[0].payments == 0.0)

    def test_arms_nonnegative(self):
        outcomes = OutcomeSpace.from_valuations([0.0, 5.0, 1.0])
        for arm in build_linear_arm_grid(outcomes, 6):
            assert np.all(arm.payments >= 0.0)

    def test_expected_payment_monotone_in_beta(self, diag_setting):
        outcomes = OutcomeSpace.from_valuations([0.5, 1.0])
        arms = build_linear_arm_grid(outcomes, 8)
        for n in range(diag_setting.n_count):
            paid = [float(diag_setting.p_matrix[n] @ a.payments) for a in arms]
            assert paid == sorted(paid)


class TestBanditRun:
    def test_single_arm_returned(self, diag_scenario):
        result = bandit_run(
            diag_scenario.setting, diag_scenario.outcomes, diag_scenario.market,
            rounds=5, grid_size=1,
        )
        assert result.best_arm == 0
        assert np.all(result.best_contract.payments == 0.0)

    def test_initialization_pulls_each_arm_once(self, diag_scenario):
        result = bandit_run(
            diag_scenario.setting, diag_scenario.outcomes, diag_scenario.market,
            rounds=11, grid_size=11,
        )
        assert np.all(result.state.pull_counts == 1)

    def test_deterministic_two_arm_separation(self, diag_scenario):
        good = Contract([0.0, 0.5])
        zero = Contract([0.0, 0.0])
        result = bandit_run(
            diag_scenario.setting, diag_scenario.outcomes, diag_scenario.market,
            rounds=2000, arms=[good, zero],
        )
        assert result.best_arm == 0
        final = [row.arm_index for row in result.trace[-100:]]
        assert final.count(0) >= 95

    def test_trace_is_replayable(self, diag_scenario):
        result = bandit_run(
            diag_scenario.setting, diag_scenario.outcomes, diag_scenario.market,
            rounds=40, grid_size=5,
        )
        arms = build_linear_arm_grid(diag_scenario.outcomes, 5)
        assert len(result.trace) == 40
        for row in result.trace:
            expected = principal_utility(
                arms[row.arm_index], diag_scenario.setting, diag_scenario.market,
                diag_scenario.outcomes,
            )
            assert row.reward == pytest.approx(expected)

    def test_rounds_below_arm_count_rejected(self, diag_scenario):
        with pytest.raises(ValueError, match="at least"):
            bandit_run(
                diag_scenario.setting, diag_scenario.outcomes, diag_scenario.market,
                rounds=3, grid_size=11,
            )

    def test_trace_csv(self, tmp_path, diag_scenario):
        result = bandit_run(
            diag_scenario.setting, diag_scenario.outcomes, diag_scenario.market,
            rounds=12, grid_size=3,
        )
        path = tmp_path / "trace.csv"
        write_bandit_trace(result.trace, path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["round", "arm_index", "beta", "reward"]
        assert len(rows) == 13


class TestZeroShotTransfer:
    def test_seed_source_equals_seed_pipeline(self):
        scenario = make_sim_scenario(2, 2, 3)
        logs = make_logs(scenario, 40, 11)
        candidate = SolverCandidate(0, SEED_SOLVER_SOURCE, "seed")
        solution = zero_shot_transfer(
            candidate, logs, scenario.outcomes, scenario.market, StubSeedRunner(n_hat=7)
        )
        inferred = seed_solve(logs, scenario.outcomes, scenario.market, 7, rng_seed=0)
        direct = optimize_contract(inferred, scenario.outcomes, scenario.market)
        assert solution.failure_reason is None
        fitness = principal_utility(
            solution.contract, scenario.setting, scenario.market, scenario.outcomes
        )
        direct_fitness = principal_utility(
            direct.contract, scenario.setting, scenario.market, scenario.outcomes
        )
        assert fitness == pytest.approx(direct_fitness, abs=1e-3)

    def test_crashing_candidate_scores_zero_with_flag(self):
        scenario = make_sim_scenario(2, 2, 3)
        logs = make_logs(scenario, 10, 11)
        bad = SolverCandidate(0, "raise RuntimeError('boom')", "seed")
        runner = StubSeedRunner(
            overrides={bad.source_text: np.array([[float("nan"), 1.0, 0.0]])}
        )
        solution = zero_shot_transfer(
            bad, logs, scenario.outcomes, scenario.market, runner
        )
        assert solution.is_null
        assert solution.failure_reason is not None
        assert np.all(solution.contract.payments == 0.0)

    def test_empty_target_logs_fail_soft(self):
        scenario = make_sim_scenario(2, 2, 3)
        candidate = SolverCandidate(0, SEED_SOLVER_SOURCE, "seed")
        solution = zero_shot_transfer(
            candidate, [], scenario.outcomes, scenario.market, StubSeedRunner()
        )
        assert solution.is_null
        assert solution.failure_reason is not None

    @pytest.mark.skipif(
        shutil.which("sandbox-runner") is None, reason="sandbox-runner not installed"
    )
    def test_cross_implementation_through_sandbox(self):
        from contract_learn.evolution.runner import SandboxCliRunner

        # instance small enough that clustering is exact in both pipelines
        scenario = make_sim_scenario(2, 3, 4)
        logs = make_logs(scenario, 7, 54)
        candidate = SolverCandidate(0, SEED_SOLVER_SOURCE, "seed")
        solution = zero_shot_transfer(
            candidate, logs, scenario.outcomes, scenario.market,
            SandboxCliRunner(timeout=60.0),
        )
        assert solution.failure_reason is None
        fitness = principal_utility(
            solution.contract, scenario.setting, scenario.market, scenario.outcomes
        )
        inferred = seed_solve(logs, scenario.outcomes, scenario.market, 7, rng_seed=0)
        direct = optimize_contract(inferred, scenario.outcomes, scenario.market)
        direct_fitness = principal_utility(
            direct.contract, scenario.setting, scenario.market, scenario.outcomes
        )
        assert fitness == pytest.approx(direct_fitness, abs=1e-3)
