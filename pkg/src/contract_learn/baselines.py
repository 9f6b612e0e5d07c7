"""Comparison methods: a UCB1 bandit over linear contracts, and zero-shot
transfer of a previously evolved solver to a new scenario.

The bandit posts contracts from a finite menu of scaled valuation vectors
(beta * q), the standard bounded family spanning the null contract up to
full surplus transfer, and learns the best arm from realized utilities.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .design import ContractSolution, optimize_contract
from .evolution.loop import SolverCandidate
from .evolution.runner import (
    SolverExecutionError,
    SolverRunner,
    logs_to_wire,
    setting_from_matrix,
)
from .model import (
    AgentSetting,
    Contract,
    InteractionLog,
    MarketParams,
    OutcomeSpace,
    principal_utility,
    simulate_interaction,
)

__all__ = [
    "BanditState",
    "BanditTraceRow",
    "BanditRunResult",
    "build_linear_arm_grid",
    "bandit_run",
    "write_bandit_trace",
    "zero_shot_transfer",
]


@dataclass
class BanditState:
    arms: list[Contract]
    betas: list[float]
    pull_counts: np.ndarray
    mean_rewards: np.ndarray
    round: int = 0

    def update(self, arm: int, reward: float) -> None:
        self.round += 1
        self.pull_counts[arm] += 1
        n = self.pull_counts[arm]
        self.mean_rewards[arm] += (reward - self.mean_rewards[arm]) / n


@dataclass(frozen=True)
class BanditTraceRow:
    round: int
    arm_index: int
    beta: float
    reward: float


@dataclass
class BanditRunResult:
    best_contract: Contract
    best_arm: int
    trace: list[BanditTraceRow]
    state: BanditState


def build_linear_arm_grid(outcomes: OutcomeSpace, grid_size: int) -> list[Contract]:
    """Arms beta_j * q with beta_j = j / (grid_size - 1); a single zero
    contract when grid_size is 1."""
    if grid_size < 1:
        raise ValueError(f"grid_size must be >= 1, got {grid_size}")
    if grid_size == 1:
        return [Contract.zeros(outcomes.m_count)]
    return [
        Contract(j / (grid_size - 1) * outcomes.valuations)
        for j in range(grid_size)
    ]


def bandit_run(
    setting: AgentSetting,
    outcomes: OutcomeSpace,
    market: MarketParams,
    rounds: int,
    grid_size: int = 11,
    rng_seed: int = 0,
    *,
    arms: list[Contract] | None = None,
    sampled: bool = False,
) -> BanditRunResult:
    """UCB1 over the linear arm grid (or an explicit arm list).

    Every arm is pulled once, then the arm maximizing mean + sqrt(2 ln t / n)
    is pulled each round (index ties go to the lowest arm). Rewards are the
    exact expected principal utilities by default, which makes UCB an
    elimination scheme; ``sampled=True`` draws one outcome per round instead.
    """
    if arms is None:
        arms = build_linear_arm_grid(outcomes, grid_size)
        betas = (
            [0.0]
            if grid_size == 1
            else [j / (grid_size - 1) for j in range(grid_size)]
        )
    else:
        betas = [float("nan")] * len(arms)
    if rounds < len(arms):
        raise ValueError(
            f"rounds ({rounds}) must be at least the number of arms ({len(arms)})"
        )
    state = BanditState(
        arms, betas, np.zeros(len(arms), dtype=int), np.zeros(len(arms))
    )
    rng = np.random.default_rng(rng_seed)
    trace: list[BanditTraceRow] = []

    def pull(arm: int) -> None:
        if sampled:
            reward = simulate_interaction(
                arms[arm], setting, market, outcomes, sampled=True, rng=rng
            ).principal_utility
        else:
            reward = principal_utility(arms[arm], setting, market, outcomes)
        state.update(arm, reward)
        trace.append(BanditTraceRow(state.round, arm, betas[arm], reward))

    for arm in range(len(arms)):
        pull(arm)
    while state.round < rounds:
        t = state.round
        ucb = state.mean_rewards + np.sqrt(2.0 * np.log(t) / state.pull_counts)
        pull(int(ucb.argmax()))
    best = int(state.mean_rewards.argmax())
    return BanditRunResult(arms[best], best, trace, state)


def write_bandit_trace(trace: list[BanditTraceRow], path: str | Path) -> None:
    """Persist the per-round utility trace as CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "arm_index", "beta", "reward"])
        for row in trace:
            writer.writerow([row.round, row.arm_index, f"{row.beta:.9g}", f"{row.reward:.9g}"])


def zero_shot_transfer(
    trained_candidate: SolverCandidate,
    target_logs: list[InteractionLog],
    outcomes: OutcomeSpace,
    market: MarketParams,
    runner: SolverRunner,
) -> ContractSolution:
    """Apply a solver evolved elsewhere to a new scenario's logs.

    The candidate runs through the sandbox interface on the target instance
    and its inferred setting is priced as usual. Any execution failure is
    scored, not raised: the result is the null contract carrying the failure
    reason.
    """
    try:
        matrix = runner.run(
            trained_candidate.source_text,
            outcomes.valuations,
            logs_to_wire(target_logs),
        )
        inferred = setting_from_matrix(matrix, outcomes.m_count)
    except SolverExecutionError as exc:
        return ContractSolution.null(
            outcomes.m_count, failure_reason=f"{exc.kind}: {exc.detail}"
        )
    return optimize_contract(inferred, outcomes, market)
