"""Evaluation metrics for a derived contract against the true setting.

Three headline numbers: the relative utility gain of the principal over the
no-bonus default, the relative gain handed to the agent over its
subscription surplus, and the efficiency ratio against the full-information
optimal contract. Zero-valued baselines yield NaN (the undefined marker)
rather than infinities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .design import ContractSolution, optimize_contract
from .model import (
    AgentSetting,
    MarketParams,
    OutcomeSpace,
    best_response,
    principal_utility,
)

__all__ = ["MetricsReport", "compute_metrics"]

UNDEFINED = float("nan")


@dataclass(frozen=True)
class MetricsReport:
    """Relative gains and efficiency of one derived contract.

    ``pi_t_pct`` and ``pi_a_pct`` are NaN when their baseline is zero;
    ``eta`` is NaN when the optimal utility is zero. ``eta`` can drop below
    zero when the derived contract loses money under the true setting.
    """

    pi_t_pct: float
    pi_a_pct: float
    eta: float
    raw: dict

    @property
    def defined(self) -> dict:
        return {
            k: v
            for k, v in (("pi_t_pct", self.pi_t_pct), ("pi_a_pct", self.pi_a_pct), ("eta", self.eta))
            if not math.isnan(v)
        }


def _ratio(value: float, baseline: float) -> float:
    if baseline == 0.0:
        return UNDEFINED
    return (value - baseline) / baseline


def compute_metrics(
    derived: ContractSolution,
    true_setting: AgentSetting,
    outcomes: OutcomeSpace,
    market: MarketParams,
    oracle: ContractSolution | None = None,
) -> MetricsReport:
    """Score a derived contract against the true environment.

    The no-bonus principal baseline is the default-service value p_1 @ q -
    r_s (the literal zero-contract utility is identically zero and cannot
    anchor a ratio); the agent baseline is its subscription surplus. The
    optimal contract is computed from the true setting unless supplied.
    """
    if oracle is None:
        oracle = optimize_contract(true_setting, outcomes, market)
    realized = principal_utility(derived.contract, true_setting, market, outcomes)
    optimal = principal_utility(oracle.contract, true_setting, market, outcomes)
    baseline_t = float(
        true_setting.p_matrix[0] @ outcomes.valuations
    ) - market.subscription_fee
    reply = best_response(derived.contract, true_setting, market, outcomes)
    if reply.accepted:
        agent_total = reply.contract_surplus + market.subscription_surplus
    else:
        # Rejected bonus: the agent runs the bundled default action unpaid.
        agent_total = -float(true_setting.costs[0]) + market.subscription_surplus
    baseline_a = market.subscription_surplus
    return MetricsReport(
        pi_t_pct=_ratio(realized, baseline_t),
        pi_a_pct=_ratio(agent_total, baseline_a),
        eta=(realized / optimal) if optimal != 0.0 else UNDEFINED,
        raw={
            "pi_t": realized,
            "pi_t_baseline": baseline_t,
            "pi_a": agent_total,
            "pi_a_baseline": baseline_a,
            "pi_t_optimal": optimal,
        },
    )
