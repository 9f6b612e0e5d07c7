"""Contract derivation for a known (true or inferred) agent setting.

The exact method for finite actions and outcomes: for every non-default
action, a small LP finds the cheapest payment vector that makes the agent
pick that action and participate; the principal then keeps the best of those
per-action optima, or the null contract when nothing beats doing nothing.
A grid-search oracle over the payment space backs the LP path in tests and
supplies the full-information optimum for the efficiency metric.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .lp import LinearProgram, LpStatus, solve_lp
from .model import (
    AgentSetting,
    Contract,
    MarketParams,
    OutcomeSpace,
    batch_principal_utilities,
    best_response,
)

__all__ = [
    "ActionPlan",
    "ContractSolution",
    "min_pay_contract_for_action",
    "optimize_contract",
    "brute_force_contract",
]

# Grids beyond this many cells are refused rather than silently ground through.
DEFAULT_CELL_BUDGET = 2_000_000


@dataclass(frozen=True, eq=False)
class ActionPlan:
    """One row of the per-action enumeration: the cheapest contract that
    implements the action, or the reason there is none."""

    action_index: int
    status: str  # "optimal" | "infeasible"
    contract: Contract | None = None
    utility: float = float("-inf")


@dataclass(frozen=True, eq=False)
class ContractSolution:
    """A derived contract with its target action and predicted utility under
    the setting used to derive it."""

    contract: Contract
    target_action: int
    predicted_principal_utility: float
    per_action_table: tuple[ActionPlan, ...] = ()
    failure_reason: str | None = None

    @property
    def is_null(self) -> bool:
        return self.target_action == 0

    @classmethod
    def null(cls, m_count: int, *, failure_reason: str | None = None,
             per_action_table: tuple[ActionPlan, ...] = ()) -> "ContractSolution":
        return cls(Contract.zeros(m_count), 0, 0.0, per_action_table, failure_reason)


def min_pay_contract_for_action(
    target: int,
    setting: AgentSetting,
    outcomes: OutcomeSpace,
    market: MarketParams,
    ir_bonus: float = 0.0,
) -> Contract | None:
    """Cheapest contract (minimum expected payment) implementing one action.

    The LP minimizes p_n @ r over r >= 0 subject to the agent weakly
    preferring action n over every alternative and clearing participation.
    Participation at equality is implementable because best-response ties
    resolve in the principal's favour; ``ir_bonus`` shifts the participation
    threshold up for callers that want strict surplus instead of relying on
    the tie-break. Returns None when the action cannot be implemented (for
    example when a cheaper action has the same outcome distribution).
    """
    if not 1 <= target < setting.n_count:
        raise ValueError(
            f"target must be a non-default action in [1, {setting.n_count}), "
            f"got {target}"
        )
    if outcomes.m_count != setting.m_count:
        raise ValueError(
            f"outcome space has {outcomes.m_count} outcomes but the setting "
            f"has {setting.m_count}"
        )
    p = setting.p_matrix
    c = setting.costs
    m = setting.m_count
    rows = []
    rhs = []
    for other in range(setting.n_count):
        if other == target:
            continue
        # p_t @ r - c_t >= p_o @ r - c_o  rewritten as (p_o - p_t) @ r <= c_o - c_t
        rows.append(p[other] - p[target])
        rhs.append(c[other] - c[target])
    # participation: p_t @ r >= c_t + ir_bonus
    if ir_bonus < 0:
        raise ValueError(f"ir_bonus must be nonnegative, got {ir_bonus}")
    rows.append(-p[target])
    rhs.append(-(c[target] + ir_bonus))
    solution = solve_lp(
        LinearProgram(
            objective=p[target],
            ub_matrix=np.array(rows),
            ub_rhs=np.array(rhs),
            bounds=((0.0, np.inf),) * m,
        )
    )
    if solution.status is LpStatus.INFEASIBLE:
        return None
    if not solution.is_optimal:
        raise RuntimeError(f"min-pay LP for action {target} ended with {solution.status}")
    return Contract(np.clip(solution.x, 0.0, None))


def optimize_contract(
    setting: AgentSetting,
    outcomes: OutcomeSpace,
    market: MarketParams,
    ir_bonus: float = 0.0,
) -> ContractSolution:
    """Best implementable contract under a setting.

    Enumerates the non-default actions, prices each with its min-pay LP, and
    keeps the most profitable; when every action is infeasible or none beats
    zero, the null contract stands in for "do not incentivize".
    """
    q = outcomes.valuations
    table = []
    best_plan: ActionPlan | None = None
    for n in range(1, setting.n_count):
        contract = min_pay_contract_for_action(n, setting, outcomes, market, ir_bonus)
        if contract is None:
            table.append(ActionPlan(n, "infeasible"))
            continue
        utility = float(
            setting.p_matrix[n] @ (q - contract.payments)
        ) - market.subscription_fee
        plan = ActionPlan(n, "optimal", contract, utility)
        table.append(plan)
        if best_plan is None or plan.utility > best_plan.utility:
            best_plan = plan
    if best_plan is None or best_plan.utility <= 0.0:
        return ContractSolution.null(
            setting.m_count, per_action_table=tuple(table)
        )
    return ContractSolution(
        best_plan.contract,
        best_plan.action_index,
        best_plan.utility,
        tuple(table),
    )


def brute_force_contract(
    setting: AgentSetting,
    outcomes: OutcomeSpace,
    market: MarketParams,
    grid_step: float,
    payment_cap: float | None = None,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> ContractSolution:
    """Exhaustive grid search over payment vectors (test oracle).

    Evaluates every grid contract with the exact best-response semantics and
    returns the argmax (first cell in scan order on ties). Intended for
    small outcome spaces; refuses grids above ``cell_budget`` cells.
    """
    if grid_step <= 0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    if payment_cap is None:
        payment_cap = float(outcomes.valuations.max())
    m = setting.m_count
    axis = np.arange(int(np.floor(payment_cap / grid_step)) + 1) * grid_step
    n_cells = len(axis) ** m
    if n_cells > cell_budget:
        raise ValueError(
            f"grid of {n_cells} cells exceeds the budget of {cell_budget}; "
            "coarsen grid_step or lower payment_cap"
        )
    grid = np.array(list(itertools.product(axis, repeat=m)))
    utilities = batch_principal_utilities(grid, setting, market, outcomes)
    best = int(utilities.argmax())
    contract = Contract(grid[best])
    utility = float(utilities[best])
    if utility <= 0.0:
        return ContractSolution.null(m)
    reply = best_response(contract, setting, market, outcomes)
    return ContractSolution(contract, reply.action_index, utility)
