"""Domain model for repeated principal-agent contracting over discrete outcomes.

The principal posts a payment vector over observable quality outcomes; the
agent privately picks an action, which fixes an outcome distribution and a
cost. Everything downstream (setting inference, contract optimization, the
bandit baseline) builds on the exact utility semantics defined here.

All types are immutable after construction (arrays are marked read-only) and
safe to share across threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "ACCEPT_TOL",
    "TIE_TOL",
    "OutcomeSpace",
    "AgentSetting",
    "MarketParams",
    "Contract",
    "InteractionLog",
    "BestResponse",
    "build_outcome_space",
    "agent_utility",
    "contract_surpluses",
    "best_response",
    "principal_utility",
    "simulate_interaction",
    "batch_principal_utilities",
]

# Surplus at or above this threshold counts as acceptance; absorbs LP
# round-off at a tight participation boundary.
ACCEPT_TOL = 1e-12

# Surpluses within this distance of the maximum form the tie set, resolved
# in the principal's favour and then by lowest action index.
TIE_TOL = 1e-9


def _readonly(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class OutcomeSpace:
    """Discrete outcome grid with the principal's valuation of each outcome.

    Outcomes are half-open quality intervals [l, u) with median delta; the
    principal values outcome m at q_m. When built from a quality range the
    valuation is the log mapping q_m = ln(1 + alpha * delta_m).
    """

    m_count: int
    intervals: tuple[tuple[float, float], ...]
    medians: np.ndarray
    valuations: np.ndarray
    alpha: float

    def __post_init__(self):
        if self.m_count < 1:
            raise ValueError(f"m_count must be positive, got {self.m_count}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        object.__setattr__(self, "medians", _readonly(self.medians))
        object.__setattr__(self, "valuations", _readonly(self.valuations))
        object.__setattr__(
            self,
            "intervals",
            tuple((float(lo), float(hi)) for lo, hi in self.intervals),
        )
        lengths = {len(self.intervals), self.medians.size, self.valuations.size}
        if lengths != {self.m_count}:
            raise ValueError(
                f"intervals/medians/valuations must all have length {self.m_count}"
            )
        for m, (lo, hi) in enumerate(self.intervals):
            if not lo < hi:
                raise ValueError(f"interval {m} is empty: [{lo}, {hi})")
            if m > 0 and self.intervals[m - 1][1] != lo:
                raise ValueError(f"intervals are not contiguous at index {m}")
        if np.any(np.diff(self.medians) <= 0):
            raise ValueError("medians must be strictly increasing")
        if np.any(self.valuations < 0):
            raise ValueError("valuations must be nonnegative")

    @classmethod
    def from_valuations(cls, q: Sequence[float], alpha: float = 1.0) -> "OutcomeSpace":
        """Build directly from a raw valuation vector (unit placeholder grid)."""
        q = np.asarray(q, dtype=float)
        m = q.size
        intervals = tuple((float(i), float(i + 1)) for i in range(m))
        medians = np.arange(m) + 0.5
        return cls(m, intervals, medians, q, alpha)


def build_outcome_space(low: float, high: float, m_count: int, alpha: float) -> OutcomeSpace:
    """Partition [low, high) into equal-width outcomes with log valuations."""
    if not low < high:
        raise ValueError(f"invalid range: low={low} must be < high={high}")
    if m_count < 1:
        raise ValueError(f"m_count must be positive, got {m_count}")
    edges = low + (high - low) * np.arange(m_count + 1) / m_count
    intervals = tuple((float(edges[m]), float(edges[m + 1])) for m in range(m_count))
    medians = (edges[:-1] + edges[1:]) / 2.0
    valuations = np.array([math.log1p(alpha * d) for d in medians])
    return OutcomeSpace(m_count, intervals, medians, valuations, alpha)


@dataclass(frozen=True, eq=False)
class AgentSetting:
    """The agent's private (or inferred) setting: action-to-outcome mapping
    plus per-action costs. Row n of ``p_matrix`` is the outcome distribution
    under action n; ``costs[n]`` is its additional cost. Action 0 is the
    bundled default action.
    """

    n_count: int
    p_matrix: np.ndarray
    costs: np.ndarray

    def __post_init__(self):
        p = np.array(self.p_matrix, dtype=float)
        c = np.array(self.costs, dtype=float)
        if self.n_count < 1:
            raise ValueError(f"n_count must be positive, got {self.n_count}")
        if p.ndim != 2 or p.shape[0] != self.n_count:
            raise ValueError(
                f"p_matrix must have {self.n_count} rows, got shape {p.shape}"
            )
        if c.shape != (self.n_count,):
            raise ValueError(
                f"costs must have length {self.n_count}, got shape {c.shape}"
            )
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            bad = int(np.argmax(np.any((p < -1e-12) | (p > 1 + 1e-12), axis=1)))
            raise ValueError(f"p_matrix row {bad} has entries outside [0, 1]")
        sums = p.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            bad = int(np.argmax(np.abs(sums - 1.0) > 1e-9))
            raise ValueError(
                f"p_matrix row {bad} sums to {sums[bad]:.12g}, expected 1"
            )
        if np.any(c < -1e-12):
            bad = int(np.argmax(c < -1e-12))
            raise ValueError(f"cost {bad} is negative: {c[bad]!r}")
        p = np.clip(p, 0.0, 1.0)
        c = np.clip(c, 0.0, None)
        p.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "p_matrix", p)
        object.__setattr__(self, "costs", c)

    @property
    def m_count(self) -> int:
        return self.p_matrix.shape[1]


@dataclass(frozen=True)
class MarketParams:
    """Per-image subscription fee and training cost; their difference is the
    agent's subscription surplus (its outside option in the IR comparison).
    """

    subscription_fee: float = 0.0
    training_cost: float = 0.0

    def __post_init__(self):
        if self.subscription_fee < 0 or self.training_cost < 0:
            raise ValueError("market parameters must be nonnegative")
        if self.subscription_surplus < 0:
            warnings.warn(
                "subscription surplus is negative; the agent loses money on the "
                "base subscription",
                stacklevel=2,
            )

    @property
    def subscription_surplus(self) -> float:
        return self.subscription_fee - self.training_cost


@dataclass(frozen=True, eq=False)
class Contract:
    """Nonnegative payment vector over outcomes (a quality-contingent bonus)."""

    payments: np.ndarray

    def __post_init__(self):
        r = np.array(self.payments, dtype=float)
        if r.ndim != 1:
            raise ValueError(f"payments must be a vector, got shape {r.shape}")
        if np.any(r < -1e-9):
            raise ValueError(f"payments must be nonnegative, got {r!r}")
        r = np.clip(r, 0.0, None)
        r.setflags(write=False)
        object.__setattr__(self, "payments", r)

    @property
    def m_count(self) -> int:
        return self.payments.size

    @classmethod
    def zeros(cls, m_count: int) -> "Contract":
        return cls(np.zeros(m_count))


@dataclass(frozen=True, eq=False)
class InteractionLog:
    """One observed round: offered contract, realized principal utility, and
    the accept (+1) / reject (-1) indicator."""

    contract: Contract
    principal_utility: float
    accepted: int

    def __post_init__(self):
        if self.accepted not in (1, -1):
            raise ValueError(f"accepted must be +1 or -1, got {self.accepted}")
        if self.accepted == -1 and self.principal_utility != 0.0:
            raise ValueError("rejected interactions must log zero principal utility")


@dataclass(frozen=True)
class BestResponse:
    """The agent's utility-maximizing reply to one contract."""

    action_index: int
    contract_surplus: float
    accepted: bool


def _check_contract_dims(contract: Contract, setting: AgentSetting) -> None:
    if contract.m_count != setting.m_count:
        raise ValueError(
            f"contract has {contract.m_count} payments but the setting has "
            f"{setting.m_count} outcomes"
        )


def _check_outcome_dims(outcomes: OutcomeSpace, setting: AgentSetting) -> None:
    if outcomes.m_count != setting.m_count:
        raise ValueError(
            f"outcome space has {outcomes.m_count} outcomes but the setting has "
            f"{setting.m_count}"
        )


def contract_surpluses(contract: Contract, setting: AgentSetting) -> np.ndarray:
    """Per-action contract surplus: expected payment minus action cost."""
    _check_contract_dims(contract, setting)
    return setting.p_matrix @ contract.payments - setting.costs


def agent_utility(
    action_index: int,
    contract: Contract,
    setting: AgentSetting,
    market: MarketParams,
) -> tuple[float, float]:
    """Return (contract surplus, total agent utility) for one action.

    The total adds the subscription surplus to the contract surplus.
    """
    if not 0 <= action_index < setting.n_count:
        raise ValueError(
            f"action index {action_index} out of range [0, {setting.n_count})"
        )
    _check_contract_dims(contract, setting)
    surplus = float(
        setting.p_matrix[action_index] @ contract.payments
        - setting.costs[action_index]
    )
    return surplus, surplus + market.subscription_surplus


def best_response(
    contract: Contract,
    setting: AgentSetting,
    market: MarketParams,
    outcomes: OutcomeSpace,
) -> BestResponse:
    """The agent's chosen action under a contract.

    The agent maximizes contract surplus. Ties (within ``TIE_TOL``) break in
    the principal's favour, then by lowest action index. The principal's
    value of a tied action is what it actually realizes: expected valuation
    net of payment and subscription fee for a non-default action, zero for
    the default action (whose service is already bought by the
    subscription). This keeps boundary min-payment contracts, where the
    participation or one-upmanship constraint binds exactly, implementable.

    The agent participates iff the best surplus is at least ``-ACCEPT_TOL``;
    the subscription surplus appears on both sides of the participation
    comparison and cancels. On rejection the agent falls back to the
    bundled default action 0.
    """
    _check_contract_dims(contract, setting)
    _check_outcome_dims(outcomes, setting)
    delta = contract_surpluses(contract, setting)
    best = float(delta.max())
    if best < -ACCEPT_TOL:
        return BestResponse(0, float(delta[0]), False)
    tied = np.flatnonzero(delta >= best - TIE_TOL)
    if tied.size == 1:
        action = int(tied[0])
    else:
        value = (
            setting.p_matrix[tied] @ (outcomes.valuations - contract.payments)
            - market.subscription_fee
        )
        value[tied == 0] = 0.0
        top = float(value.max())
        action = int(tied[np.flatnonzero(value >= top - TIE_TOL)[0]])
    return BestResponse(action, float(delta[action]), True)


def principal_utility(
    contract: Contract,
    setting: AgentSetting,
    market: MarketParams,
    outcomes: OutcomeSpace,
) -> float:
    """Expected principal utility of a contract: valuation minus payment minus
    subscription fee under the agent's best response, zero when the contract
    is rejected or only elicits the default action."""
    reply = best_response(contract, setting, market, outcomes)
    if not reply.accepted or reply.action_index == 0:
        return 0.0
    row = setting.p_matrix[reply.action_index]
    return float(row @ (outcomes.valuations - contract.payments)) - market.subscription_fee


def simulate_interaction(
    contract: Contract,
    setting: AgentSetting,
    market: MarketParams,
    outcomes: OutcomeSpace,
    *,
    sampled: bool = False,
    rng: np.random.Generator | None = None,
) -> InteractionLog:
    """Run one round and log it.

    Default semantics log the exact expected principal utility, which keeps
    downstream tests noise-free. With ``sampled=True`` one outcome is drawn
    from the chosen action's distribution instead.
    """
    reply = best_response(contract, setting, market, outcomes)
    if not reply.accepted:
        return InteractionLog(contract, 0.0, -1)
    if reply.action_index == 0:
        return InteractionLog(contract, 0.0, 1)
    if sampled:
        if rng is None:
            raise ValueError("sampled mode requires an rng")
        m = int(rng.choice(outcomes.m_count, p=setting.p_matrix[reply.action_index]))
        utility = float(
            outcomes.valuations[m] - contract.payments[m] - market.subscription_fee
        )
    else:
        utility = principal_utility(contract, setting, market, outcomes)
    return InteractionLog(contract, utility, 1)


def batch_principal_utilities(
    payment_rows: np.ndarray,
    setting: AgentSetting,
    market: MarketParams,
    outcomes: OutcomeSpace,
) -> np.ndarray:
    """Vectorized ``principal_utility`` over many contracts (rows of payments).

    Replicates the scalar best-response semantics, including the tie-break;
    used by the brute-force contract search where per-cell scalar calls would
    dominate the runtime.
    """
    _check_outcome_dims(outcomes, setting)
    rows = np.asarray(payment_rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != setting.m_count:
        raise ValueError(
            f"payment_rows must be (k, {setting.m_count}), got shape {rows.shape}"
        )
    delta = rows @ setting.p_matrix.T - setting.costs  # (k, N)
    # Realized principal value per (contract, action); zero for the default.
    value = (
        setting.p_matrix @ outcomes.valuations
        - rows @ setting.p_matrix.T
        - market.subscription_fee
    )
    value[:, 0] = 0.0
    best = delta.max(axis=1, keepdims=True)
    tied = delta >= best - TIE_TOL
    value_masked = np.where(tied, value, -np.inf)
    top = value_masked.max(axis=1, keepdims=True)
    # First index in the tie set whose value is within TIE_TOL of the top.
    choice_mask = value_masked >= top - TIE_TOL
    actions = choice_mask.argmax(axis=1)
    accepted = best[:, 0] >= -ACCEPT_TOL
    utilities = np.take_along_axis(value, actions[:, None], axis=1)[:, 0]
    utilities[~accepted] = 0.0
    return utilities
