"""Recovering the agent's hidden setting from interaction logs.

The pipeline mirrors the LP-and-cluster seed procedure: each accepted log
yields a candidate outcome distribution through a small LP (minimize the
payment made, subject to matching the logged principal utility), the
candidates are clustered into a fixed number of actions, and costs are then
pinned down from the participation and rejection constraints. A separate
validator scores any proposed setting against the full constraint system.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .lp import LinearProgram, LpStatus, solve_lp
from .model import (
    AgentSetting,
    InteractionLog,
    MarketParams,
    OutcomeSpace,
    contract_surpluses,
)

__all__ = [
    "REJECTION_MARGIN",
    "DEFAULT_ACTION_COUNT",
    "NoAcceptedLogsError",
    "CandidateDistributions",
    "LogVerdict",
    "ConsistencyReport",
    "recover_distribution",
    "collect_candidate_distributions",
    "kmeans",
    "cluster_distributions",
    "seed_solve",
    "validate_setting",
]

# Strict margin added to inferred costs so rejected contracts stay rejected
# under the new setting rather than sitting on the acceptance knife edge.
REJECTION_MARGIN = 1e-8

# Assumed size of the action space when the caller has no better guess.
DEFAULT_ACTION_COUNT = 7


class NoAcceptedLogsError(ValueError):
    """No accepted log produced a recoverable distribution; the agent's
    strategies cannot be inferred from this data."""


def recover_distribution(
    log: InteractionLog,
    outcomes: OutcomeSpace,
    market: MarketParams,
) -> np.ndarray | None:
    """Recover a candidate outcome distribution from one accepted log.

    Solves: minimize p @ r subject to sum(p) = 1, p in [0, 1]^M, and the
    utility-matching constraint p @ (q - r) - r_s = logged utility. Returns
    the minimizer, or None when no distribution can explain the log.
    """
    if log.accepted != 1:
        raise ValueError("recover_distribution requires an accepted log")
    r = log.contract.payments
    q = outcomes.valuations
    if r.size != q.size:
        raise ValueError(
            f"contract has {r.size} payments but the outcome space has {q.size}"
        )
    program = LinearProgram(
        objective=r,
        eq_matrix=np.vstack([np.ones(q.size), q - r]),
        eq_rhs=np.array(
            [1.0, log.principal_utility + market.subscription_fee]
        ),
        bounds=((0.0, 1.0),) * q.size,
    )
    solution = solve_lp(program)
    if solution.status is LpStatus.INFEASIBLE:
        return None
    if not solution.is_optimal:
        raise RuntimeError(f"distribution recovery LP ended with {solution.status}")
    return solution.x


@dataclass(frozen=True)
class CandidateDistributions:
    """Recovered distributions from the accepted logs, plus how many accepted
    logs had to be skipped because no distribution could explain them."""

    vectors: tuple[np.ndarray, ...]
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.vectors)


def collect_candidate_distributions(
    logs: list[InteractionLog],
    outcomes: OutcomeSpace,
    market: MarketParams,
) -> CandidateDistributions:
    """Run distribution recovery over every accepted log."""
    vectors = []
    skipped = 0
    for log in logs:
        if log.accepted != 1:
            continue
        p = recover_distribution(log, outcomes, market)
        if p is None:
            skipped += 1
        else:
            vectors.append(p)
    return CandidateDistributions(tuple(vectors), skipped)


def kmeans(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
    n_restarts: int = 10,
    max_iter: int = 300,
) -> tuple[np.ndarray, float]:
    """Plain Lloyd k-means with restarts; fully deterministic under the rng.

    Empty clusters are reseeded with the point farthest from its assigned
    center (a deterministic repair). Returns (centers, inertia) of the best
    restart.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    best_centers, best_inertia = None, np.inf
    for _ in range(n_restarts):
        centers = points[rng.choice(n, size=k, replace=False)].copy()
        labels = np.full(n, -1)
        for _ in range(max_iter):
            dists = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_labels = dists.argmin(axis=1)
            for j in range(k):
                if not np.any(new_labels == j):
                    worst = int(np.take_along_axis(
                        dists, new_labels[:, None], axis=1
                    ).argmax())
                    centers[j] = points[worst]
                    new_labels[worst] = j
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for j in range(k):
                members = labels == j
                if members.any():
                    centers[j] = points[members].mean(axis=0)
        inertia = float(
            np.take_along_axis(
                ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2),
                labels[:, None],
                axis=1,
            ).sum()
        )
        if inertia < best_inertia:
            best_centers, best_inertia = centers, inertia
    return best_centers, best_inertia


def cluster_distributions(
    points: CandidateDistributions,
    k: int,
    rng_seed: int,
    valuations: np.ndarray,
) -> np.ndarray:
    """Aggregate candidate distributions into k representative actions.

    Centers are renormalized to probability vectors and ordered by ascending
    expected valuation (center @ q), so higher-index actions are the more
    valuable ones.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(points) == 0:
        raise ValueError("cannot cluster an empty candidate set")
    if k > len(points):
        warnings.warn(
            f"only {len(points)} candidate distributions for k={k}; "
            f"reducing k to {len(points)}",
            stacklevel=2,
        )
        k = len(points)
    data = np.vstack(points.vectors)
    centers, _ = kmeans(data, k, np.random.default_rng(rng_seed))
    centers = np.clip(centers, 0.0, None)
    centers /= centers.sum(axis=1, keepdims=True)
    order = np.argsort(centers @ np.asarray(valuations, dtype=float), kind="stable")
    return centers[order]


def seed_solve(
    logs: list[InteractionLog],
    outcomes: OutcomeSpace,
    market: MarketParams,
    n_hat: int = DEFAULT_ACTION_COUNT,
    rng_seed: int = 0,
) -> AgentSetting:
    """Infer an agent setting from logs with the LP-cluster-cost pipeline.

    Accepted logs are assigned to the inferred action with the highest
    expected payment, and each action's cost is the minimum expected payment
    over its assigned logs (tight participation). Every rejected log then
    pushes costs up to expected payment plus a strict margin, so no inferred
    action would have accepted it. The rejection pass can overshoot the
    participation costs of accepted logs; that tension is intrinsic to the
    construction and is surfaced by ``validate_setting`` rather than hidden.
    """
    candidates = collect_candidate_distributions(logs, outcomes, market)
    if len(candidates) == 0:
        raise NoAcceptedLogsError(
            "no accepted log yields a recoverable distribution; "
            "cannot infer the agent's strategies"
        )
    centers = cluster_distributions(candidates, n_hat, rng_seed, outcomes.valuations)
    k = centers.shape[0]
    costs = np.zeros(k)
    assigned = np.zeros(k, dtype=bool)
    for log in logs:
        if log.accepted != 1:
            continue
        pay = centers @ log.contract.payments
        idx = int(pay.argmax())
        if assigned[idx]:
            costs[idx] = min(costs[idx], float(pay[idx]))
        else:
            costs[idx] = float(pay[idx])
            assigned[idx] = True
    for log in logs:
        if log.accepted == 1:
            continue
        costs = np.maximum(costs, centers @ log.contract.payments + REJECTION_MARGIN)
    return AgentSetting(k, centers, costs)


@dataclass(frozen=True)
class LogVerdict:
    """Outcome of checking one log against a proposed setting: either the
    index of a witnessing action, or the violated constraint class."""

    log_index: int
    witness: int | None = None
    violation: str | None = None  # utility-mismatch | ir-violation |
    #                               ic-violation | rejection-violation


@dataclass(frozen=True)
class ConsistencyReport:
    verdicts: tuple[LogVerdict, ...]
    violation_counts: dict = field(default_factory=dict)

    @property
    def overall_consistent(self) -> bool:
        return all(v.violation is None for v in self.verdicts)


def validate_setting(
    setting: AgentSetting,
    logs: list[InteractionLog],
    outcomes: OutcomeSpace,
    market: MarketParams,
    tol: float = 1e-6,
) -> ConsistencyReport:
    """Check a proposed setting against the full log constraint system.

    For each accepted log some action must simultaneously match the logged
    utility, clear participation, and be the agent's best choice (all within
    ``tol``); for each rejected log no action may clear participation. The
    utility predicted for the default action is zero, mirroring the zero
    branch of the principal's utility definition, so logs where the agent
    voluntarily stayed on the default action are explainable. The checks are
    monotone in ``tol`` by construction. Violations are reported per log,
    never raised.
    """
    q = outcomes.valuations
    verdicts = []
    counts: dict[str, int] = {}

    def violate(i: int, kind: str) -> LogVerdict:
        counts[kind] = counts.get(kind, 0) + 1
        return LogVerdict(i, violation=kind)

    for i, log in enumerate(logs):
        r = log.contract.payments
        delta = contract_surpluses(log.contract, setting)
        if log.accepted != 1:
            if float(delta.max()) > tol:
                verdicts.append(violate(i, "rejection-violation"))
            else:
                verdicts.append(LogVerdict(i))
            continue
        predicted = setting.p_matrix @ (q - r) - market.subscription_fee
        predicted[0] = 0.0
        matching = np.flatnonzero(
            np.abs(predicted - log.principal_utility) <= tol
        )
        if matching.size == 0:
            verdicts.append(violate(i, "utility-mismatch"))
            continue
        rational = matching[delta[matching] >= -tol]
        if rational.size == 0:
            verdicts.append(violate(i, "ir-violation"))
            continue
        top = float(delta.max())
        witnesses = rational[delta[rational] >= top - tol]
        if witnesses.size == 0:
            verdicts.append(violate(i, "ic-violation"))
            continue
        verdicts.append(LogVerdict(i, witness=int(witnesses[0])))
    return ConsistencyReport(tuple(verdicts), counts)
