"""Scenario construction: synthetic generation, file loading, and log I/O.

A scenario is the triple (agent setting, outcome space, market params). The
synthetic generator draws outcome distributions as softmax of Gaussian
vectors and mixes a value-correlated cost with an independent uniform cost;
file-based scenarios are validated JSON (schema below).

Scenario file (UTF-8 JSON)::

    {"m": int, "n": int,
     "alpha": real, "outcome_range": [low, high],   # either this pair
     "q": [real, ...],                              # or a raw valuation vector
     "P": [[real, ...], ...], "c": [real, ...],
     "r_s": real, "c_t": real}

Logs file: JSON Lines, one object per interaction::

    {"contract": [real, ...], "principal_utility": real, "agent_action": 1 | -1}
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .model import (
    AgentSetting,
    Contract,
    InteractionLog,
    MarketParams,
    OutcomeSpace,
    build_outcome_space,
    simulate_interaction,
)

__all__ = [
    "SimScenarioConfig",
    "ContractSamplerSpec",
    "Scenario",
    "generate_sim_setting",
    "generate_random_logs",
    "load_scenario",
    "scenario_from_dict",
    "save_scenario",
    "scenario_to_dict",
    "write_logs",
    "read_logs",
]


@dataclass(frozen=True)
class SimScenarioConfig:
    """Knobs for the synthetic scenario generator.

    Valuations are uniform draws by default; setting ``alpha`` switches to
    the log mapping over an equal-width quality partition of
    ``outcome_range``, which is what the mapping-coefficient sweeps vary.
    """

    m_count: int
    n_count: int
    beta_c: float = 0.7
    beta_p: float = 0.3
    valuation_low: float = 0.0
    valuation_high: float = 10.0
    rng_seed: int = 0
    alpha: float | None = None
    outcome_range: tuple[float, float] = (0.9, 1.8)

    def __post_init__(self):
        if self.m_count < 1 or self.n_count < 1:
            raise ValueError("m_count and n_count must be positive")
        if not 0 <= self.beta_c <= 1 or not 0 <= self.beta_p <= 1:
            raise ValueError("beta_c and beta_p must lie in [0, 1]")
        if not self.valuation_low < self.valuation_high:
            raise ValueError("valuation_low must be < valuation_high")


@dataclass(frozen=True)
class ContractSamplerSpec:
    """Per-coordinate uniform exploration distribution for random contracts.

    ``high=None`` defaults to the top outcome valuation, which covers the
    payment range where acceptance flips.
    """

    low: float = 0.0
    high: float | None = None

    def resolved_high(self, outcomes: OutcomeSpace) -> float:
        return float(outcomes.valuations.max()) if self.high is None else self.high


@dataclass(frozen=True)
class Scenario:
    """Bundled (setting, outcomes, market) triple."""

    setting: AgentSetting
    outcomes: OutcomeSpace
    market: MarketParams


def generate_sim_setting(config: SimScenarioConfig) -> Scenario:
    """Draw a synthetic scenario; bit-identical for identical seeds.

    Each action's outcome distribution is the softmax of an i.i.d. standard
    Gaussian vector; valuations are uniform on the configured range; the cost
    of an action mixes a share ``beta_c`` of its expected valuation with an
    independent U[0, 1] draw, weighted by ``beta_p``. Market params are zero
    so the participation threshold sits at zero contract surplus.
    """
    rng = np.random.default_rng(config.rng_seed)
    gauss = rng.standard_normal((config.n_count, config.m_count))
    shifted = gauss - gauss.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    p_matrix = expd / expd.sum(axis=1, keepdims=True)
    if config.alpha is None:
        q = rng.uniform(config.valuation_low, config.valuation_high, config.m_count)
        outcomes = OutcomeSpace.from_valuations(q)
    else:
        low, high = config.outcome_range
        outcomes = build_outcome_space(low, high, config.m_count, config.alpha)
        q = outcomes.valuations
    correlated = config.beta_c * (p_matrix @ q)
    independent = rng.uniform(0.0, 1.0, config.n_count)
    costs = (1.0 - config.beta_p) * correlated + config.beta_p * independent
    setting = AgentSetting(config.n_count, p_matrix, costs)
    return Scenario(setting, outcomes, MarketParams(0.0, 0.0))


def generate_random_logs(
    count: int,
    setting: AgentSetting,
    market: MarketParams,
    outcomes: OutcomeSpace,
    sampler: ContractSamplerSpec | None = None,
    rng_seed: int = 0,
    *,
    sampled_outcomes: bool = False,
) -> list[InteractionLog]:
    """Simulate ``count`` rounds under i.i.d. random exploration contracts."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    sampler = sampler or ContractSamplerSpec()
    high = sampler.resolved_high(outcomes)
    rng = np.random.default_rng(rng_seed)
    logs = []
    for _ in range(count):
        payments = rng.uniform(sampler.low, high, outcomes.m_count)
        logs.append(
            simulate_interaction(
                Contract(payments),
                setting,
                market,
                outcomes,
                sampled=sampled_outcomes,
                rng=rng if sampled_outcomes else None,
            )
        )
    return logs


def _fail(path, message: str) -> ValueError:
    return ValueError(f"{path}: {message}")


def load_scenario(path: str | Path) -> Scenario:
    """Load and fully validate a scenario file.

    Violations are rejected with the offending row or field named.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise _fail(path, f"not valid JSON ({exc})") from exc
    return scenario_from_dict(raw, source=str(path))


def scenario_from_dict(
    raw: dict, source: str = "<scenario>", warn_default_cost: bool = True
) -> Scenario:
    """Validate a parsed scenario object (shared by files and replay)."""
    path = source
    for key in ("m", "n", "P", "c", "r_s", "c_t"):
        if key not in raw:
            raise _fail(path, f"missing required field '{key}'")
    m, n = raw["m"], raw["n"]
    has_mapping = "alpha" in raw or "outcome_range" in raw
    has_q = "q" in raw
    if has_mapping == has_q:
        raise _fail(path, "exactly one of ('alpha' + 'outcome_range') or 'q' is required")
    if has_mapping:
        if "alpha" not in raw or "outcome_range" not in raw:
            raise _fail(path, "'alpha' and 'outcome_range' must be given together")
        low, high = raw["outcome_range"]
        outcomes = build_outcome_space(low, high, m, raw["alpha"])
    else:
        q = np.asarray(raw["q"], dtype=float)
        if q.size != m:
            raise _fail(path, f"field 'q' has {q.size} entries, expected m={m}")
        if np.any(q < 0):
            raise _fail(path, f"field 'q' entry {int(np.argmax(q < 0))} is negative")
        outcomes = OutcomeSpace.from_valuations(q)
    p = np.asarray(raw["P"], dtype=float)
    if p.ndim != 2 or p.shape != (n, m):
        raise _fail(path, f"field 'P' has shape {p.shape}, expected ({n}, {m})")
    sums = p.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-9)
    if bad.size:
        raise _fail(
            path,
            f"field 'P' row {int(bad[0])} sums to {sums[bad[0]]:.12g}, expected 1",
        )
    c = np.asarray(raw["c"], dtype=float)
    if c.shape != (n,):
        raise _fail(path, f"field 'c' has {c.size} entries, expected n={n}")
    neg = np.flatnonzero(c < 0)
    if neg.size:
        raise _fail(path, f"field 'c' entry {int(neg[0])} is negative")
    # Interval-flavor files describe empirical quality scenarios, where the
    # default action is bundled with the subscription at no extra cost.
    if warn_default_cost and has_mapping and c[0] != 0.0:
        warnings.warn(
            f"{path}: cost of the default action (c[0]) is {c[0]!r}, expected 0 "
            "for empirical scenarios",
            stacklevel=2,
        )
    setting = AgentSetting(n, p, c)
    market = MarketParams(float(raw["r_s"]), float(raw["c_t"]))
    return Scenario(setting, outcomes, market)


def scenario_to_dict(scenario: Scenario) -> dict:
    """Serializable form of a scenario (raw-valuation flavor)."""
    return {
        "m": scenario.outcomes.m_count,
        "n": scenario.setting.n_count,
        "q": [float(v) for v in scenario.outcomes.valuations],
        "P": [[float(v) for v in row] for row in scenario.setting.p_matrix],
        "c": [float(v) for v in scenario.setting.costs],
        "r_s": scenario.market.subscription_fee,
        "c_t": scenario.market.training_cost,
    }


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_dict(scenario), indent=2) + "\n", encoding="utf-8"
    )


def write_logs(logs: Iterable[InteractionLog], path: str | Path) -> None:
    """Persist logs as JSON Lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for log in logs:
            fh.write(
                json.dumps(
                    {
                        "contract": [float(v) for v in log.contract.payments],
                        "principal_utility": log.principal_utility,
                        "agent_action": log.accepted,
                    }
                )
                + "\n"
            )


def read_logs(path: str | Path) -> list[InteractionLog]:
    logs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: not valid JSON ({exc})") from exc
            try:
                logs.append(
                    InteractionLog(
                        Contract(np.asarray(rec["contract"], dtype=float)),
                        float(rec["principal_utility"]),
                        int(rec["agent_action"]),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad log record ({exc})") from exc
    return logs
