import pytest

from contract_learn.model import AgentSetting, MarketParams, OutcomeSpace
from contract_learn.scenario import (
    Scenario,
    SimScenarioConfig,
    generate_random_logs,
    generate_sim_setting,
)


@pytest.fixture
def unit_outcomes():
    """Two outcomes worth 0 and 1."""
    return OutcomeSpace.from_valuations([0.0, 1.0])


@pytest.fixture
def diag_setting():
    """Two actions mapping deterministically to one outcome each."""
    return AgentSetting(2, [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.5])


@pytest.fixture
def zero_market():
    return MarketParams(0.0, 0.0)


@pytest.fixture
def diag_scenario(diag_setting, unit_outcomes, zero_market):
    return Scenario(diag_setting, unit_outcomes, zero_market)


def random_stochastic_rows(rng, n, m):
    raw = rng.uniform(0.0, 1.0, (n, m)) + 1e-9
    return raw / raw.sum(axis=1, keepdims=True)


def make_sim_scenario(m, n, seed):
    return generate_sim_setting(SimScenarioConfig(m_count=m, n_count=n, rng_seed=seed))


def make_logs(scenario, k, seed, **kwargs):
    return generate_random_logs(
        k, scenario.setting, scenario.market, scenario.outcomes, rng_seed=seed, **kwargs
    )
