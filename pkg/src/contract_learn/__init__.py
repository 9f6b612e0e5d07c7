"""Online-learning contract design toolkit.

Simulates repeated principal-agent contract interactions, infers the agent's
hidden setting from interaction logs, derives near-optimal contracts from
inferred settings, and evolves the inference solver with LLM agents.
"""

from .model import (
    AgentSetting,
    BestResponse,
    Contract,
    InteractionLog,
    MarketParams,
    OutcomeSpace,
    agent_utility,
    best_response,
    build_outcome_space,
    principal_utility,
    simulate_interaction,
)
from .scenario import (
    ContractSamplerSpec,
    Scenario,
    SimScenarioConfig,
    generate_random_logs,
    generate_sim_setting,
    load_scenario,
    read_logs,
    save_scenario,
    write_logs,
)
from .inference import (
    cluster_distributions,
    recover_distribution,
    seed_solve,
    validate_setting,
)
from .design import (
    ContractSolution,
    brute_force_contract,
    min_pay_contract_for_action,
    optimize_contract,
)
from .baselines import bandit_run, build_linear_arm_grid, zero_shot_transfer
from .metrics import MetricsReport, compute_metrics

__version__ = "0.1.0"
