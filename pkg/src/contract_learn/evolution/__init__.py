"""LLM-driven evolution of setting-inference solvers."""

from .llm import (
    BudgetExceededError,
    ConfigurationError,
    LiveBackend,
    LLMBackend,
    MockBackend,
    ReplayBackend,
    llm_complete,
)
from .loop import (
    EvolutionParams,
    EvolutionResult,
    Population,
    Reflection,
    SolverCandidate,
    evaluate_candidate,
    evolve,
    extract_code,
    history_digest,
    rank_select_pair,
)
from .prompts import PromptBundle, RenderedPrompt, render_prompt
from .runner import (
    SandboxCliRunner,
    SolverExecutionError,
    StubSeedRunner,
    logs_to_wire,
    setting_from_matrix,
)
from .seed import SEED_SOLVER_SOURCE
