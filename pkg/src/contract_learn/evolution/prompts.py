"""Prompt templates for the solver-evolution agents.

The templates are fixed data, one per agent role (generator, short-term
reflector, crossover, long-term reflector, mutation), with named
placeholders filled at render time. Word-budget phrasing inside the
reflector templates is advisory to the model; outputs are never truncated.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "FUNC_NAME",
    "PROBLEM_DESC",
    "CODER_SYSTEM_PROMPT",
    "REFLECTOR_SYSTEM_PROMPT",
    "FUNC_DESC_TEMPLATE",
    "FUNC_SIGNATURE_TEMPLATE",
    "ROLE_TEMPLATES",
    "RenderedPrompt",
    "PromptBundle",
    "PromptRenderError",
    "func_desc",
    "func_signature",
    "render_prompt",
]

FUNC_NAME = "agent_solver"

PROBLEM_DESC = (
    "Inferring a valid agent setting via agent_solver that satisfies all "
    "historical interaction logs between the principal and agent in the "
    "online contract design problem."
)

CODER_SYSTEM_PROMPT = """\
You are an expert in online learning contract design. Infer a valid agent \
setting from historical interaction logs to augment the principal's utility \
under the agent's IR and IC constraints.

Output Python code only, formatted as a Python code block: ```python ...```."""

REFLECTOR_SYSTEM_PROMPT = (
    "You are an expert in online learning contract design. Your task is to "
    "give hints to help infer a better agent setting that not only fits all "
    "historical interaction logs but also augments the principal's utility "
    "under the agent's IR and IC constraints."
)

FUNC_DESC_TEMPLATE = """\
The agent_solver function takes a principal's reward v and historical \
interaction logs content as inputs.

Each log includes:
- Contract: a {len_w}-dimensional payment vector for {len_w} outcomes;
- Principal Utility: the principal's utility under the contract (zero if the agent rejects);
- Agent Action: 1 for acceptance (expected utility >= 0) and -1 for rejection (expected utility < 0).

The function returns an inferred valid agent setting as an n x ({len_w} + 1) matrix:
- n (number of actions) is chosen to sufficiently explain the data;
- Each row corresponds to one possible agent action;
- The first {len_w} columns are probabilities over the {len_w} outcomes (summing to 1);
- The final column is the nonnegative cost of performing that action."""

FUNC_SIGNATURE_TEMPLATE = (
    "def agent_solver_v{version}(v: np.ndarray, content: list[dict]) -> np.ndarray:"
)

_GENERATOR_USER = """\
Write a {func_name} function for {problem_desc}:

{func_desc}

The 'v' example is shown as:
{v}

The 'content' example is shown as:
{contract_logs}.

{seed_func}

Refer to the format of a trivial design above. Be very creative and give {func_name}_v2.
Output code only and enclose your code in a Python block:
```python ...```."""

_SHORT_REFLECTOR_USER = """\
Below are two {func_name} functions for {problem_desc}:

{func_desc}

You are provided with two code versions below, where the second version performs better than the first one.

[Worse code]
{worse_code}

[Better code]
{better_code}

You respond with some hints for inferring better agent settings, based on the two code versions and using less than 20 words."""

_CROSSOVER_USER = """\
Write a {func_name} function for {problem_desc}:

{func_desc}

The 'v' example is shown as:
{v}

The 'content' example is shown as:
{contract_logs}.

[Worse code]
{func_signature0}
{worse_code}

[Better code]
{func_signature1}
{better_code}

[Reflection]
{reflection}

[Improved code]
Please write an improved function {func_name}_v2, according to the reflection."""

_LONG_REFLECTOR_USER = """\
Below is your prior long-term reflection on designing agent setting solver for {problem_desc}:

{prior_reflection}

Below are some newly gained insights.

{new_reflection}

Write constructive hints for inferring better agent settings, based on prior reflections and new insights, using less than 50 words."""

_MUTATION_USER = """\
Write a {func_name} function for {problem_desc}:

{func_desc}

The 'v' example is shown as:
{v}

The 'content' example is shown as:
{contract_logs}.

[Prior reflection]
{reflection}

[Code]
{func_signature1}
{elitist_code}

[Improved code]
Please write a mutated function {func_name}_v2, according to the reflection."""

# role -> (system prompt, user template)
ROLE_TEMPLATES: dict[str, tuple[str, str]] = {
    "generator": (CODER_SYSTEM_PROMPT, _GENERATOR_USER),
    "short_reflector": (REFLECTOR_SYSTEM_PROMPT, _SHORT_REFLECTOR_USER),
    "crossover": (CODER_SYSTEM_PROMPT, _CROSSOVER_USER),
    "long_reflector": (REFLECTOR_SYSTEM_PROMPT, _LONG_REFLECTOR_USER),
    "mutation": (CODER_SYSTEM_PROMPT, _MUTATION_USER),
}


class PromptRenderError(KeyError):
    """A template placeholder was left unresolved."""


@dataclass(frozen=True)
class RenderedPrompt:
    role: str
    system: str
    user: str


@dataclass(frozen=True)
class PromptBundle:
    """Rendered prompts per role, with the placeholder map used."""

    entries: dict[str, RenderedPrompt]
    placeholders: dict


def func_desc(m_count: int) -> str:
    return FUNC_DESC_TEMPLATE.format(len_w=m_count)


def func_signature(version: int) -> str:
    return FUNC_SIGNATURE_TEMPLATE.format(version=version)


class _Strict(dict):
    def __missing__(self, key):
        raise PromptRenderError(
            f"prompt placeholder '{key}' was not provided"
        )


def render_prompt(role: str, context: dict) -> RenderedPrompt:
    """Fill the role's template from the context; unresolved placeholders
    raise with the placeholder named."""
    if role not in ROLE_TEMPLATES:
        raise ValueError(f"unknown prompt role '{role}'")
    system, template = ROLE_TEMPLATES[role]
    base = {"func_name": FUNC_NAME, "problem_desc": PROBLEM_DESC}
    base.update(context)
    return RenderedPrompt(role, system, template.format_map(_Strict(base)))
