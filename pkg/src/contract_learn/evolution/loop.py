"""Evolutionary refinement of setting-inference solvers.

One run seeds a population of candidate solvers from a trivial reference,
then alternates ranked pair selection, short verbal reflections, crossover,
a long-term reflection, and mutations of the elitist, spending one scored
environment interaction per evaluated candidate until the interaction budget
is used up. The elitist (best-ever candidate) is the run's output; the full
audit trail (every candidate, reflection, and fitness) is kept alongside it.
"""

from __future__ import annotations

import hashlib
import json
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..design import optimize_contract
from ..inference import validate_setting
from ..model import AgentSetting, InteractionLog, MarketParams, OutcomeSpace, principal_utility
from .llm import BudgetExceededError, LLMBackend, LLMError
from .prompts import func_desc, func_signature, render_prompt
from .runner import SolverExecutionError, SolverRunner, logs_to_wire, setting_from_matrix

__all__ = [
    "ExtractionError",
    "DegeneratePopulationError",
    "CodeExtraction",
    "SolverCandidate",
    "Population",
    "Reflection",
    "EvolutionParams",
    "EvolutionResult",
    "extract_code",
    "evaluate_candidate",
    "rank_selection_weights",
    "rank_select_pair",
    "evolve",
    "history_digest",
    "write_run_artifacts",
]


class ExtractionError(ValueError):
    pass


class DegeneratePopulationError(RuntimeError):
    """Every selectable member has the same fitness; a ranked pair with a
    fitness gap cannot be formed."""


@dataclass(frozen=True)
class CodeExtraction:
    source: str
    fenced: bool  # False means the whole completion was taken verbatim


_FENCE = re.compile(r"```(?:python)?[ \t]*\n(.*?)```", re.DOTALL)


def extract_code(completion: str) -> CodeExtraction:
    """Pull solver source out of a completion.

    The first fenced code block wins; fence-less completions are passed
    through whole but flagged low-confidence.
    """
    if not completion.strip():
        raise ExtractionError("empty completion, nothing to extract")
    match = _FENCE.search(completion)
    if match is None:
        return CodeExtraction(completion.strip(), fenced=False)
    source = match.group(1).strip()
    if not source:
        raise ExtractionError("the fenced code block is empty")
    return CodeExtraction(source, fenced=True)


@dataclass
class SolverCandidate:
    """One evolvable solver: source, lineage, and a write-once fitness."""

    candidate_id: int
    source_text: str
    origin: str  # seed | init | crossover | mutation
    parent_ids: tuple[int, ...] = ()
    epoch: int = 0
    fitness: float | None = None
    failure: str | None = None

    def __post_init__(self):
        if self.origin not in ("seed", "init", "crossover", "mutation"):
            raise ValueError(f"unknown origin {self.origin!r}")

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None or self.failure is not None

    def record_fitness(self, value: float) -> None:
        if self.evaluated:
            raise ValueError(f"candidate {self.candidate_id} is already evaluated")
        self.fitness = float(value)

    def record_failure(self, reason: str) -> None:
        if self.evaluated:
            raise ValueError(f"candidate {self.candidate_id} is already evaluated")
        self.failure = reason

    def meta(self) -> dict:
        return {
            "id": self.candidate_id,
            "origin": self.origin,
            "parents": list(self.parent_ids),
            "epoch": self.epoch,
            "fitness": self.fitness,
            "failure": self.failure,
        }


@dataclass
class Population:
    members: list[SolverCandidate] = field(default_factory=list)

    def finite(self) -> list[SolverCandidate]:
        return [c for c in self.members if c.fitness is not None]


@dataclass(frozen=True)
class Reflection:
    kind: str  # short | long
    text: str
    epoch: int

    @property
    def word_budget(self) -> int:
        # Advisory only: the prompts ask for it, outputs are not truncated.
        return 20 if self.kind == "short" else 50


@dataclass(frozen=True)
class EvolutionParams:
    """Population sizing and the total evaluation budget.

    One epoch costs selection_size/2 crossover evaluations plus
    mutation_count mutation evaluations.
    """

    init_size: int = 10
    selection_size: int = 10
    mutation_count: int = 2
    total_budget: int = 200

    def __post_init__(self):
        if self.init_size < 1 or self.mutation_count < 0 or self.total_budget < 1:
            raise ValueError("population parameters must be positive")
        if self.selection_size < 2 or self.selection_size % 2:
            raise ValueError(
                f"selection_size must be even and >= 2, got {self.selection_size}"
            )


def evaluate_candidate(
    candidate: SolverCandidate,
    logs: list[InteractionLog],
    outcomes: OutcomeSpace,
    market: MarketParams,
    true_setting: AgentSetting,
    runner: SolverRunner,
    *,
    fitness_mode: str = "interaction",
    holdout_logs: list[InteractionLog] | None = None,
) -> SolverCandidate:
    """Score one candidate, spending one environment interaction.

    The candidate's matrix is structurally validated, turned into a setting,
    priced with the contract optimizer, and the derived contract is played
    against the true environment; the realized principal utility is the
    fitness. Any failure (crash, timeout, malformed or invalid matrix) is
    recorded on the candidate and ranks below every finite fitness.

    ``fitness_mode="holdout"`` instead scores the fraction of held-out logs
    the inferred setting is consistent with, for offline use where no live
    environment is available.
    """
    if candidate.evaluated:
        raise ValueError(f"candidate {candidate.candidate_id} is already evaluated")
    try:
        matrix = runner.run(
            candidate.source_text, outcomes.valuations, logs_to_wire(logs)
        )
        inferred = setting_from_matrix(matrix, outcomes.m_count)
        solution = optimize_contract(inferred, outcomes, market)
        if fitness_mode == "interaction":
            fitness = principal_utility(solution.contract, true_setting, market, outcomes)
        elif fitness_mode == "holdout":
            pool = holdout_logs if holdout_logs is not None else logs
            report = validate_setting(inferred, pool, outcomes, market)
            fitness = (
                1.0
                if not pool
                else sum(v.violation is None for v in report.verdicts) / len(pool)
            )
        else:
            raise ValueError(f"unknown fitness_mode {fitness_mode!r}")
    except SolverExecutionError as exc:
        candidate.record_failure(f"{exc.kind}: {exc.detail}")
        return candidate
    candidate.record_fitness(fitness)
    return candidate


def rank_selection_weights(count: int) -> np.ndarray:
    """Weight of the rank-j member (best first): count - j."""
    if count < 1:
        raise ValueError("count must be positive")
    return np.arange(count, 0, -1, dtype=float)


def rank_select_pair(
    population: list[SolverCandidate],
    rng: np.random.Generator,
    max_retries: int = 20,
) -> tuple[SolverCandidate, SolverCandidate]:
    """Draw a (better, worse) pair with rank-proportional probability.

    Only finite-fitness members are selectable, and the two picks must have
    distinct fitness (a fitness gap is what the reflection step feeds on);
    after ``max_retries`` identical-fitness draws the best and worst members
    are taken.
    """
    pool = [c for c in population if c.fitness is not None]
    if len(pool) < 2:
        raise DegeneratePopulationError(
            f"need at least 2 evaluated candidates, have {len(pool)}"
        )
    pool.sort(key=lambda c: (-c.fitness, c.candidate_id))
    if pool[0].fitness == pool[-1].fitness:
        raise DegeneratePopulationError("all candidate fitnesses are identical")
    weights = rank_selection_weights(len(pool))
    probs = weights / weights.sum()
    for _ in range(max_retries):
        i, j = rng.choice(len(pool), size=2, replace=False, p=probs)
        a, b = pool[int(i)], pool[int(j)]
        if a.fitness != b.fitness:
            return (a, b) if a.fitness > b.fitness else (b, a)
    return pool[0], pool[-1]


@dataclass
class EvolutionResult:
    elitist: SolverCandidate
    history: dict
    partial: bool = False


def _content_repr(wire: list[dict]) -> str:
    return json.dumps(wire)


def _valuations_repr(valuations: np.ndarray) -> str:
    return json.dumps([float(v) for v in valuations])


def evolve(
    seed_candidate: SolverCandidate,
    logs: list[InteractionLog],
    true_setting: AgentSetting,
    outcomes: OutcomeSpace,
    market: MarketParams,
    params: EvolutionParams,
    llm: LLMBackend | dict[str, LLMBackend],
    runner: SolverRunner,
    rng_seed: int = 0,
    out_dir: str | Path | None = None,
    fitness_mode: str = "interaction",
) -> EvolutionResult:
    """Run the full evolution loop and return the elitist solver.

    The loop is deterministic for a fixed seed and scripted backend: LLM
    calls happen sequentially in a fixed order and every evaluation is
    counted exactly once against ``params.total_budget``. Backend exhaustion
    (budget or transport) stops the run gracefully with a partial flag
    rather than losing the elitist found so far.

    When an epoch's selectable population collapses to a single fitness
    value no reflective pair exists; the epoch then skips crossover and
    proceeds straight to mutation so the budget still drains and the run
    still terminates.
    """
    rng = np.random.default_rng(rng_seed)
    backends = llm if isinstance(llm, dict) else {
        role: llm
        for role in ("generator", "short_reflector", "crossover", "long_reflector", "mutation")
    }
    wire = logs_to_wire(logs)
    base_context = {
        "func_desc": func_desc(outcomes.m_count),
        "v": _valuations_repr(outcomes.valuations),
        "contract_logs": _content_repr(wire),
    }

    candidates: list[SolverCandidate] = []
    reflections: list[Reflection] = []
    notes: list[str] = []
    elitist_by_epoch: list[int] = []
    evaluations = 0
    partial = False

    def new_candidate(source: str, origin: str, parents=(), epoch=0) -> SolverCandidate:
        cand = SolverCandidate(len(candidates), source, origin, tuple(parents), epoch)
        candidates.append(cand)
        return cand

    def score(cand: SolverCandidate) -> None:
        nonlocal evaluations
        evaluate_candidate(
            cand, logs, outcomes, market, true_setting, runner,
            fitness_mode=fitness_mode,
        )
        evaluations += 1

    def better(a: SolverCandidate | None, b: SolverCandidate) -> SolverCandidate:
        if b.fitness is None:
            return a if a is not None else b
        if a is None or a.fitness is None or b.fitness > a.fitness:
            return b
        return a

    elitist: SolverCandidate | None = None
    population = Population()
    epoch = 0
    try:
        # Initialization: ask the generator for init_size fresh solvers.
        prompt = render_prompt(
            "generator", {**base_context, "seed_func": seed_candidate.source_text}
        )
        for _ in range(params.init_size):
            if evaluations >= params.total_budget:
                break
            completion = backends["generator"].complete(prompt.system, prompt.user)
            extraction = extract_code(completion)
            if not extraction.fenced:
                warnings.warn("generator reply had no code fence; using it verbatim",
                              stacklevel=2)
            cand = new_candidate(extraction.source, "init")
            score(cand)
            elitist = better(elitist, cand)
        population.members = list(candidates)

        long_reflection = ""
        while evaluations < params.total_budget:
            epoch += 1
            new_members: list[SolverCandidate] = []
            thetas: list[str] = []
            try:
                for _ in range(params.selection_size // 2):
                    if evaluations >= params.total_budget:
                        break
                    best, worst = rank_select_pair(population.members, rng)
                    short_prompt = render_prompt(
                        "short_reflector",
                        {
                            **base_context,
                            "worse_code": worst.source_text,
                            "better_code": best.source_text,
                        },
                    )
                    theta = backends["short_reflector"].complete(
                        short_prompt.system, short_prompt.user
                    )
                    thetas.append(theta)
                    reflections.append(Reflection("short", theta, epoch))
                    cross_prompt = render_prompt(
                        "crossover",
                        {
                            **base_context,
                            "func_signature0": func_signature(1),
                            "worse_code": worst.source_text,
                            "func_signature1": func_signature(1),
                            "better_code": best.source_text,
                            "reflection": theta,
                        },
                    )
                    completion = backends["crossover"].complete(
                        cross_prompt.system, cross_prompt.user
                    )
                    offspring = new_candidate(
                        extract_code(completion).source,
                        "crossover",
                        parents=(best.candidate_id, worst.candidate_id),
                        epoch=epoch,
                    )
                    score(offspring)
                    elitist = better(elitist, offspring)
                    new_members.extend([best, worst, offspring])
            except DegeneratePopulationError as exc:
                notes.append(f"epoch {epoch}: crossover skipped ({exc})")

            if thetas:
                long_prompt = render_prompt(
                    "long_reflector",
                    {
                        "prior_reflection": long_reflection,
                        "new_reflection": "\n".join(thetas),
                    },
                )
                long_reflection = backends["long_reflector"].complete(
                    long_prompt.system, long_prompt.user
                )
                reflections.append(Reflection("long", long_reflection, epoch))

            for _ in range(params.mutation_count):
                if evaluations >= params.total_budget or elitist is None:
                    break
                mut_prompt = render_prompt(
                    "mutation",
                    {
                        **base_context,
                        "reflection": long_reflection,
                        "func_signature1": func_signature(1),
                        "elitist_code": elitist.source_text,
                    },
                )
                completion = backends["mutation"].complete(
                    mut_prompt.system, mut_prompt.user
                )
                mutant = new_candidate(
                    extract_code(completion).source,
                    "mutation",
                    parents=(elitist.candidate_id,),
                    epoch=epoch,
                )
                score(mutant)
                elitist = better(elitist, mutant)
                new_members.append(mutant)

            if elitist is not None:
                elitist_by_epoch.append(elitist.candidate_id)
            if new_members:
                population.members = new_members
            elif evaluations < params.total_budget:
                # Nothing advanced this epoch and budget remains: stop rather
                # than spin (can happen when the LLM keeps erroring softly).
                notes.append(f"epoch {epoch}: no progress, stopping early")
                partial = True
                break
    except (BudgetExceededError, LLMError) as exc:
        notes.append(f"stopped early: {exc}")
        partial = True

    if elitist is None:
        raise RuntimeError("no candidate was ever evaluated; cannot pick an elitist")

    history = {
        "params": {
            "init_size": params.init_size,
            "selection_size": params.selection_size,
            "mutation_count": params.mutation_count,
            "total_budget": params.total_budget,
        },
        "rng_seed": rng_seed,
        "fitness_mode": fitness_mode,
        "log_count": len(logs),
        "evaluations": evaluations,
        "interaction_rounds": len(logs) + evaluations,
        "epochs": epoch,
        "partial": partial,
        "elitist_id": elitist.candidate_id,
        "elitist_by_epoch": elitist_by_epoch,
        "notes": notes,
        "candidates": [
            {**cand.meta(), "source": cand.source_text} for cand in candidates
        ],
        "reflections": [
            {"kind": r.kind, "epoch": r.epoch, "text": r.text} for r in reflections
        ],
    }
    if out_dir is not None:
        write_run_artifacts(out_dir, history, elitist)
    return EvolutionResult(elitist, history, partial)


def history_digest(history: dict) -> str:
    """Stable digest of a run's full audit trail."""
    canonical = json.dumps(history, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_run_artifacts(out_dir: str | Path, history: dict, elitist: SolverCandidate) -> None:
    """Lay out the run directory: per-candidate sources and metadata, the
    reflection stream, the elitist source, and the full history."""
    out = Path(out_dir)
    (out / "candidates").mkdir(parents=True, exist_ok=True)
    for cand in history["candidates"]:
        stem = out / "candidates" / f"{cand['id']:03d}"
        stem.with_suffix(".src").write_text(cand["source"], encoding="utf-8")
        meta = {k: v for k, v in cand.items() if k != "source"}
        stem.with_suffix(".meta.json").write_text(
            json.dumps(meta, indent=2) + "\n", encoding="utf-8"
        )
    with open(out / "reflections.jsonl", "w", encoding="utf-8") as fh:
        for refl in history["reflections"]:
            fh.write(json.dumps(refl) + "\n")
    (out / "elitist.src").write_text(elitist.source_text, encoding="utf-8")
    (out / "history.json").write_text(
        json.dumps(history, indent=2) + "\n", encoding="utf-8"
    )
