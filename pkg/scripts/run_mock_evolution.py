#!/usr/bin/env python3
"""Demonstrate the solver-evolution loop without any LLM.

A scripted mock backend seeds the population with the trivial solver and
injects one hand-written 'improved' candidate (it simply returns the true
setting), showing the elitist switch and the audit trail the loop leaves
behind. Run artifacts land under --out.
"""

import argparse
from pathlib import Path

import numpy as np

from contract_learn.evolution.llm import MockBackend
from contract_learn.evolution.loop import EvolutionParams, SolverCandidate, evolve, history_digest
from contract_learn.evolution.runner import StubSeedRunner
from contract_learn.evolution.seed import SEED_SOLVER_SOURCE
from contract_learn.scenario import SimScenarioConfig, generate_random_logs, generate_sim_setting


def fenced(source: str) -> str:
    return f"```python\n{source}\n```"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("evolution_demo"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--iters", type=int, default=20)
    args = parser.parse_args()

    scenario = generate_sim_setting(
        SimScenarioConfig(m_count=2, n_count=3, rng_seed=args.seed)
    )
    logs = generate_random_logs(
        50, scenario.setting, scenario.market, scenario.outcomes,
        rng_seed=args.seed + 1,
    )

    oracle_source = "def agent_solver_v2(v, content):\n    return ORACLE"
    oracle_matrix = np.hstack(
        [scenario.setting.p_matrix, scenario.setting.costs[:, None]]
    )
    backend = MockBackend(
        [fenced(SEED_SOLVER_SOURCE)] * 4 + [fenced(oracle_source)],
        default=fenced(SEED_SOLVER_SOURCE),
    )
    result = evolve(
        SolverCandidate(0, SEED_SOLVER_SOURCE, "seed"),
        logs,
        scenario.setting,
        scenario.outcomes,
        scenario.market,
        EvolutionParams(init_size=4, selection_size=2, mutation_count=1,
                        total_budget=args.iters),
        backend,
        StubSeedRunner(overrides={oracle_source: oracle_matrix}),
        rng_seed=args.seed,
        out_dir=args.out,
    )
    print(f"evaluations: {result.history['evaluations']}")
    print(f"elitist: candidate {result.elitist.candidate_id} "
          f"(origin {result.elitist.origin}, epoch {result.elitist.epoch}) "
          f"fitness {result.elitist.fitness:.6g}")
    print(f"history digest: {history_digest(result.history)}")
    print(f"artifacts: {args.out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
