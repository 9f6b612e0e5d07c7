"""Command-line surface for the contract-design toolkit.

Subcommands: gen, seed-solve, optimize, validate, bandit, evolve, bench,
report. Every command that draws randomness takes --seed and is exactly
reproducible from it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .baselines import bandit_run, write_bandit_trace
from .design import optimize_contract
from .evolution.llm import MockBackend
from .evolution.loop import EvolutionParams, SolverCandidate, evolve, history_digest
from .evolution.runner import SandboxCliRunner, StubSeedRunner
from .evolution.seed import SEED_SOLVER_SOURCE
from .experiments import (
    ExperimentConfig,
    read_results_csv,
    run_experiment,
    summarize_rows,
    write_results_csv,
    write_row_artifact,
)
from .inference import DEFAULT_ACTION_COUNT, seed_solve, validate_setting
from .metrics import compute_metrics
from .model import AgentSetting
from .scenario import (
    SimScenarioConfig,
    generate_random_logs,
    generate_sim_setting,
    load_scenario,
    read_logs,
    save_scenario,
    write_logs,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="rng seed")
    parser.add_argument("--out", type=Path, default=None, help="output directory")


def _out_dir(args) -> Path:
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_setting(path: Path) -> AgentSetting:
    raw = json.loads(path.read_text(encoding="utf-8"))
    return AgentSetting(len(raw["P"]), np.asarray(raw["P"]), np.asarray(raw["c"]))


def _dump_setting(setting: AgentSetting) -> dict:
    return {
        "P": [[float(v) for v in row] for row in setting.p_matrix],
        "c": [float(v) for v in setting.costs],
    }


def cmd_gen(args) -> int:
    out = _out_dir(args)
    scenario = generate_sim_setting(
        SimScenarioConfig(
            m_count=args.m, n_count=args.n, rng_seed=args.seed, alpha=args.alpha
        )
    )
    save_scenario(scenario, out / "scenario.json")
    logs = generate_random_logs(
        args.k, scenario.setting, scenario.market, scenario.outcomes,
        rng_seed=args.seed + 1,
    )
    write_logs(logs, out / "logs.jsonl")
    print(f"wrote {out / 'scenario.json'} and {len(logs)} logs to {out / 'logs.jsonl'}")
    return 0


def cmd_seed_solve(args) -> int:
    scenario = load_scenario(args.scenario)
    logs = read_logs(args.logs)
    setting = seed_solve(
        logs, scenario.outcomes, scenario.market, n_hat=args.n_hat, rng_seed=args.seed
    )
    out = _out_dir(args)
    path = out / "inferred.json"
    path.write_text(json.dumps(_dump_setting(setting), indent=2) + "\n", encoding="utf-8")
    report = validate_setting(setting, logs, scenario.outcomes, scenario.market)
    print(f"wrote {path} (consistent with logs: {report.overall_consistent})")
    return 0


def cmd_optimize(args) -> int:
    scenario = load_scenario(args.scenario)
    setting = _load_setting(args.setting) if args.setting else scenario.setting
    solution = optimize_contract(setting, scenario.outcomes, scenario.market)
    out = _out_dir(args)
    path = out / "contract.json"
    path.write_text(
        json.dumps(
            {
                "payments": [float(v) for v in solution.contract.payments],
                "target_action": solution.target_action,
                "predicted_principal_utility": solution.predicted_principal_utility,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    report = compute_metrics(solution, scenario.setting, scenario.outcomes, scenario.market)
    print(f"wrote {path}; eta against the true setting: {report.eta:.6g}")
    return 0


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    logs = read_logs(args.logs)
    setting = _load_setting(args.setting) if args.setting else scenario.setting
    report = validate_setting(
        setting, logs, scenario.outcomes, scenario.market, tol=args.tol
    )
    if report.overall_consistent:
        print("consistent")
        return 0
    counts = ", ".join(f"{k}={v}" for k, v in sorted(report.violation_counts.items()))
    print(f"inconsistent: {counts}")
    return 1


def cmd_bandit(args) -> int:
    scenario = load_scenario(args.scenario)
    result = bandit_run(
        scenario.setting,
        scenario.outcomes,
        scenario.market,
        rounds=args.rounds,
        grid_size=args.grid_size,
        rng_seed=args.seed,
    )
    out = _out_dir(args)
    trace_path = out / "bandit_trace.csv"
    write_bandit_trace(result.trace, trace_path)
    print(
        f"best arm {result.best_arm} (beta={result.state.betas[result.best_arm]:.3g}); "
        f"trace written to {trace_path}"
    )
    return 0


def cmd_evolve(args) -> int:
    scenario = load_scenario(args.scenario)
    logs = read_logs(args.logs)
    if args.k is not None:
        logs = logs[: args.k]
    if args.llm == "mock":
        backend = MockBackend(
            default=f"```python\n{SEED_SOLVER_SOURCE}\n```",
            max_calls=args.max_llm_calls,
        )
    elif args.llm == "replay":
        from .evolution.llm import ReplayBackend

        backend = ReplayBackend(args.transcript, max_calls=args.max_llm_calls)
    else:
        from .evolution.llm import LiveBackend

        backend = LiveBackend(
            endpoint=args.endpoint,
            model=args.model,
            max_calls=args.max_llm_calls,
            transcript_path=args.transcript_out,
        )
    runner = (
        SandboxCliRunner(command=tuple(args.sandbox_cmd.split()))
        if args.sandbox_cmd
        else StubSeedRunner(n_hat=args.n_hat)
    )
    result = evolve(
        SolverCandidate(0, SEED_SOLVER_SOURCE, "seed"),
        logs,
        scenario.setting,
        scenario.outcomes,
        scenario.market,
        EvolutionParams(total_budget=args.iters),
        backend,
        runner,
        rng_seed=args.seed,
        out_dir=_out_dir(args),
    )
    fitness = "failed" if result.elitist.fitness is None else f"{result.elitist.fitness:.9g}"
    print(
        f"elitist candidate {result.elitist.candidate_id} fitness {fitness}; "
        f"history digest {history_digest(result.history)}"
    )
    return 0


def cmd_bench(args) -> int:
    out = _out_dir(args)
    rows = []
    for method in args.methods.split(","):
        method = method.strip()
        params = {"iters": args.iters, "rounds": args.rounds}
        if method == "zero-shot":
            if args.candidate is None:
                raise ValueError("zero-shot benchmarking needs --candidate")
            params["candidate_source"] = str(args.candidate)
        config = ExperimentConfig(
            k_logs=args.k,
            method=method,
            sim=SimScenarioConfig(m_count=args.m, n_count=args.n, alpha=args.alpha),
            method_params=params,
            rng_seed=args.seed,
            repeats=args.repeats,
        )
        rows.extend(run_experiment(config).rows)
    csv_path = out / "results.csv"
    write_results_csv(rows, csv_path)
    for i, row in enumerate(rows):
        write_row_artifact(row, out / "rows" / f"{i:05d}.json")
    print(f"wrote {len(rows)} rows to {csv_path}")
    return 0


def cmd_report(args) -> int:
    records = read_results_csv(args.csv)
    print(summarize_rows(records))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contract-learn",
        description="Online-learning contract design toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a simulated scenario and logs")
    _add_common(p)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, default=25)
    p.add_argument("--alpha", type=float, default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("seed-solve", help="infer a setting from logs")
    _add_common(p)
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--logs", type=Path, required=True)
    p.add_argument("--n-hat", type=int, default=DEFAULT_ACTION_COUNT)
    p.set_defaults(func=cmd_seed_solve)

    p = sub.add_parser("optimize", help="derive the best contract for a setting")
    _add_common(p)
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--setting", type=Path, default=None,
                   help="inferred setting JSON; defaults to the true setting")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("validate", help="check a setting against logs")
    _add_common(p)
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--logs", type=Path, required=True)
    p.add_argument("--setting", type=Path, default=None)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bandit", help="run the UCB1 contract bandit")
    _add_common(p)
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--rounds", type=int, default=300)
    p.add_argument("--grid-size", type=int, default=11)
    p.set_defaults(func=cmd_bandit)

    p = sub.add_parser("evolve", help="evolve a setting-inference solver")
    _add_common(p)
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--logs", type=Path, required=True)
    p.add_argument("--llm", choices=("mock", "replay", "live"), default="mock")
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--k", type=int, default=None, help="truncate logs to the first K")
    p.add_argument("--n-hat", type=int, default=DEFAULT_ACTION_COUNT)
    p.add_argument("--max-llm-calls", type=int, default=None)
    p.add_argument("--transcript", type=Path, default=None, help="replay transcript")
    p.add_argument("--transcript-out", type=Path, default=None)
    p.add_argument("--endpoint", default="https://api.openai.com/v1/chat/completions")
    p.add_argument("--model", default="gpt-4.1-mini-2025-04-14")
    p.add_argument("--sandbox-cmd", default=None,
                   help="run candidates through this sandbox command instead of the stub")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("bench", help="benchmark methods on a simulated scenario")
    _add_common(p)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--methods", default="seed,bandit,oracle")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--rounds", type=int, default=300)
    p.add_argument("--candidate", type=Path, default=None,
                   help="elitist source file for the zero-shot method")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="summarize a results CSV")
    p.add_argument("csv", type=Path)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
