"""Experiment orchestration: single runs, sweeps, CSV persistence, replay.

Every results row carries the scenario digest, the seed, and (in its JSON
artifact) the derived contract, so any row can be re-simulated exactly.
Floats are written with 9 significant digits; undefined metrics appear as
``nan``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import bandit_run, zero_shot_transfer
from .design import ContractSolution, optimize_contract
from .evolution.llm import LLMBackend, MockBackend
from .evolution.loop import EvolutionParams, SolverCandidate, evolve
from .evolution.runner import SandboxCliRunner, SolverRunner, StubSeedRunner
from .evolution.seed import SEED_SOLVER_SOURCE
from .inference import DEFAULT_ACTION_COUNT, NoAcceptedLogsError, seed_solve
from .metrics import compute_metrics
from .model import Contract, best_response, principal_utility
from .scenario import (
    Scenario,
    SimScenarioConfig,
    generate_random_logs,
    generate_sim_setting,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

__all__ = [
    "CSV_HEADER",
    "ExperimentConfig",
    "RunRow",
    "ExperimentResult",
    "scenario_digest",
    "run_experiment",
    "run_sweep",
    "load_sweep_config",
    "write_results_csv",
    "read_results_csv",
    "write_row_artifact",
    "replay_row",
    "summarize_rows",
]

CSV_HEADER = (
    "scenario_digest,method,K,M,N,alpha,repeat,seed,"
    "pi_T,pi_T_pct,pi_A,pi_A_pct,eta,status"
)

METHODS = ("seed", "bandit", "zero-shot", "evolve", "oracle")


def _fmt(value: float) -> str:
    return format(float(value), ".9g")


def scenario_digest(scenario: Scenario) -> str:
    blob = json.dumps(scenario_to_dict(scenario), sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def _derive_seeds(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "scenario": int(rng.integers(2**63)),
        "logs": int(rng.integers(2**63)),
        "method": int(rng.integers(2**63)),
    }


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment cell: scenario source, log budget, method, and seeds.

    Repeats default to 5 seed-strided draws whose mean is reported alongside
    the per-repeat rows.
    """

    k_logs: int
    method: str
    scenario_path: str | None = None
    sim: SimScenarioConfig | None = None
    method_params: dict = field(default_factory=dict)
    rng_seed: int = 0
    repeats: int = 5
    out_dir: str | None = None

    def __post_init__(self):
        if self.k_logs < 1:
            raise ValueError("k_logs must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if (self.scenario_path is None) == (self.sim is None):
            raise ValueError("exactly one of scenario_path or sim must be given")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.method == "zero-shot" and "candidate_source" not in self.method_params:
            raise ValueError("zero-shot needs method_params['candidate_source']")


@dataclass
class RunRow:
    scenario_digest: str
    method: str
    k: int
    m: int
    n: int
    alpha: float
    repeat: int
    seed: int
    pi_t: float
    pi_t_pct: float
    pi_a: float
    pi_a_pct: float
    eta: float
    status: str
    contract: list[float]
    scenario: dict

    def csv_fields(self) -> list[str]:
        # status is the final column and may carry failure detail; keep it
        # free of separators so the fixed header stays machine-splittable
        status = self.status.replace(",", ";").replace("\n", " ")
        return [
            self.scenario_digest,
            self.method,
            str(self.k),
            str(self.m),
            str(self.n),
            _fmt(self.alpha),
            str(self.repeat),
            str(self.seed),
            _fmt(self.pi_t),
            _fmt(self.pi_t_pct),
            _fmt(self.pi_a),
            _fmt(self.pi_a_pct),
            _fmt(self.eta),
            status,
        ]

    def artifact(self) -> dict:
        return {
            "scenario_digest": self.scenario_digest,
            "method": self.method,
            "K": self.k,
            "repeat": self.repeat,
            "seed": self.seed,
            "pi_T": self.pi_t,
            "contract": self.contract,
            "scenario": self.scenario,
        }


@dataclass
class ExperimentResult:
    rows: list[RunRow]
    mean_report: dict

    @property
    def first_row(self) -> RunRow:
        return self.rows[0]


def _build_runner(params: dict) -> SolverRunner:
    if params.get("sandbox_cmd"):
        return SandboxCliRunner(
            command=tuple(params["sandbox_cmd"]),
            timeout=float(params.get("sandbox_timeout", 30.0)),
            memory_mb=int(params.get("sandbox_memory_mb", 1024)),
        )
    return StubSeedRunner(
        n_hat=int(params.get("n_hat", DEFAULT_ACTION_COUNT)),
        rng_seed=int(params.get("runner_seed", 0)),
    )


def _build_backend(params: dict) -> LLMBackend:
    kind = params.get("llm", "mock")
    if isinstance(kind, LLMBackend):
        return kind
    max_calls = params.get("max_llm_calls")
    if kind == "mock":
        # Default mock echoes the seed solver, the identity population.
        return MockBackend(
            default=f"```python\n{SEED_SOLVER_SOURCE}\n```", max_calls=max_calls
        )
    if kind == "replay":
        return _replay_backend(params, max_calls)
    if kind == "live":
        return _live_backend(params, max_calls)
    raise ValueError(f"unknown llm backend {kind!r}")


def _replay_backend(params: dict, max_calls):
    from .evolution.llm import ReplayBackend

    if "transcript" not in params:
        raise ValueError("replay backend needs method_params['transcript']")
    return ReplayBackend(params["transcript"], max_calls=max_calls)


def _live_backend(params: dict, max_calls):
    from .evolution.llm import DEFAULT_API_KEY_ENV, LiveBackend

    return LiveBackend(
        endpoint=params.get("endpoint", "https://api.openai.com/v1/chat/completions"),
        model=params.get("model", "gpt-4.1-mini-2025-04-14"),
        api_key_env=params.get("api_key_env", DEFAULT_API_KEY_ENV),
        max_calls=max_calls,
        transcript_path=params.get("transcript_out"),
    )


def _run_method(
    config: ExperimentConfig, scenario: Scenario, logs, method_seed: int, repeat: int = 0
):
    """Dispatch one method; returns (ContractSolution, status)."""
    params = config.method_params
    setting, outcomes, market = scenario.setting, scenario.outcomes, scenario.market
    if config.method == "oracle":
        return optimize_contract(setting, outcomes, market), "ok"
    if config.method == "seed":
        try:
            inferred = seed_solve(
                logs,
                outcomes,
                market,
                n_hat=int(params.get("n_hat", DEFAULT_ACTION_COUNT)),
                rng_seed=method_seed,
            )
        except NoAcceptedLogsError as exc:
            return ContractSolution.null(outcomes.m_count), f"failed: {exc}"
        return optimize_contract(inferred, outcomes, market), "ok"
    if config.method == "bandit":
        result = bandit_run(
            setting,
            outcomes,
            market,
            rounds=int(params.get("rounds", 300)),
            grid_size=int(params.get("grid_size", 11)),
            rng_seed=method_seed,
        )
        realized = principal_utility(result.best_contract, setting, market, outcomes)
        reply = best_response(result.best_contract, setting, market, outcomes)
        return ContractSolution(result.best_contract, reply.action_index, realized), "ok"
    if config.method == "zero-shot":
        source = params["candidate_source"]
        if isinstance(source, (str, Path)) and Path(source).exists():
            source = Path(source).read_text(encoding="utf-8")
        candidate = SolverCandidate(0, source, "seed")
        solution = zero_shot_transfer(
            candidate, logs, outcomes, market, _build_runner(params)
        )
        status = "ok" if solution.failure_reason is None else f"failed: {solution.failure_reason}"
        return solution, status
    if config.method == "evolve":
        seed_candidate = SolverCandidate(0, SEED_SOLVER_SOURCE, "seed")
        evo_params = EvolutionParams(
            init_size=int(params.get("init_size", 10)),
            selection_size=int(params.get("selection_size", 10)),
            mutation_count=int(params.get("mutation_count", 2)),
            total_budget=int(params.get("iters", 200)),
        )
        runner = _build_runner(params)
        evolve_out = params.get("evolve_out")
        if evolve_out is not None and config.repeats > 1:
            evolve_out = Path(evolve_out) / f"repeat-{repeat}"
        result = evolve(
            seed_candidate,
            logs,
            setting,
            outcomes,
            market,
            evo_params,
            _build_backend(params),
            runner,
            rng_seed=method_seed,
            out_dir=evolve_out,
        )
        solution = zero_shot_transfer(result.elitist, logs, outcomes, market, runner)
        status = "ok" if not result.partial else "partial"
        if solution.failure_reason is not None:
            status = f"failed: {solution.failure_reason}"
        return solution, status
    raise AssertionError(f"unhandled method {config.method}")


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run one experiment cell across its repeats.

    Per repeat: build or load the scenario, simulate the exploration logs,
    run the method, derive the contract, and score it against the truth.
    Repeats stride the seed so each one draws fresh randomness; the mean of
    each defined metric is reported alongside the per-repeat rows.
    """
    rows = []
    for repeat in range(config.repeats):
        seed = config.rng_seed + repeat
        seeds = _derive_seeds(seed)
        if config.scenario_path is not None:
            scenario = load_scenario(config.scenario_path)
            alpha = scenario.outcomes.alpha
        else:
            sim = dataclasses.replace(config.sim, rng_seed=seeds["scenario"])
            scenario = generate_sim_setting(sim)
            alpha = float("nan") if sim.alpha is None else sim.alpha
        logs = generate_random_logs(
            config.k_logs,
            scenario.setting,
            scenario.market,
            scenario.outcomes,
            rng_seed=seeds["logs"],
        )
        solution, status = _run_method(config, scenario, logs, seeds["method"], repeat)
        report = compute_metrics(
            solution, scenario.setting, scenario.outcomes, scenario.market
        )
        rows.append(
            RunRow(
                scenario_digest=scenario_digest(scenario),
                method=config.method,
                k=config.k_logs,
                m=scenario.outcomes.m_count,
                n=scenario.setting.n_count,
                alpha=alpha,
                repeat=repeat,
                seed=seed,
                pi_t=report.raw["pi_t"],
                pi_t_pct=report.pi_t_pct,
                pi_a=report.raw["pi_a"],
                pi_a_pct=report.pi_a_pct,
                eta=report.eta,
                status=status,
                contract=[float(v) for v in solution.contract.payments],
                scenario=scenario_to_dict(scenario),
            )
        )
    return ExperimentResult(rows, _mean_metrics(rows))


def _mean_metrics(rows: list[RunRow]) -> dict:
    means = {}
    for name in ("pi_t", "pi_t_pct", "pi_a", "pi_a_pct", "eta"):
        values = [getattr(r, name) for r in rows if not math.isnan(getattr(r, name))]
        means[name] = sum(values) / len(values) if values else float("nan")
    return means


def load_sweep_config(path: str | Path) -> dict:
    """Sweep file: JSON grids for K/M/N/alpha plus methods and run knobs."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in ("k", "m", "n", "methods"):
        if key not in raw:
            raise ValueError(f"{path}: sweep config is missing '{key}'")
    return raw


def run_sweep(
    sweep: dict,
    rng_seed: int = 0,
    repeats: int = 1,
    out_dir: str | Path | None = None,
    method_params: dict | None = None,
) -> list[RunRow]:
    """Run the full cross product of a sweep grid; one cell per
    (K, M, N, alpha, method) combination."""
    alphas = sweep.get("alpha", [None])
    rows: list[RunRow] = []
    cell = 0
    for k in sweep["k"]:
        for m in sweep["m"]:
            for n in sweep["n"]:
                for alpha in alphas:
                    for method in sweep["methods"]:
                        params = dict(method_params or {})
                        params.update(sweep.get("method_params", {}))
                        config = ExperimentConfig(
                            k_logs=int(k),
                            method=method,
                            sim=SimScenarioConfig(
                                m_count=int(m), n_count=int(n), alpha=alpha
                            ),
                            method_params=params,
                            rng_seed=rng_seed + 10_000 * cell,
                            repeats=repeats,
                        )
                        rows.extend(run_experiment(config).rows)
                        cell += 1
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_results_csv(rows, out / "results.csv")
        for i, row in enumerate(rows):
            write_row_artifact(row, out / "rows" / f"{i:05d}.json")
    return rows


def write_results_csv(rows: list[RunRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(",".join(row.csv_fields()) + "\n")


def read_results_csv(path: str | Path) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected results header")
    names = CSV_HEADER.split(",")
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",", len(names) - 1)
        rec = dict(zip(names, parts))
        for key in ("pi_T", "pi_T_pct", "pi_A", "pi_A_pct", "eta", "alpha"):
            rec[key] = float(rec[key])
        for key in ("K", "M", "N", "repeat", "seed"):
            rec[key] = int(rec[key])
        out.append(rec)
    return out


def write_row_artifact(row: RunRow, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(row.artifact(), indent=2) + "\n", encoding="utf-8")


def replay_row(artifact: dict | str | Path) -> float:
    """Re-simulate a stored row's contract against its stored scenario."""
    if isinstance(artifact, (str, Path)):
        artifact = json.loads(Path(artifact).read_text(encoding="utf-8"))
    scenario = scenario_from_dict(
        artifact["scenario"], source="<row artifact>", warn_default_cost=False
    )
    contract = Contract(np.asarray(artifact["contract"], dtype=float))
    return principal_utility(
        contract, scenario.setting, scenario.market, scenario.outcomes
    )


def summarize_rows(records: list[dict]) -> str:
    """Plain-text summary table of a results CSV, grouped by method."""
    groups: dict[str, list[dict]] = {}
    for rec in records:
        groups.setdefault(rec["method"], []).append(rec)
    lines = [
        f"{'method':<10} {'rows':>5} {'pi_T':>12} {'pi_T_pct':>12} {'eta':>12}"
    ]
    for method in sorted(groups):
        recs = groups[method]

        def mean(key: str) -> float:
            vals = [r[key] for r in recs if not math.isnan(r[key])]
            return sum(vals) / len(vals) if vals else float("nan")

        lines.append(
            f"{method:<10} {len(recs):>5} {mean('pi_T'):>12.6g} "
            f"{mean('pi_T_pct'):>12.6g} {mean('eta'):>12.6g}"
        )
    return "\n".join(lines)
