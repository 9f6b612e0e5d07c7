"""Executing candidate solver source on an instance and validating the result.

Two interchangeable runners produce the inferred-setting matrix for a
candidate: ``SandboxCliRunner`` drives the external sandbox over its JSON
stdin/stdout protocol, and ``StubSeedRunner`` stands in when no sandbox is
built, answering with the library's own seed pipeline (plus optional scripted
matrices for tests). Matrix structure is validated here either way before an
``AgentSetting`` is built from it.
"""

from __future__ import annotations

import json
import subprocess
import tempfile
from pathlib import Path
from typing import Mapping, Protocol

import numpy as np

from ..inference import seed_solve
from ..model import AgentSetting, Contract, InteractionLog, MarketParams, OutcomeSpace

__all__ = [
    "SolverExecutionError",
    "SolverRunner",
    "StubSeedRunner",
    "SandboxCliRunner",
    "logs_to_wire",
    "wire_to_logs",
    "setting_from_matrix",
]


class SolverExecutionError(RuntimeError):
    """A candidate run did not produce a usable setting matrix."""

    def __init__(self, kind: str, detail: str):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail


def logs_to_wire(logs: list[InteractionLog]) -> list[dict]:
    """Interaction logs in the sandbox wire shape (key names are part of the
    protocol and of the prompt data; do not rename them)."""
    return [
        {
            "Contract": [float(v) for v in log.contract.payments],
            "Principal Utility": log.principal_utility,
            "Agent Action": log.accepted,
        }
        for log in logs
    ]


def wire_to_logs(content: list[dict]) -> list[InteractionLog]:
    return [
        InteractionLog(
            Contract(np.asarray(rec["Contract"], dtype=float)),
            float(rec["Principal Utility"]),
            int(rec["Agent Action"]),
        )
        for rec in content
    ]


def setting_from_matrix(matrix, m_count: int) -> AgentSetting:
    """Build an AgentSetting from an n x (M + 1) solver matrix.

    Structural checks (finite cells, stochastic rows within 1e-6 before an
    exact renormalization, nonnegative costs) reject malformed output with
    kind ``invalid-setting`` instead of letting it corrupt the LP stage.
    """
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise SolverExecutionError(
            "invalid-setting", f"expected a 2-D matrix, got shape {arr.shape}"
        )
    if arr.shape[1] != m_count + 1:
        raise SolverExecutionError(
            "invalid-setting",
            f"expected width {m_count + 1} (probabilities plus cost), "
            f"got {arr.shape[1]}",
        )
    if not np.all(np.isfinite(arr)):
        raise SolverExecutionError("invalid-setting", "matrix contains NaN or inf")
    probs = arr[:, :m_count]
    costs = arr[:, m_count]
    if np.any(probs < -1e-6) or np.any(probs > 1 + 1e-6):
        raise SolverExecutionError(
            "invalid-setting", "probability cells outside [0, 1]"
        )
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        bad = int(np.argmax(np.abs(sums - 1.0) > 1e-6))
        raise SolverExecutionError(
            "invalid-setting", f"row {bad} sums to {sums[bad]:.9g}, expected 1"
        )
    if np.any(costs < -1e-9):
        bad = int(np.argmax(costs < -1e-9))
        raise SolverExecutionError(
            "invalid-setting", f"cost {bad} is negative ({costs[bad]:.9g})"
        )
    probs = np.clip(probs, 0.0, 1.0)
    probs = probs / probs.sum(axis=1, keepdims=True)
    return AgentSetting(arr.shape[0], probs, np.clip(costs, 0.0, None))


class SolverRunner(Protocol):
    """Runs one candidate's source on one instance, returning the raw matrix."""

    def run(self, source_text: str, valuations: np.ndarray, content: list[dict]) -> np.ndarray:
        ...


class StubSeedRunner:
    """Sandbox stand-in: answers every run with the seed pipeline's matrix.

    Scripted matrices can be mapped to exact source texts so tests can make
    specific candidates win or lose without executing any code. Like the
    wire protocol itself, the stub sees only (valuations, content), so the
    seed pipeline runs with zero market params.
    """

    def __init__(
        self,
        n_hat: int = 7,
        rng_seed: int = 0,
        overrides: Mapping[str, np.ndarray] | None = None,
    ):
        self.n_hat = n_hat
        self.rng_seed = rng_seed
        # Keyed on stripped source so fence extraction and trailing newlines
        # cannot defeat a scripted match.
        self.overrides = {k.strip(): v for k, v in (overrides or {}).items()}

    def run(self, source_text, valuations, content):
        key = source_text.strip()
        if key in self.overrides:
            return np.asarray(self.overrides[key], dtype=float)
        logs = wire_to_logs(content)
        outcomes = OutcomeSpace.from_valuations(np.asarray(valuations, dtype=float))
        try:
            setting = seed_solve(
                logs, outcomes, MarketParams(0.0, 0.0), self.n_hat, self.rng_seed
            )
        except ValueError as exc:
            raise SolverExecutionError("crash", str(exc)) from exc
        return np.hstack([setting.p_matrix, setting.costs[:, None]])


class SandboxCliRunner:
    """Client for the external sandbox runner executable.

    One request object goes to the child's stdin, one response object comes
    back on stdout (UTF-8 JSON, newline terminated). Structured error
    responses are surfaced as ``SolverExecutionError`` with the error kind
    the sandbox reported.
    """

    def __init__(
        self,
        command: tuple[str, ...] = ("sandbox-runner",),
        timeout: float = 30.0,
        memory_mb: int = 1024,
    ):
        self.command = tuple(command)
        self.timeout = timeout
        self.memory_mb = memory_mb

    def run(self, source_text, valuations, content):
        request = json.dumps(
            {"v": [float(v) for v in valuations], "content": content}
        )
        with tempfile.TemporaryDirectory(prefix="solver-src-") as tmp:
            source_path = Path(tmp) / "candidate.py"
            source_path.write_text(source_text, encoding="utf-8")
            argv = [
                *self.command,
                "--source",
                str(source_path),
                "--timeout",
                str(self.timeout),
                "--memory-mb",
                str(self.memory_mb),
            ]
            try:
                proc = subprocess.run(
                    argv,
                    input=request,
                    capture_output=True,
                    text=True,
                    timeout=self.timeout + 15.0,
                )
            except FileNotFoundError as exc:
                raise SolverExecutionError(
                    "sandbox-unavailable", f"cannot execute {self.command[0]!r}"
                ) from exc
            except subprocess.TimeoutExpired as exc:
                raise SolverExecutionError(
                    "timeout", "sandbox runner did not answer within the grace period"
                ) from exc
        if proc.returncode != 0:
            raise SolverExecutionError(
                "sandbox-protocol",
                f"runner exited with {proc.returncode}: {proc.stderr.strip()[:500]}",
            )
        try:
            response = json.loads(proc.stdout)
        except json.JSONDecodeError as exc:
            raise SolverExecutionError(
                "sandbox-protocol", f"unparsable runner output: {exc}"
            ) from exc
        if "error" in response:
            err = response["error"]
            raise SolverExecutionError(
                str(err.get("kind", "crash")), str(err.get("detail", ""))
            )
        if "setting" not in response:
            raise SolverExecutionError(
                "sandbox-protocol", "response carries neither a setting nor an error"
            )
        return np.asarray(response["setting"], dtype=float)
