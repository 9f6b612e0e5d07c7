"""Spawn-run-exit execution of one candidate on one instance."""

from __future__ import annotations

import json
import os
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from importlib import resources

from .protocol import ProtocolError, SandboxRequest, SandboxResponse, parse_response

__all__ = ["Limits", "run_candidate", "reference_seed_path"]


@dataclass(frozen=True)
class Limits:
    wall_seconds: float = 30.0
    memory_mb: int = 1024


def reference_seed_path() -> str:
    """Filesystem location of the bundled reference seed solver."""
    return str(resources.files("solver_sandbox").joinpath("reference/seed_solver.py"))


def run_candidate(
    source_text: str,
    request: SandboxRequest,
    limits: Limits = Limits(),
) -> SandboxResponse:
    """Execute candidate source in a fresh jailed subprocess.

    Every run gets its own interpreter, working directory, memory cap, and
    wall-clock deadline; the subprocess is single-use. All failure modes come
    back as structured error responses rather than exceptions, except for a
    broken child protocol, which is reported as a crash-kind response with
    the child's stderr attached.
    """
    with tempfile.TemporaryDirectory(prefix="sandbox-jail-") as jail:
        envelope = json.dumps(
            {
                "source": source_text,
                "v": request.v,
                "content": request.content,
                "memory_mb": limits.memory_mb,
                "jail": jail,
            }
        )
        env = dict(os.environ)
        env.update(
            {
                "PYTHONDONTWRITEBYTECODE": "1",
                "TMPDIR": jail,
                "OMP_NUM_THREADS": "1",
                "OPENBLAS_NUM_THREADS": "1",
                "MKL_NUM_THREADS": "1",
                # keep joblib from probing core counts via subprocess
                "LOKY_MAX_CPU_COUNT": "1",
            }
        )
        try:
            proc = subprocess.run(
                [sys.executable, "-m", "solver_sandbox._child"],
                input=envelope,
                capture_output=True,
                text=True,
                timeout=limits.wall_seconds,
                cwd=jail,
                env=env,
            )
        except subprocess.TimeoutExpired:
            return SandboxResponse.failure(
                "timeout", f"no response within {limits.wall_seconds}s"
            )
    if proc.returncode != 0 or not proc.stdout.strip():
        detail = (proc.stderr or "").strip()[-2000:]
        return SandboxResponse.failure(
            "crash", f"executor exited with {proc.returncode}: {detail}"
        )
    try:
        return parse_response(proc.stdout)
    except ProtocolError as exc:
        return SandboxResponse.failure("crash", f"unparsable executor output: {exc}")
