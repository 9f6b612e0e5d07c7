"""Isolated runner for generated agent-setting solvers."""

from .protocol import (
    ERROR_KINDS,
    ProtocolError,
    SandboxRequest,
    SandboxResponse,
    parse_request,
    parse_response,
)
from .runner import Limits, reference_seed_path, run_candidate

__version__ = "0.1.0"
