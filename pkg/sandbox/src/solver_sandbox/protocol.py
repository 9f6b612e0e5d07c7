"""Wire protocol: one request object in, one response object out, UTF-8 JSON.

Request::

    {"v": [float, ...],
     "content": [{"Contract": [float, ...],
                  "Principal Utility": float,
                  "Agent Action": 1 | -1}, ...]}

Response (exactly one of)::

    {"setting": [[float, ...], ...]}          # n x (len(v) + 1) matrix
    {"error": {"kind": str, "detail": str}}   # kind in ERROR_KINDS

The log record key names are part of the protocol: they appear verbatim in
the prompts that produce the candidates, so generated code indexes them
byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

ERROR_KINDS = ("crash", "timeout", "malformed", "budget")

REQUIRED_LOG_KEYS = ("Contract", "Principal Utility", "Agent Action")


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class SandboxRequest:
    v: list[float]
    content: list[dict]

    def to_json(self) -> str:
        return json.dumps({"v": self.v, "content": self.content})


@dataclass(frozen=True)
class SandboxResponse:
    setting: list[list[float]] | None = None
    error_kind: str | None = None
    error_detail: str = ""

    def __post_init__(self):
        if (self.setting is None) == (self.error_kind is None):
            raise ProtocolError("response must carry exactly one of setting or error")
        if self.error_kind is not None and self.error_kind not in ERROR_KINDS:
            raise ProtocolError(f"unknown error kind {self.error_kind!r}")

    @property
    def ok(self) -> bool:
        return self.setting is not None

    def to_json(self) -> str:
        if self.setting is not None:
            return json.dumps({"setting": self.setting})
        return json.dumps(
            {"error": {"kind": self.error_kind, "detail": self.error_detail}}
        )

    @classmethod
    def failure(cls, kind: str, detail: str) -> "SandboxResponse":
        return cls(error_kind=kind, error_detail=detail)


def parse_request(text: str) -> SandboxRequest:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"request is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or "v" not in raw or "content" not in raw:
        raise ProtocolError("request must be an object with 'v' and 'content'")
    v = raw["v"]
    content = raw["content"]
    if not isinstance(v, list) or not v:
        raise ProtocolError("'v' must be a non-empty list of numbers")
    if not isinstance(content, list):
        raise ProtocolError("'content' must be a list of log records")
    for i, record in enumerate(content):
        if not isinstance(record, dict):
            raise ProtocolError(f"log record {i} is not an object")
        for key in REQUIRED_LOG_KEYS:
            if key not in record:
                raise ProtocolError(f"log record {i} is missing key {key!r}")
    return SandboxRequest([float(x) for x in v], content)


def parse_response(text: str) -> SandboxResponse:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"response is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ProtocolError("response must be an object")
    if "setting" in raw:
        return SandboxResponse(setting=raw["setting"])
    if "error" in raw:
        err = raw["error"]
        return SandboxResponse.failure(
            str(err.get("kind", "crash")), str(err.get("detail", ""))
        )
    raise ProtocolError("response carries neither a setting nor an error")
