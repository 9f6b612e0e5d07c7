"""Chat-completion backends: scripted mock, recorded replay, and live HTTP.

The evolution loop only ever sees ``complete(system, user) -> text``; which
backend sits behind that call is a configuration choice. The live backend
reads its API key from an environment variable (name documented, value never
logged) and retries transient transport failures with exponential backoff.
"""

from __future__ import annotations

import json
import os
import time
from pathlib import Path

__all__ = [
    "DEFAULT_API_KEY_ENV",
    "LLMError",
    "ConfigurationError",
    "TransportError",
    "EmptyCompletionError",
    "BudgetExceededError",
    "LLMBackend",
    "MockBackend",
    "ReplayBackend",
    "LiveBackend",
    "llm_complete",
]

DEFAULT_API_KEY_ENV = "CONTRACT_LEARN_API_KEY"


class LLMError(RuntimeError):
    pass


class ConfigurationError(LLMError):
    pass


class TransportError(LLMError):
    pass


class EmptyCompletionError(LLMError):
    pass


class BudgetExceededError(LLMError):
    pass


class LLMBackend:
    """Base class handling the shared call budget."""

    def __init__(self, max_calls: int | None = None):
        self.max_calls = max_calls
        self.call_count = 0

    def _register_call(self) -> None:
        if self.max_calls is not None and self.call_count >= self.max_calls:
            raise BudgetExceededError(
                f"LLM call budget of {self.max_calls} exhausted"
            )
        self.call_count += 1

    def complete(self, system: str, user: str) -> str:
        raise NotImplementedError


class MockBackend(LLMBackend):
    """Scripted response queue; optionally falls back to a fixed default once
    the queue is empty."""

    def __init__(
        self,
        responses: list[str] | tuple[str, ...] = (),
        default: str | None = None,
        max_calls: int | None = None,
    ):
        super().__init__(max_calls)
        self._queue = list(responses)
        self._default = default
        self.requests: list[tuple[str, str]] = []

    def complete(self, system: str, user: str) -> str:
        self._register_call()
        self.requests.append((system, user))
        if self._queue:
            reply = self._queue.pop(0)
        elif self._default is not None:
            reply = self._default
        else:
            raise BudgetExceededError("mock response queue exhausted")
        if not reply.strip():
            raise EmptyCompletionError("mock produced an empty completion")
        return reply


class ReplayBackend(LLMBackend):
    """Replays a recorded transcript, verifying prompts match the recording.

    The transcript is a list of {"system", "user", "response"} objects, or a
    path to a JSON array or JSON Lines file holding them (the latter is what
    the live backend records). No network access happens.
    """

    def __init__(self, transcript: list[dict] | str | Path, max_calls: int | None = None):
        super().__init__(max_calls)
        if isinstance(transcript, (str, Path)):
            text = Path(transcript).read_text(encoding="utf-8")
            if text.lstrip().startswith("["):
                transcript = json.loads(text)
            else:  # JSON Lines, as written by the live backend
                transcript = [
                    json.loads(line) for line in text.splitlines() if line.strip()
                ]
        self._turns = list(transcript)
        self._cursor = 0

    def complete(self, system: str, user: str) -> str:
        self._register_call()
        if self._cursor >= len(self._turns):
            raise BudgetExceededError(
                f"replay transcript exhausted after {len(self._turns)} turns"
            )
        turn = self._turns[self._cursor]
        if turn.get("system") != system or turn.get("user") != user:
            raise TransportError(
                f"replay transcript diverges from the run at turn {self._cursor}"
            )
        self._cursor += 1
        reply = turn["response"]
        if not reply.strip():
            raise EmptyCompletionError(f"recorded turn {self._cursor - 1} is empty")
        return reply


class LiveBackend(LLMBackend):
    """Talks to a chat-completions style HTTP endpoint.

    The API key is read from the environment at construction so a missing
    credential fails before any call is attempted; the key is never written
    to logs or transcripts.
    """

    RETRIES = 3

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout: float = 60.0,
        max_calls: int | None = None,
        transcript_path: str | Path | None = None,
    ):
        super().__init__(max_calls)
        key = os.environ.get(api_key_env, "")
        if not key:
            raise ConfigurationError(
                f"environment variable {api_key_env} is not set; refusing to "
                "configure the live backend"
            )
        self._endpoint = endpoint
        self._model = model
        self._key = key
        self._timeout = timeout
        self._transcript_path = Path(transcript_path) if transcript_path else None

    def complete(self, system: str, user: str) -> str:
        import requests

        self._register_call()
        payload = {
            "model": self._model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        last_error: Exception | None = None
        for attempt in range(self.RETRIES):
            if attempt:
                time.sleep(2 ** (attempt - 1))
            try:
                resp = requests.post(
                    self._endpoint,
                    json=payload,
                    headers={"Authorization": f"Bearer {self._key}"},
                    timeout=self._timeout,
                )
                resp.raise_for_status()
                text = resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # transport, HTTP, or shape errors
                last_error = exc
                continue
            if not (text or "").strip():
                raise EmptyCompletionError("live endpoint returned an empty completion")
            self._record(system, user, text)
            return text
        raise TransportError(
            f"live completion failed after {self.RETRIES} attempts: {last_error}"
        )

    def _record(self, system: str, user: str, response: str) -> None:
        if self._transcript_path is None:
            return
        with open(self._transcript_path, "a", encoding="utf-8") as fh:
            fh.write(
                json.dumps({"system": system, "user": user, "response": response})
                + "\n"
            )


def llm_complete(backend: LLMBackend, system: str, user: str) -> str:
    """Run one completion through the configured backend."""
    return backend.complete(system, user)
