"""Chat-completions transport with transcript recording and offline replay.

Three modes share one interface:

  live    POSTs a chat-completions request (one user message, no system
          message) and records the exchange in the transcript store;
  replay  serves responses from the transcript store by request digest and
          never touches the network;
  mock    answers from a canned script or a deterministic default
          transformer, also recording transcripts so a mock run can later
          be replayed.

Transcripts are one JSON document per exchange, named by the request
digest, written atomically (tmp file + rename) and never overwritten, so
a finished run can always be replayed exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from minigi.prompts import (
    DEFAULT_MODEL,
    DEFAULT_TEMPERATURE,
    LlmRequest,
    LlmResponse,
    extract_code_blocks,
)


class ClientError(Exception):
    pass


class NetworkError(ClientError):
    pass


class RateLimitedError(ClientError):
    pass


class BadStatusError(ClientError):
    def __init__(self, status: int, body: str):
        super().__init__(f"HTTP {status}: {body[:200]}")
        self.status = status


class TimedOutError(ClientError):
    pass


class TranscriptMissError(ClientError):
    pass


class MockScriptExhaustedError(ClientError):
    pass


@dataclass(frozen=True)
class LlmClientConfig:
    endpoint_url: str = "https://api.openai.com/v1/chat/completions"
    api_key_env_var: str = "OPENAI_API_KEY"
    model: str = DEFAULT_MODEL
    temperature: float = DEFAULT_TEMPERATURE
    request_timeout: float = 60.0
    max_retries: int = 3
    transcript_dir: Optional[Union[str, Path]] = None
    mode: str = "mock"  # live | replay | mock


def request_digest(request: LlmRequest) -> str:
    """Stable digest of what the endpoint sees: model, temperature, prompt."""
    payload = json.dumps(
        {"model": request.model, "temperature": request.temperature, "prompt": request.prompt},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class TranscriptStore:
    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    def path_for(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def get(self, digest: str) -> Optional[dict]:
        path = self.path_for(digest)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, digest: str, record: dict) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(digest)
        if path.exists():  # append-only: first record wins
            return
        tmp = path.with_suffix(f".tmp.{os.getpid()}")
        tmp.write_text(json.dumps(record, indent=2, sort_keys=True), encoding="utf-8")
        tmp.replace(path)


class LlmClientBase:
    def __init__(self, config: LlmClientConfig):
        self.config = config
        self.requests_made = 0
        self.store = (
            TranscriptStore(config.transcript_dir) if config.transcript_dir is not None else None
        )

    def complete(self, request: LlmRequest) -> LlmResponse:
        self.requests_made += 1
        text = self._complete_text(request)
        self._record(request, text)
        return LlmResponse(text)

    def _complete_text(self, request: LlmRequest) -> str:
        raise NotImplementedError

    def _record(self, request: LlmRequest, response_text: str) -> None:
        if self.store is None:
            return
        digest = request_digest(request)
        self.store.put(
            digest,
            {
                "request_digest": digest,
                "model": request.model,
                "temperature": request.temperature,
                "prompt": request.prompt,
                "response": response_text,
                "timestamp": time.time(),
            },
        )


class LiveLlmClient(LlmClientBase):
    """Talks to any chat-completions-compatible endpoint.

    The wire format is one user-role message carrying the whole prompt;
    variations are requested inside the prompt text, not via an n-choices
    parameter. Rate limiting (HTTP 429) retries with exponential backoff.
    """

    def _complete_text(self, request: LlmRequest) -> str:
        import requests as requests_lib

        api_key = os.environ.get(self.config.api_key_env_var, "")
        if not api_key:
            raise ClientError(f"API key env var {self.config.api_key_env_var} is not set")
        body = {
            "model": request.model,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.prompt}],
        }
        headers = {"Authorization": f"Bearer {api_key}"}
        delay = 1.0
        for attempt in range(self.config.max_retries + 1):
            try:
                resp = requests_lib.post(
                    self.config.endpoint_url,
                    json=body,
                    headers=headers,
                    timeout=self.config.request_timeout,
                )
            except requests_lib.Timeout as exc:
                raise TimedOutError(str(exc)) from None
            except requests_lib.RequestException as exc:
                raise NetworkError(str(exc)) from None
            if resp.status_code == 429:
                if attempt == self.config.max_retries:
                    raise RateLimitedError("rate limited and retries exhausted")
                time.sleep(delay)
                delay *= 2
                continue
            if resp.status_code != 200:
                raise BadStatusError(resp.status_code, resp.text)
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise BadStatusError(resp.status_code, f"malformed response body: {exc}") from None
        raise RateLimitedError("rate limited and retries exhausted")


class ReplayLlmClient(LlmClientBase):
    """Serves recorded responses; a missing transcript is an error, not a call."""

    def __init__(self, config: LlmClientConfig):
        super().__init__(config)
        if self.store is None:
            raise ClientError("replay mode needs a transcript directory")

    def _complete_text(self, request: LlmRequest) -> str:
        record = self.store.get(request_digest(request))
        if record is None:
            raise TranscriptMissError(f"no transcript for digest {request_digest(request)}")
        return record["response"]

    def _record(self, request: LlmRequest, response_text: str) -> None:
        pass  # replay never writes


MockScript = Union[Sequence[str], Callable[[LlmRequest], str]]


class MockLlmClient(LlmClientBase):
    """Deterministic stand-in for tests and offline runs.

    `script` is either a list of response texts served in order or a
    callable from request to response text. Without a script, a default
    transformer answers with five variants derived from the code in the
    prompt: the block itself, the block wrapped in another brace level, an
    empty block, the block with its interior lines reversed, and one
    prose-only variant. That mix exercises every rung of the ladder.
    """

    def __init__(self, config: LlmClientConfig, script: Optional[MockScript] = None):
        super().__init__(config)
        self._script = list(script) if isinstance(script, (list, tuple)) else script
        self._cursor = 0

    def _complete_text(self, request: LlmRequest) -> str:
        if self._script is None:
            return _default_mock_response(request)
        if callable(self._script):
            return self._script(request)
        if self._cursor >= len(self._script):
            raise MockScriptExhaustedError(
                f"mock script exhausted after {self._cursor} responses"
            )
        text = self._script[self._cursor]
        self._cursor += 1
        return text


def _default_mock_response(request: LlmRequest) -> str:
    blocks = extract_code_blocks(request.prompt)
    code = blocks[0] if blocks else "{ }"
    lines = code.splitlines()
    interior = lines[1:-1] if len(lines) >= 2 else []
    reversed_code = "\n".join([lines[0]] + list(reversed(interior)) + [lines[-1]]) if lines else code
    wrapped = "{\n" + code + "\n}"
    parts = [
        "Here are some alternative implementations.",
        "1.\n```\n" + code + "\n```",
        "2.\n```\n" + wrapped + "\n```",
        "3.\n```\n{ }\n```",
        "4.\n```\n" + reversed_code + "\n```",
        "5. A further variant would restructure the control flow entirely.",
    ]
    return "\n".join(parts)


def make_client(config: LlmClientConfig, script: Optional[MockScript] = None) -> LlmClientBase:
    if config.mode == "live":
        return LiveLlmClient(config)
    if config.mode == "replay":
        return ReplayLlmClient(config)
    if config.mode == "mock":
        return MockLlmClient(config, script)
    raise ValueError(f"unknown client mode {config.mode!r}")
