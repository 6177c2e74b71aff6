"""Chat-completion client for OpenAI-compatible endpoints.

Only the non-streaming ``/chat/completions`` route is used. Transient failures
(connection errors, HTTP 429 and 5xx) are retried with exponential backoff;
any other 4xx is raised immediately so a bad credential never loops.
"""

from __future__ import annotations

import logging
import math
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Protocol

from .errors import BackendUnavailable, MalformedResponse

log = logging.getLogger(__name__)

API_KEY_ENV = "MCTS_REPAIR_API_KEY"
DEFAULT_TIMEOUT = 120.0
MAX_ATTEMPTS = 5


def estimate_tokens(text: str) -> int:
    """Rough token count, ceil(utf-8 bytes / 4).

    Only used when the provider does not report usage.
    """
    return math.ceil(len(text.encode("utf-8")) / 4)


def cost(tokens_total: int, price_per_1k: float) -> float:
    if tokens_total < 0 or price_per_1k < 0:
        raise ValueError("tokens and price must be non-negative")
    return tokens_total / 1000 * price_per_1k


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    total_tokens: int = 0
    estimated: bool = False

    def __add__(self, other: Usage) -> Usage:
        return Usage(
            self.prompt_tokens + other.prompt_tokens,
            self.completion_tokens + other.completion_tokens,
            self.total_tokens + other.total_tokens,
            self.estimated or other.estimated,
        )


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: list[dict[str, str]]
    temperature: float = 0.9
    max_tokens: int = 8000
    seed: int | None = None

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def body(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "model": self.model,
            "messages": list(self.messages),
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out


class TransportError(Exception):
    """Connection-level failure (no HTTP status available)."""


class Transport(Protocol):
    def post(self, url: str, headers: dict[str, str], body: dict[str, Any], timeout: float) -> tuple[int, Any]:
        """Return (status code, decoded JSON body or None)."""


class HttpxTransport:
    def __init__(self) -> None:
        import httpx

        self._httpx = httpx
        self._client = httpx.Client()

    def post(self, url, headers, body, timeout):
        try:
            resp = self._client.post(url, headers=headers, json=body, timeout=timeout)
        except self._httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        try:
            payload = resp.json()
        except ValueError:
            payload = None
        return resp.status_code, payload


class StubTransport:
    """Replays scripted responses in order; for tests and offline runs.

    Each script item is either ``(status, body)`` or an exception instance to
    raise. The last item repeats once the script runs out.
    """

    def __init__(self, script: Iterable[Any]):
        self._script = deque(script)
        self._last: Any = None
        self._lock = threading.Lock()
        self.calls: list[dict[str, Any]] = []

    def post(self, url, headers, body, timeout):
        with self._lock:
            self.calls.append({"url": url, "body": body, "timeout": timeout})
            item = self._script.popleft() if self._script else self._last
            self._last = item
        if item is None:
            raise TransportError("stub transport has no scripted response")
        if isinstance(item, BaseException):
            raise item
        return item

    @staticmethod
    def completion(text: str, prompt_tokens: int | None = None, completion_tokens: int | None = None) -> tuple[int, Any]:
        body: dict[str, Any] = {"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}
        if prompt_tokens is not None:
            body["usage"] = {
                "prompt_tokens": prompt_tokens,
                "completion_tokens": completion_tokens or 0,
                "total_tokens": prompt_tokens + (completion_tokens or 0),
            }
        return 200, body


@dataclass
class UsageLedger:
    """Thread-safe running total of token usage."""

    prompt_tokens: int = 0
    completion_tokens: int = 0
    calls: int = 0
    estimated_calls: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, usage: Usage) -> None:
        with self._lock:
            self.prompt_tokens += usage.prompt_tokens
            self.completion_tokens += usage.completion_tokens
            self.calls += 1
            if usage.estimated:
                self.estimated_calls += 1

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def snapshot(self) -> Usage:
        with self._lock:
            return Usage(self.prompt_tokens, self.completion_tokens, self.prompt_tokens + self.completion_tokens)


def _retryable(status: int) -> bool:
    return status == 429 or 500 <= status < 600


def _messages_text(messages: list[dict[str, str]]) -> str:
    return "\n".join(m.get("content", "") for m in messages)


class LLMClient:
    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        transport: Transport | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        max_attempts: int = MAX_ATTEMPTS,
        backoff_base: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.transport = transport if transport is not None else HttpxTransport()
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.sleep = sleep
        self.ledger = UsageLedger()
        self.last_attempts = 0

    @classmethod
    def from_config(cls, cfg: dict[str, Any], **kwargs: Any) -> LLMClient:
        if "base_url" not in cfg or "model" not in cfg:
            raise ValueError("llm config needs 'base_url' and 'model'")
        return cls(cfg["base_url"], cfg["model"], timeout=cfg.get("timeout", DEFAULT_TIMEOUT), **kwargs)

    def chat(self, request: ChatRequest) -> tuple[str, Usage]:
        url = f"{self.base_url}/chat/completions"
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = request.body()
        last_error = "no attempt made"
        for attempt in range(1, self.max_attempts + 1):
            self.last_attempts = attempt
            try:
                status, payload = self.transport.post(url, headers, body, self.timeout)
            except TransportError as exc:
                last_error = f"connection error: {exc}"
            else:
                if status == 200:
                    text, usage = self._parse(payload, request)
                    if attempt > 1:
                        log.info("chat succeeded after %d attempts", attempt)
                    self.ledger.add(usage)
                    return text, usage
                if not _retryable(status):
                    raise BackendUnavailable(f"HTTP {status} from {url}: {_error_message(payload)}")
                last_error = f"HTTP {status}"
            log.warning("chat attempt %d/%d failed: %s", attempt, self.max_attempts, last_error)
            if attempt < self.max_attempts:
                self.sleep(self.backoff_base * 2 ** (attempt - 1))
        raise BackendUnavailable(f"giving up after {self.max_attempts} attempts: {last_error}")

    def _parse(self, payload: Any, request: ChatRequest) -> tuple[str, Usage]:
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"response lacks choices[0].message.content: {payload!r:.200}") from exc
        if not isinstance(text, str):
            raise MalformedResponse("message content is not a string")
        raw = payload.get("usage") if isinstance(payload, dict) else None
        if isinstance(raw, dict) and "prompt_tokens" in raw and "completion_tokens" in raw:
            p, c = int(raw["prompt_tokens"]), int(raw["completion_tokens"])
            usage = Usage(p, c, int(raw.get("total_tokens", p + c)))
        else:
            p = estimate_tokens(_messages_text(request.messages))
            c = estimate_tokens(text)
            usage = Usage(p, c, p + c, estimated=True)
        return text, usage


def _error_message(payload: Any) -> str:
    if isinstance(payload, dict):
        err = payload.get("error")
        if isinstance(err, dict):
            return str(err.get("message", err))
        if err:
            return str(err)
    return "no error detail"
