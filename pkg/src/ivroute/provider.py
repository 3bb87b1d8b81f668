"""Chat-completion providers: one real HTTP client plus deterministic doubles.

All providers share the same contract: ``complete(prompt) -> Completion``,
safe to call from many worker threads at once. The base class owns the only
shared mutable state (an in-flight semaphore, a token-bucket rate limiter,
and a peak-concurrency counter used by tests); subclasses implement a single
``_request`` hook.

The wire protocol of HttpProvider is the de-facto chat-completions JSON
shape, so any compatible endpoint works: POST {"model", "messages"} with a
bearer token, read choices[0].message.content.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "IVR_LLM_API_KEY"

RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


class ProviderError(Exception):
    """Base class for completion failures."""


class TransportError(ProviderError):
    """Network failure or retryable HTTP status, after retries ran out."""


class ProtocolError(ProviderError):
    """The endpoint answered, but not with a usable completion body."""


@dataclass(frozen=True)
class ProviderConfig:
    endpoint_url: str = ""
    model_name: str = "mock"
    api_key_source: str = DEFAULT_API_KEY_ENV
    temperature: float | None = None  # None = endpoint default, field not sent
    max_retries: int = 3
    request_timeout: float = 60.0
    max_in_flight: int = 4
    requests_per_second: float | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.max_retries <= 5:
            raise ValueError("max_retries must be between 0 and 5")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")
        if self.temperature is not None and not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")
        if self.requests_per_second is not None and self.requests_per_second <= 0:
            raise ValueError("requests_per_second must be positive")


@dataclass(frozen=True)
class Completion:
    raw_text: str
    model_name: str
    latency: float
    attempt_count: int = 1

    def __post_init__(self) -> None:
        if self.attempt_count < 1:
            raise ValueError("attempt_count must be at least 1")


class TokenBucket:
    """Client-side rate limiter; acquire() blocks until a slot frees up."""

    def __init__(self, rate_per_second: float | None):
        self._interval = 1.0 / rate_per_second if rate_per_second else 0.0
        self._next_slot = 0.0
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if not self._interval:
            return
        with self._lock:
            now = time.monotonic()
            wait = self._next_slot - now
            self._next_slot = max(self._next_slot, now) + self._interval
        if wait > 0:
            time.sleep(wait)


class Provider:
    """Shared plumbing: in-flight bound, rate limiting, latency bookkeeping."""

    def __init__(self, config: ProviderConfig | None = None):
        self.config = config or ProviderConfig()
        self._slots = threading.BoundedSemaphore(self.config.max_in_flight)
        self._bucket = TokenBucket(self.config.requests_per_second)
        self._state_lock = threading.Lock()
        self._in_flight = 0
        self.peak_in_flight = 0

    def complete(self, prompt) -> Completion:
        """Run one completion. ``prompt`` is a PromptText or a plain string."""
        text = prompt.content if hasattr(prompt, "content") else str(prompt)
        with self._slots:
            self._bucket.acquire()
            with self._state_lock:
                self._in_flight += 1
                self.peak_in_flight = max(self.peak_in_flight, self._in_flight)
            start = time.perf_counter()
            try:
                raw, attempts = self._request(text, prompt)
            finally:
                with self._state_lock:
                    self._in_flight -= 1
        return Completion(
            raw_text=raw,
            model_name=self.config.model_name,
            latency=time.perf_counter() - start,
            attempt_count=attempts,
        )

    def _request(self, text: str, prompt) -> tuple[str, int]:
        raise NotImplementedError


# --- the real thing ---------------------------------------------------------

def _requests_transport(url: str, payload: dict, headers: dict, timeout: float):
    import requests

    try:
        response = requests.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError(str(exc)) from exc
    return response.status_code, response.text


class HttpProvider(Provider):
    """POSTs chat-completion requests; retries transport/5xx/429 failures
    with exponential backoff and never re-asks after a parseable 200."""

    def __init__(self, config: ProviderConfig, transport=None, sleep=time.sleep):
        if not config.endpoint_url:
            raise ValueError("HttpProvider needs an endpoint_url")
        super().__init__(config)
        self._transport = transport or _requests_transport
        self._sleep = sleep

    def _auth_headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_source, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _payload(self, text: str) -> dict:
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": text}],
        }
        if self.config.temperature is not None:
            payload["temperature"] = self.config.temperature
        return payload

    def _request(self, text: str, prompt) -> tuple[str, int]:
        payload = self._payload(text)
        headers = self._auth_headers()
        last_error: Exception | None = None
        attempts = 0
        for attempt in range(self.config.max_retries + 1):
            if attempt > 0:
                self._sleep(min(0.5 * 2 ** (attempt - 1), 8.0))
                self._bucket.acquire()
            attempts = attempt + 1
            try:
                status, body = self._transport(
                    self.config.endpoint_url, payload, headers, self.config.request_timeout
                )
            except TransportError as exc:
                last_error = exc
                continue
            if status in RETRYABLE_STATUSES:
                last_error = TransportError(f"HTTP {status}")
                continue
            if status != 200:
                raise ProtocolError(f"HTTP {status}: {body[:200]}")
            return self._extract_text(body), attempts
        raise TransportError(
            f"gave up after {attempts} attempt(s): {last_error}"
        ) from last_error

    @staticmethod
    def _extract_text(body: str) -> str:
        try:
            data = json.loads(body)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"response body is not JSON: {exc}") from exc
        choices = data.get("choices") if isinstance(data, dict) else None
        if not choices:
            raise ProtocolError("response carries no choices")
        message = choices[0].get("message") if isinstance(choices[0], dict) else None
        if not isinstance(message, dict) or "content" not in message:
            raise ProtocolError("first choice carries no message content")
        return message["content"] or ""


# --- deterministic doubles ---------------------------------------------------

class OracleProvider(Provider):
    """Answers every routing prompt with the ground-truth path of its query.

    Built from a mapping of intent text to canonical path, usually via
    ``OracleProvider.for_dataset``. Deterministic and content-addressed, so
    it is safe at any concurrency.
    """

    def __init__(self, truth_by_text: dict[str, str], config: ProviderConfig | None = None):
        super().__init__(config or ProviderConfig(model_name="oracle-mock"))
        self._truth_by_text = dict(truth_by_text)

    @classmethod
    def for_dataset(cls, dataset, config: ProviderConfig | None = None) -> "OracleProvider":
        truth = {r.text: r.ground_truth.canonical() for r in dataset.records}
        return cls(truth, config)

    def _request(self, text: str, prompt) -> tuple[str, int]:
        query = getattr(prompt, "query", None)
        if query is None:
            raise ProviderError("oracle mock needs a routing prompt with a query")
        try:
            return self._truth_by_text[query], 1
        except KeyError:
            raise ProviderError(f"oracle mock has no truth for query {query!r}") from None


class KeywordProvider(Provider):
    """Routes by word overlap between the query and each breadcrumb; ties go
    to the earliest path in document order. Crude but fully deterministic."""

    def __init__(self, paths, config: ProviderConfig | None = None):
        super().__init__(config or ProviderConfig(model_name="keyword-mock"))
        self._paths = [(tp.path.canonical(), _words(tp.breadcrumb_text())) for tp in paths]
        if not self._paths:
            raise ValueError("keyword mock needs at least one terminal path")

    def _request(self, text: str, prompt) -> tuple[str, int]:
        query = getattr(prompt, "query", text)
        query_words = _words(query)
        best_path = self._paths[0][0]
        best_score = -1
        for path, words in self._paths:
            score = len(query_words & words)
            if score > best_score:  # strict: ties keep the earlier path
                best_path, best_score = path, score
        return best_path, 1


def _words(text: str) -> set[str]:
    return {w for w in "".join(c.lower() if c.isalnum() else " " for c in text).split() if w}


class ScriptedProvider(Provider):
    """Plays back a fixed reply list in call order; raises when exhausted.

    Reply assignment is call-order based, so tests that need a specific
    reply per intent should run with max_in_flight=1. ``delay`` holds each
    call open, which lets concurrency tests observe real overlap.
    """

    def __init__(
        self,
        replies: list[str],
        config: ProviderConfig | None = None,
        delay: float = 0.0,
    ):
        super().__init__(config or ProviderConfig(model_name="scripted-mock"))
        self._replies = list(replies)
        self._next = 0
        self._script_lock = threading.Lock()
        self._delay = delay
        self.calls: list[str] = []

    def _request(self, text: str, prompt) -> tuple[str, int]:
        with self._script_lock:
            if self._next >= len(self._replies):
                raise ProviderError("scripted mock ran out of replies")
            reply = self._replies[self._next]
            self._next += 1
            self.calls.append(text)
        if self._delay:
            time.sleep(self._delay)
        return reply, 1


# --- pipeline hygiene --------------------------------------------------------

PIPELINE_STAGES = ("menugen", "datagen", "routing")


def check_role_separation(stage_configs: dict[str, ProviderConfig]) -> list[str]:
    """Warn when one model serves more than one pipeline stage.

    Reusing a model across menu generation, intent generation, and routing
    lets artifacts leak between stages; distinct models keep the routing
    measurement honest. Warnings are advisory.
    """
    warnings: list[str] = []
    first_stage_for: dict[str, str] = {}
    for stage, config in stage_configs.items():
        model = config.model_name
        if model in first_stage_for:
            warnings.append(
                f"stage '{stage}' reuses model '{model}' already assigned to "
                f"stage '{first_stage_for[model]}'"
            )
        else:
            first_stage_for[model] = stage
    return warnings
