"""Chat-completions endpoint client plus deterministic mocks for tests.

One wire protocol everywhere: POST <base_url>/chat/completions with a JSON
body carrying model, messages, temperature, top_p, n, max_tokens, stop;
the reply is expected to hold a ``choices`` array of message contents.
Transient failures (HTTP 429/5xx, connect timeouts) are retried with
exponential backoff and full jitter; 401/403 are never retried.
"""
from __future__ import annotations

import os
import random
import threading
import time
from dataclasses import dataclass, replace

import requests

from .errors import (
    AuthError,
    ConfigError,
    EndpointError,
    MalformedReply,
    ScriptExhausted,
    TimeoutError_,
)

_ROLES = ("system", "user", "assistant", "tool")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ValueError(f"unknown chat role {self.role!r}")
        if not self.content and self.role != "assistant":
            raise ValueError(f"empty content is only allowed for assistant turns, not {self.role!r}")


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.4
    top_p: float = 0.8
    n_candidates: int = 1
    max_tokens: int = 1024
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError(f"temperature must be in [0.0, 2.0], got {self.temperature}")
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigError(f"top_p must be in (0.0, 1.0], got {self.top_p}")
        if self.n_candidates < 1:
            raise ConfigError(f"n_candidates must be >= 1, got {self.n_candidates}")
        if self.max_tokens < 1:
            raise ConfigError(f"max_tokens must be >= 1, got {self.max_tokens}")
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))


@dataclass(frozen=True)
class EndpointConfig:
    """The client's view of an external serving stack.

    ``api_key_env`` names the environment variable holding the secret; an
    empty name means the endpoint needs no auth. ``fan_out_single=True``
    degrades n>1 sampling into n sequential n=1 requests for servers that
    reject the ``n`` parameter.
    """

    base_url: str
    model_name: str
    api_key_env: str = ""
    request_timeout: float = 60.0
    max_retries: int = 2
    retry_backoff: float = 1.0
    fan_out_single: bool = False

    def __post_init__(self):
        if not self.base_url.startswith(("http://", "https://")):
            raise ConfigError(f"base_url must be absolute (http/https), got {self.base_url!r}")
        if self.request_timeout <= 0:
            raise ConfigError(f"request_timeout must be > 0, got {self.request_timeout}")
        if self.max_retries < 0:
            raise ConfigError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.retry_backoff < 0:
            raise ConfigError(f"retry_backoff must be >= 0, got {self.retry_backoff}")
        if not self.model_name:
            raise ConfigError("model_name must be non-empty")


@dataclass(frozen=True)
class ModelReply:
    candidates: tuple[str, ...]
    usage: dict | None = None
    latency: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if self.latency < 0:
            raise ValueError("latency must be >= 0")


@dataclass(frozen=True)
class RequestRecord:
    """One request as the endpoint saw it (mock introspection)."""

    messages: tuple[ChatMessage, ...]
    params: SamplingParams
    model_name: str


class _TransientFailure(Exception):
    def __init__(self, detail: str, is_timeout: bool = False):
        super().__init__(detail)
        self.is_timeout = is_timeout


def _merge_usage(total: dict | None, extra: dict | None) -> dict | None:
    if extra is None:
        return total
    if total is None:
        return dict(extra)
    merged = dict(total)
    for key, value in extra.items():
        if isinstance(value, (int, float)) and isinstance(merged.get(key), (int, float)):
            merged[key] = merged[key] + value
        else:
            merged.setdefault(key, value)
    return merged


class ChatClient:
    """Shared request loop: validation, optional fan-out, retry policy.

    Subclasses implement ``_attempt``; instances are shareable across
    threads (each call is independent and blocking).
    """

    def complete(
        self,
        messages: list[ChatMessage],
        params: SamplingParams,
        endpoint: EndpointConfig,
    ) -> ModelReply:
        if not messages:
            raise ValueError("messages must be non-empty")
        messages = list(messages)  # never mutate or alias the caller's list
        if endpoint.fan_out_single and params.n_candidates > 1:
            single = replace(params, n_candidates=1)
            candidates: list[str] = []
            usage: dict | None = None
            latency = 0.0
            for _ in range(params.n_candidates):
                reply = self._complete_once(messages, single, endpoint)
                candidates.extend(reply.candidates)
                usage = _merge_usage(usage, reply.usage)
                latency += reply.latency
            return ModelReply(candidates=tuple(candidates), usage=usage, latency=latency)
        return self._complete_once(messages, params, endpoint)

    def _complete_once(
        self,
        messages: list[ChatMessage],
        params: SamplingParams,
        endpoint: EndpointConfig,
    ) -> ModelReply:
        attempt = 0
        while True:
            start = time.monotonic()
            try:
                texts, usage = self._attempt(messages, params, endpoint)
            except _TransientFailure as failure:
                if attempt >= endpoint.max_retries:
                    message = f"giving up after {attempt} retries: {failure}"
                    if failure.is_timeout:
                        raise TimeoutError_(message) from failure
                    raise EndpointError(message) from failure
                # Exponential backoff with full jitter.
                delay = random.uniform(0.0, endpoint.retry_backoff * (2.0 ** attempt))
                time.sleep(delay)
                attempt += 1
                continue
            latency = time.monotonic() - start
            if len(texts) != params.n_candidates:
                raise MalformedReply(
                    f"endpoint returned {len(texts)} candidates, requested {params.n_candidates}"
                )
            return ModelReply(candidates=tuple(texts), usage=usage, latency=latency)

    def _attempt(
        self,
        messages: list[ChatMessage],
        params: SamplingParams,
        endpoint: EndpointConfig,
    ) -> tuple[list[str], dict | None]:
        raise NotImplementedError


class HttpChatClient(ChatClient):
    def _attempt(self, messages, params, endpoint):
        url = endpoint.base_url.rstrip("/") + "/chat/completions"
        body = {
            "model": endpoint.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "n": params.n_candidates,
            "max_tokens": params.max_tokens,
        }
        if params.stop_sequences:
            body["stop"] = list(params.stop_sequences)
        headers = {}
        if endpoint.api_key_env:
            key = os.environ.get(endpoint.api_key_env)
            if not key:
                raise AuthError(
                    f"API key environment variable {endpoint.api_key_env!r} is not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        try:
            response = requests.post(
                url, json=body, headers=headers, timeout=endpoint.request_timeout
            )
        except requests.Timeout as exc:
            raise _TransientFailure(f"request timed out: {exc}", is_timeout=True) from exc
        except requests.ConnectionError as exc:
            raise _TransientFailure(f"connection failed: {exc}") from exc

        if response.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials (HTTP {response.status_code})")
        if response.status_code == 429 or response.status_code >= 500:
            raise _TransientFailure(f"HTTP {response.status_code}")
        if response.status_code != 200:
            raise EndpointError(f"HTTP {response.status_code}: {response.text[:200]}")
        return _parse_completion_body(response)


def _parse_completion_body(response) -> tuple[list[str], dict | None]:
    try:
        doc = response.json()
    except ValueError as exc:
        raise MalformedReply(f"endpoint body is not JSON: {exc}") from exc
    choices = doc.get("choices") if isinstance(doc, dict) else None
    if not isinstance(choices, list):
        raise MalformedReply("endpoint body has no 'choices' array")
    texts: list[str] = []
    for choice in choices:
        content = None
        if isinstance(choice, dict):
            message = choice.get("message")
            if isinstance(message, dict):
                content = message.get("content")
        if not isinstance(content, str):
            raise MalformedReply("choice without message content")
        texts.append(content)
    usage = doc.get("usage")
    return texts, usage if isinstance(usage, dict) else None


# ---------------------------------------------------------------------------
# mocks

@dataclass(frozen=True)
class MockFailure:
    """One failed attempt in a mock script: an HTTP status or 'timeout'."""

    code: int | str


def failure(code: int | str) -> MockFailure:
    return MockFailure(code)


def _normalize_entry(entry):
    if isinstance(entry, MockFailure):
        return entry
    if isinstance(entry, int):
        return MockFailure(entry)
    if isinstance(entry, str):
        if entry == "timeout":
            return MockFailure("timeout")
        raise ConfigError(f"bad mock script entry {entry!r}; a reply must be a list of texts")
    if isinstance(entry, (list, tuple)):
        if not all(isinstance(text, str) for text in entry):
            raise ConfigError("mock reply entries must be lists of strings")
        return tuple(entry)
    raise ConfigError(f"bad mock script entry of type {type(entry).__name__}")


class _MockBase(ChatClient):
    def __init__(self):
        self._lock = threading.Lock()
        self._log: list[RequestRecord] = []

    @property
    def request_log(self) -> list[RequestRecord]:
        with self._lock:
            return list(self._log)

    def _record(self, messages, params, endpoint):
        self._log.append(
            RequestRecord(
                messages=tuple(messages),
                params=params,
                model_name=endpoint.model_name,
            )
        )

    @staticmethod
    def _apply_entry(entry):
        if isinstance(entry, MockFailure):
            code = entry.code
            if code == "timeout":
                raise _TransientFailure("scripted timeout", is_timeout=True)
            if code in (401, 403):
                raise AuthError(f"scripted HTTP {code}")
            if code == 429 or (isinstance(code, int) and code >= 500):
                raise _TransientFailure(f"scripted HTTP {code}")
            raise EndpointError(f"scripted HTTP {code}")
        return list(entry), None


class ScriptedMockClient(_MockBase):
    """Consumes one script entry per request, in order, and records every
    request (messages + params) for test assertions."""

    def __init__(self, script):
        super().__init__()
        if not script:
            raise ConfigError("mock script must be non-empty")
        self._script = [_normalize_entry(entry) for entry in script]
        self._next = 0

    def _attempt(self, messages, params, endpoint):
        with self._lock:
            self._record(messages, params, endpoint)
            if self._next >= len(self._script):
                raise ScriptExhausted(
                    f"mock script exhausted after {len(self._script)} entries"
                )
            entry = self._script[self._next]
            self._next += 1
        return self._apply_entry(entry)


class KeyedMockClient(_MockBase):
    """Mock whose reply depends only on the request content.

    ``rules`` maps a key substring to an ordered entry list; a request is
    served from the rule whose key occurs in its concatenated message
    contents (longest key wins). Per-key scripts cycle by default, which
    keeps replies deterministic under concurrent and repeated evaluation
    runs. Falls back to ``default`` when no key matches.
    """

    def __init__(self, rules: dict[str, list], default: list | None = None, cycle: bool = True):
        super().__init__()
        if not rules and default is None:
            raise ConfigError("keyed mock needs rules or a default script")
        self._rules = {
            key: [_normalize_entry(entry) for entry in entries]
            for key, entries in rules.items()
        }
        for key, entries in self._rules.items():
            if not entries:
                raise ConfigError(f"keyed mock rule {key!r} has an empty script")
        self._default = None if default is None else [_normalize_entry(e) for e in default]
        if self._default is not None and not self._default:
            raise ConfigError("keyed mock default script must be non-empty when given")
        self._cycle = cycle
        self._positions: dict[str, int] = {}

    def _attempt(self, messages, params, endpoint):
        text = "\n".join(m.content for m in messages)
        with self._lock:
            self._record(messages, params, endpoint)
            matches = [key for key in self._rules if key in text]
            if matches:
                key = max(matches, key=lambda k: (len(k), k))
                entries = self._rules[key]
            elif self._default is not None:
                key = ""
                entries = self._default
            else:
                raise ScriptExhausted(f"no keyed mock rule matches request: {text[:120]!r}")
            position = self._positions.get(key, 0)
            if position >= len(entries):
                if not self._cycle:
                    raise ScriptExhausted(f"keyed mock script for {key!r} exhausted")
                position = 0
            self._positions[key] = position + 1
            entry = entries[position]
        return self._apply_entry(entry)
