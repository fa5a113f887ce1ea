"""Reasoning loops: plain chain-of-thought and tool-integrated reasoning.

The TIR loop alternates model turns with sandboxed code execution. Each
round the model reply is scanned for fenced code; only the last matching
block runs, and its output is fed back inside an ```output fence. The
loop is bounded by max_rounds no matter what the model emits.
"""
from __future__ import annotations

import re
import time
from dataclasses import dataclass, replace

from .answers import CanonicalAnswer, extract_final_answer
from .client import ChatClient, ChatMessage, EndpointConfig, SamplingParams
from .errors import ClientError, ConfigError
from .executors import CodeExecutor, ExecutionResult

# How many trailing stderr lines survive into model feedback.
STDERR_SUMMARY_LINES = 5

_FENCE_TAG = re.compile(r"^[\w+-]*$")


@dataclass(frozen=True)
class TirConfig:
    max_rounds: int = 3
    exec_timeout: float = 10.0
    output_cap: int = 8192
    code_fence_tag: str = "python"

    def __post_init__(self) -> None:
        if self.max_rounds < 1:
            raise ConfigError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if self.exec_timeout <= 0:
            raise ConfigError(f"exec_timeout must be positive, got {self.exec_timeout}")
        if self.output_cap < 256:
            raise ConfigError(f"output_cap must be >= 256, got {self.output_cap}")
        if not self.code_fence_tag:
            raise ConfigError("code_fence_tag must not be empty")


@dataclass
class CandidateTrace:
    """One reasoning attempt: the full transcript, every execution, and
    the extracted answer (None when nothing parseable was produced)."""

    messages: list[ChatMessage]
    executions: list[tuple[str, ExecutionResult]]
    final_text: str
    answer: CanonicalAnswer | None
    termination: str  # answered | max_rounds | exec_failed | model_error
    elapsed: float
    error: str | None = None


@dataclass(frozen=True)
class _Fence:
    info: str
    content: str
    start: int
    end: int  # index just past the closing backticks


def _iter_fences(text: str) -> list[_Fence]:
    """Pair up ``` delimiters left to right. The first line inside a
    multi-line fence is treated as the info string when it looks like a
    language tag; inline fences have no info string. An unterminated
    trailing fence yields nothing."""
    fences: list[_Fence] = []
    pos = 0
    while True:
        open_idx = text.find("```", pos)
        if open_idx < 0:
            break
        close_idx = text.find("```", open_idx + 3)
        if close_idx < 0:
            break
        raw = text[open_idx + 3 : close_idx]
        newline = raw.find("\n")
        info = ""
        content = raw
        if newline >= 0:
            first = raw[:newline].strip()
            if _FENCE_TAG.fullmatch(first):
                info = first
                content = raw[newline + 1 :]
        if content.endswith("\n"):
            content = content[:-1]
        fences.append(_Fence(info=info, content=content, start=open_idx, end=close_idx + 3))
        pos = close_idx + 3
    return fences


def extract_code_blocks(text: str, fence_tag: str = "python") -> list[str]:
    """All fenced code blocks tagged with fence_tag or untagged, in
    order of appearance."""
    return [f.content for f in _iter_fences(text) if f.info in ("", fence_tag)]


def _feedback_text(result: ExecutionResult, cfg: TirConfig) -> str:
    if result.status == "ok":
        body = result.stdout
    elif result.status == "timeout":
        body = f"execution timed out after {cfg.exec_timeout:g}s"
    else:  # nonzero_exit
        lines = result.stderr.splitlines()
        body = "\n".join(lines[-STDERR_SUMMARY_LINES:])
        if not body:
            body = "execution failed with no error output"
    body = body[: cfg.output_cap]
    return f"```output\n{body}\n```"


def run_tir(
    initial_messages: list[ChatMessage],
    client: ChatClient,
    executor: CodeExecutor,
    params: SamplingParams,
    cfg: TirConfig,
    endpoint: EndpointConfig,
) -> CandidateTrace:
    """One tool-integrated reasoning trace.

    Per round: ask the model; if the reply ends with a parseable answer
    after its last code block (or has no code at all), stop; otherwise
    execute the last matching block and feed the output back. Model
    errors and runner failures terminate the trace rather than raising,
    so a multi-candidate run can keep going with its other traces.
    """
    started = time.monotonic()
    if params.n_candidates != 1:
        params = replace(params, n_candidates=1)
    messages = list(initial_messages)
    executions: list[tuple[str, ExecutionResult]] = []
    final_text = ""
    answer: CanonicalAnswer | None = None
    termination = "max_rounds"
    error: str | None = None

    for _ in range(cfg.max_rounds):
        try:
            reply = client.complete(messages, params, endpoint)
        except ClientError as exc:
            termination = "model_error"
            error = str(exc)
            break
        text = reply.candidates[0]
        final_text = text
        messages.append(ChatMessage(role="assistant", content=text))
        fences = [f for f in _iter_fences(text) if f.info in ("", cfg.code_fence_tag)]
        if not fences:
            extracted = extract_final_answer(text)
            answer = extracted if extracted.is_integer else None
            termination = "answered"
            break
        tail = text[fences[-1].end :]
        tail_answer = extract_final_answer(tail)
        if tail_answer.is_integer:
            answer = tail_answer
            termination = "answered"
            break
        code = fences[-1].content
        result = executor.run(code, timeout_s=cfg.exec_timeout, output_cap=cfg.output_cap)
        executions.append((code, result))
        if result.status == "runner_failure":
            termination = "exec_failed"
            error = result.stderr or "sandbox runner failure"
            break
        messages.append(ChatMessage(role="tool", content=_feedback_text(result, cfg)))

    if termination == "max_rounds" and final_text:
        # Out of rounds: salvage whatever answer the last reply holds.
        extracted = extract_final_answer(final_text)
        if extracted.is_integer:
            answer = extracted

    return CandidateTrace(
        messages=messages,
        executions=executions,
        final_text=final_text,
        answer=answer,
        termination=termination,
        elapsed=time.monotonic() - started,
        error=error,
    )


def run_cot(
    initial_messages: list[ChatMessage],
    client: ChatClient,
    params: SamplingParams,
    endpoint: EndpointConfig,
) -> list[CandidateTrace]:
    """Single-shot chain-of-thought: one request, n_candidates replies,
    one trace per reply. A client error produces a single model_error
    trace so the caller's voting path stays uniform."""
    started = time.monotonic()
    base = list(initial_messages)
    try:
        reply = client.complete(base, params, endpoint)
    except ClientError as exc:
        return [
            CandidateTrace(
                messages=list(base),
                executions=[],
                final_text="",
                answer=None,
                termination="model_error",
                elapsed=time.monotonic() - started,
                error=str(exc),
            )
        ]
    elapsed = time.monotonic() - started
    traces = []
    for text in reply.candidates:
        extracted = extract_final_answer(text)
        traces.append(
            CandidateTrace(
                messages=base + [ChatMessage(role="assistant", content=text)],
                executions=[],
                final_text=text,
                answer=extracted if extracted.is_integer else None,
                termination="answered",
                elapsed=elapsed,
            )
        )
    return traces
