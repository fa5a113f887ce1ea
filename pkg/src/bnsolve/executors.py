"""Code executors for tool-integrated reasoning.

An executor takes a snippet of tool code and returns an ExecutionResult;
it must never raise for sandbox-side problems. SubprocessExecutor talks
to an external runner process over a one-line-JSON stdin/stdout
protocol, so the runner can live in a separate, locked-down package.
"""
from __future__ import annotations

import json
import subprocess
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol

VALID_STATUSES = frozenset({"ok", "nonzero_exit", "timeout", "runner_failure"})

# Extra wall time granted to the runner process on top of the snippet
# timeout, covering interpreter startup and reply serialization.
RUNNER_GRACE_S = 10.0


@dataclass(frozen=True)
class ExecutionResult:
    stdout: str
    stderr: str
    status: str  # ok | nonzero_exit | timeout | runner_failure
    duration: float
    truncated: bool


class CodeExecutor(Protocol):
    def run(self, code: str, timeout_s: float, output_cap: int) -> ExecutionResult: ...


def _ok(stdout: str = "") -> ExecutionResult:
    return ExecutionResult(stdout=stdout, stderr="", status="ok", duration=0.0, truncated=False)


@dataclass
class FakeExecutor:
    """Scripted executor for tests: returns canned results in order and
    records every call. Once the script runs out it keeps returning the
    default result, so bounded-loop tests can't be starved."""

    results: list[ExecutionResult] = field(default_factory=list)
    default: ExecutionResult = field(default_factory=_ok)

    def __post_init__(self) -> None:
        self._calls: list[tuple[str, float, int]] = []
        self._cursor = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> list[tuple[str, float, int]]:
        with self._lock:
            return list(self._calls)

    def run(self, code: str, timeout_s: float, output_cap: int) -> ExecutionResult:
        with self._lock:
            self._calls.append((code, timeout_s, output_cap))
            if self._cursor < len(self.results):
                result = self.results[self._cursor]
                self._cursor += 1
                return result
            return self.default


def _runner_failure(detail: str, duration: float) -> ExecutionResult:
    return ExecutionResult(
        stdout="", stderr=detail, status="runner_failure", duration=duration, truncated=False
    )


class SubprocessExecutor:
    """Runs code through an external sandbox-runner command.

    Protocol: one JSON request object on the runner's stdin
    ({"code", "timeout_s", "output_cap"}), one JSON reply object on its
    stdout ({"stdout", "stderr", "status", "duration_ms", "truncated"}).
    A fresh runner process per call keeps invocations isolated.
    """

    def __init__(self, command: list[str]):
        if not command:
            raise ValueError("sandbox command must not be empty")
        self.command = list(command)

    def run(self, code: str, timeout_s: float, output_cap: int) -> ExecutionResult:
        request = json.dumps(
            {"code": code, "timeout_s": timeout_s, "output_cap": output_cap}
        )
        started = time.monotonic()
        try:
            proc = subprocess.run(
                self.command,
                input=request + "\n",
                capture_output=True,
                text=True,
                timeout=timeout_s + RUNNER_GRACE_S,
            )
        except FileNotFoundError as exc:
            return _runner_failure(
                f"sandbox command not found: {self.command[0]} ({exc})",
                time.monotonic() - started,
            )
        except OSError as exc:
            return _runner_failure(
                f"could not start sandbox command {self.command[0]}: {exc}",
                time.monotonic() - started,
            )
        except subprocess.TimeoutExpired:
            return _runner_failure(
                f"sandbox runner sent no reply within {timeout_s + RUNNER_GRACE_S:.0f}s",
                time.monotonic() - started,
            )
        elapsed = time.monotonic() - started
        reply_line = proc.stdout.splitlines()[0] if proc.stdout.strip() else ""
        if not reply_line:
            detail = "sandbox runner produced no reply"
            if proc.stderr.strip():
                detail += f"; runner stderr: {proc.stderr.strip()[-500:]}"
            return _runner_failure(detail, elapsed)
        try:
            reply = json.loads(reply_line)
        except json.JSONDecodeError as exc:
            return _runner_failure(f"unparseable sandbox reply: {exc.msg}", elapsed)
        return self._validate_reply(reply, elapsed)

    @staticmethod
    def _validate_reply(reply: object, elapsed: float) -> ExecutionResult:
        if not isinstance(reply, dict):
            return _runner_failure("sandbox reply is not an object", elapsed)
        stdout = reply.get("stdout")
        stderr = reply.get("stderr")
        status = reply.get("status")
        duration_ms = reply.get("duration_ms")
        truncated = reply.get("truncated")
        if (
            not isinstance(stdout, str)
            or not isinstance(stderr, str)
            or status not in VALID_STATUSES
            or not isinstance(duration_ms, (int, float))
            or isinstance(duration_ms, bool)
            or not isinstance(truncated, bool)
        ):
            return _runner_failure("sandbox reply has missing or mistyped fields", elapsed)
        return ExecutionResult(
            stdout=stdout,
            stderr=stderr,
            status=status,
            duration=float(duration_ms) / 1000.0,
            truncated=truncated,
        )
