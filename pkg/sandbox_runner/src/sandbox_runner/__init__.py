"""One-shot code runner speaking a line-oriented JSON protocol.

Each invocation serves exactly one request: a single JSON line on
stdin, one JSON reply line on stdout, then exit 0. Serving one snippet
per process is what gives callers cross-invocation isolation for free.
"""
from sandbox_runner.runner import main, parse_request, run_request, screen

__all__ = ["main", "parse_request", "run_request", "screen"]
