"""Execute one code snippet in a fresh interpreter and report the outcome.

Request line:  {"code": str, "timeout_s": number, "output_cap": int}
Reply line:    {"stdout": str, "stderr": str, "status": str,
                "duration_ms": int, "truncated": bool}

Status is "ok", "nonzero_exit", "timeout", or "runner_failure". The
runner itself always exits 0 once it has written a well-formed reply;
a broken request or a refused snippet is reported in-band as
"runner_failure", never as a crash.

The static denylist below is a tripwire for obviously hostile
snippets, not a security boundary. It scans source text, so trivial
indirection defeats it. Run the whole runner inside a container, VM,
or jail when the code is untrusted.
"""
from __future__ import annotations

import json
import os
import re
import signal
import subprocess
import sys
import time

TIMEOUT_MAX_S = 60.0
OUTPUT_CAP_MIN = 256
OUTPUT_CAP_MAX = 1_048_576

# label -> pattern; a hit refuses the snippet before execution
DENYLIST = (
    ("subprocess", re.compile(r"\bsubprocess\b")),
    ("os.system", re.compile(r"\bos\s*\.\s*system\b")),
    ("os.popen", re.compile(r"\bos\s*\.\s*popen\b")),
    ("os process spawning", re.compile(r"\bos\s*\.\s*(exec\w+|spawn\w+|fork\w*|posix_spawn\w*)\b")),
    ("socket", re.compile(r"\bsocket\b")),
    ("pty", re.compile(r"\bpty\b")),
)


def _reply(status, *, stdout="", stderr="", duration_ms=0, truncated=False):
    return {
        "stdout": stdout,
        "stderr": stderr,
        "status": status,
        "duration_ms": duration_ms,
        "truncated": truncated,
    }


def _failure(message):
    return _reply("runner_failure", stderr=message)


def parse_request(line):
    """Validate one request line; returns (code, timeout_s, output_cap).

    Raises ValueError on anything malformed. Unknown fields are
    ignored so the protocol can grow without breaking old runners.
    """
    doc = json.loads(line)
    if not isinstance(doc, dict):
        raise ValueError("request must be a JSON object")
    code = doc.get("code")
    if not isinstance(code, str):
        raise ValueError("field 'code' must be a string")
    timeout_s = doc.get("timeout_s")
    if isinstance(timeout_s, bool) or not isinstance(timeout_s, (int, float)):
        raise ValueError("field 'timeout_s' must be a number")
    if not 0 < timeout_s <= TIMEOUT_MAX_S:
        raise ValueError(f"field 'timeout_s' must be in (0, {TIMEOUT_MAX_S:g}]")
    output_cap = doc.get("output_cap")
    if isinstance(output_cap, bool) or not isinstance(output_cap, int):
        raise ValueError("field 'output_cap' must be an integer")
    if not OUTPUT_CAP_MIN <= output_cap <= OUTPUT_CAP_MAX:
        raise ValueError(
            f"field 'output_cap' must be in [{OUTPUT_CAP_MIN}, {OUTPUT_CAP_MAX}]"
        )
    return code, float(timeout_s), output_cap


def screen(code):
    """Best-effort source scan; returns a refusal message or None."""
    for label, pattern in DENYLIST:
        if pattern.search(code):
            return f"refused: snippet uses {label}, which this runner does not allow"
    return None


def _clip(data, cap):
    return data[:cap].decode("utf-8", errors="replace"), len(data) > cap


def _kill_tree(proc):
    # the snippet may have forked; take down its whole session
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except OSError:
        proc.kill()


def run_request(code, timeout_s, output_cap):
    """Run one snippet in a fresh isolated interpreter; returns a reply dict."""
    refusal = screen(code)
    if refusal is not None:
        return _failure(refusal)
    started = time.monotonic()
    try:
        proc = subprocess.Popen(
            [sys.executable, "-I", "-c", code],
            stdin=subprocess.DEVNULL,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            start_new_session=True,
        )
    except OSError as exc:
        return _failure(f"could not start interpreter: {exc}")
    timed_out = False
    try:
        out, err = proc.communicate(timeout=timeout_s)
    except subprocess.TimeoutExpired:
        timed_out = True
        _kill_tree(proc)
        out, err = proc.communicate()
    duration_ms = int(round((time.monotonic() - started) * 1000))
    stdout, out_cut = _clip(out, output_cap)
    stderr, err_cut = _clip(err, output_cap)
    if timed_out:
        status = "timeout"
    elif proc.returncode == 0:
        status = "ok"
    else:
        status = "nonzero_exit"
    return _reply(
        status,
        stdout=stdout,
        stderr=stderr,
        duration_ms=duration_ms,
        truncated=out_cut or err_cut,
    )


def main(argv=None):
    raw = sys.stdin.buffer.readline()
    line = raw.decode("utf-8", errors="replace")
    if not line.strip():
        doc = _failure("empty request")
    else:
        try:
            code, timeout_s, output_cap = parse_request(line)
        except ValueError as exc:
            doc = _failure(f"bad request: {exc}")
        else:
            doc = run_request(code, timeout_s, output_cap)
    print(json.dumps(doc), flush=True)
    return 0
