"""Command-line entry point.

Subcommands: solve (one problem), eval (dataset -> report files),
ablate (config sweep), translate (translation stage standalone),
exec-test (sandbox smoke test). Configuration comes from an optional
JSON manifest; command-line flags override manifest values. API keys
travel only through the environment variable named by api_key_env,
never through argv.

Exit codes: 0 success, 1 config/endpoint/dataset errors, 2 unparseable
consensus (solve), 3 sandbox timeout (exec-test). stdout carries
results only; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import shlex
import sys
from dataclasses import dataclass

from .client import (
    EndpointConfig,
    HttpChatClient,
    KeyedMockClient,
    ScriptedMockClient,
)
from .errors import ConfigError, PipelineError
from .executors import SubprocessExecutor
from .harness import (
    PipelineConfig,
    Problem,
    ablation_run,
    apply_overrides,
    evaluate,
    load_dataset,
    render_ablation,
    render_report,
    solve_one,
)
from .prompts import default_registry, load_registry
from .stages import detect_bengali, translate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_CONSENSUS = 2
EXIT_SANDBOX_TIMEOUT = 3

# The separately-installed sandbox runner package, invoked per execution.
DEFAULT_SANDBOX_CMD = [sys.executable, "-m", "sandbox_runner"]

_RUN_NAME = re.compile(r"[A-Za-z0-9_-]+")

_MANIFEST_KEYS = frozenset(
    {
        "run_name",
        "dataset_path",
        "output_dir",
        "endpoint",
        "pipeline",
        "axes",
        "prompt_file",
        "sandbox_cmd",
        "mock_script",
    }
)
_ENDPOINT_KEYS = frozenset(
    {
        "base_url",
        "model_name",
        "api_key_env",
        "request_timeout",
        "max_retries",
        "retry_backoff",
        "fan_out_single",
    }
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved for "no parseable
    # consensus" here, so usage problems are rerouted to exit 1.
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunManifest:
    config: PipelineConfig
    endpoint: EndpointConfig
    dataset_path: str | None
    output_dir: str
    run_name: str
    axes: list[tuple[str, dict]]
    prompt_file: str | None
    sandbox_cmd: list[str] | None
    mock_script_path: str | None


def _read_json_object(path: str, what: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            doc = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{what} {path} must be a JSON object")
    return doc


def _parse_axes(raw: object, where: str) -> list[tuple[str, dict]]:
    if not isinstance(raw, list):
        raise ConfigError(f"{where}: 'axes' must be an array")
    axes: list[tuple[str, dict]] = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: axes[{i}] must be an object")
        unknown = set(entry) - {"label", "overrides"}
        if unknown:
            raise ConfigError(
                f"{where}: axes[{i}] has unknown keys: {', '.join(sorted(unknown))}"
            )
        label = entry.get("label")
        if not isinstance(label, str) or not label:
            raise ConfigError(f"{where}: axes[{i}] needs a non-empty string 'label'")
        overrides = entry.get("overrides", {})
        if not isinstance(overrides, dict):
            raise ConfigError(f"{where}: axes[{i}].overrides must be an object")
        axes.append((label, overrides))
    return axes


def _parse_sandbox_cmd(raw: object, where: str) -> list[str]:
    if isinstance(raw, str):
        cmd = shlex.split(raw)
    elif isinstance(raw, list) and all(isinstance(x, str) for x in raw):
        cmd = list(raw)
    else:
        raise ConfigError(f"{where}: 'sandbox_cmd' must be a string or an array of strings")
    if not cmd:
        raise ConfigError(f"{where}: 'sandbox_cmd' must not be empty")
    return cmd


def _build_manifest(args: argparse.Namespace) -> RunManifest:
    doc: dict = {}
    where = "manifest"
    if args.manifest is not None:
        where = args.manifest
        doc = _read_json_object(args.manifest, "manifest")
        unknown = set(doc) - _MANIFEST_KEYS
        if unknown:
            raise ConfigError(f"{where}: unknown manifest keys: {', '.join(sorted(unknown))}")

    config = PipelineConfig.from_dict(doc.get("pipeline") or {})
    if args.concurrency is not None:
        config = apply_overrides(config, {"concurrency": args.concurrency})

    mock_script_path = args.mock_script or doc.get("mock_script")

    endpoint_doc = doc.get("endpoint") or {}
    if not isinstance(endpoint_doc, dict):
        raise ConfigError(f"{where}: 'endpoint' must be an object")
    unknown = set(endpoint_doc) - _ENDPOINT_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown endpoint keys: {', '.join(sorted(unknown))}")
    base_url = args.endpoint_url or endpoint_doc.get("base_url")
    model_name = args.model or endpoint_doc.get("model_name")
    if base_url is None:
        if mock_script_path is None:
            raise ConfigError(
                "no endpoint configured: pass --endpoint-url, a manifest with "
                "endpoint.base_url, or --mock-script"
            )
        base_url = "http://mock.invalid"
    if model_name is None:
        if mock_script_path is None:
            raise ConfigError("no model configured: pass --model or endpoint.model_name")
        model_name = "mock-model"
    api_key_env = args.api_key_env
    if api_key_env is None:
        api_key_env = endpoint_doc.get("api_key_env", "")
    endpoint = EndpointConfig(
        base_url=base_url,
        model_name=model_name,
        api_key_env=api_key_env,
        request_timeout=endpoint_doc.get("request_timeout", 60.0),
        max_retries=endpoint_doc.get("max_retries", 2),
        retry_backoff=endpoint_doc.get("retry_backoff", 1.0),
        fan_out_single=endpoint_doc.get("fan_out_single", False),
    )

    run_name = doc.get("run_name", "run")
    if not isinstance(run_name, str) or not _RUN_NAME.fullmatch(run_name):
        raise ConfigError(
            f"run_name must match [A-Za-z0-9_-]+, got {run_name!r}"
        )

    axes = _parse_axes(doc["axes"], where) if "axes" in doc else []

    sandbox_cmd = None
    if getattr(args, "sandbox_cmd", None):
        sandbox_cmd = _parse_sandbox_cmd(args.sandbox_cmd, "--sandbox-cmd")
    elif "sandbox_cmd" in doc:
        sandbox_cmd = _parse_sandbox_cmd(doc["sandbox_cmd"], where)

    return RunManifest(
        config=config,
        endpoint=endpoint,
        dataset_path=doc.get("dataset_path"),
        output_dir=args.output_dir or doc.get("output_dir") or ".",
        run_name=run_name,
        axes=axes,
        prompt_file=args.prompt_file or doc.get("prompt_file"),
        sandbox_cmd=sandbox_cmd,
        mock_script_path=mock_script_path,
    )


def _load_mock_client(path: str):
    doc = _read_json_object(path, "mock script")
    if "script" in doc and "keyed" in doc:
        raise ConfigError(f"{path}: use either 'script' or 'keyed', not both")
    if "script" in doc:
        if not isinstance(doc["script"], list):
            raise ConfigError(f"{path}: 'script' must be an array")
        return ScriptedMockClient(doc["script"])
    if "keyed" in doc:
        if not isinstance(doc["keyed"], dict):
            raise ConfigError(f"{path}: 'keyed' must be an object")
        return KeyedMockClient(doc["keyed"], default=doc.get("default"))
    raise ConfigError(f"{path}: mock script needs a 'script' or 'keyed' key")


def _make_client(manifest: RunManifest):
    if manifest.mock_script_path is not None:
        return _load_mock_client(manifest.mock_script_path)
    name = manifest.endpoint.api_key_env
    if name and os.environ.get(name) is None:
        raise ConfigError(f"API key environment variable {name} is not set")
    return HttpChatClient()


def _make_registry(manifest: RunManifest):
    if manifest.prompt_file is not None:
        return load_registry(manifest.prompt_file)
    return default_registry()


def _make_executor(manifest: RunManifest) -> SubprocessExecutor:
    return SubprocessExecutor(manifest.sandbox_cmd or DEFAULT_SANDBOX_CMD)


def _read_question(arg: str) -> str:
    text = arg
    if os.path.isfile(arg):
        with open(arg, encoding="utf-8") as handle:
            text = handle.read()
    text = text.strip()
    if not text:
        raise ConfigError("question is empty")
    return text


def _solve_flag_overrides(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    sampling: dict = {}
    if args.reasoning is not None:
        overrides["reasoning"] = args.reasoning
    if args.self_consistency is not None:
        overrides["self_consistency_n"] = args.self_consistency
    if args.translate_model is not None:
        overrides["translation_model"] = args.translate_model
    if args.corpus is not None:
        overrides["corpus_path"] = args.corpus
    if args.retrieval_k is not None:
        overrides["retrieval_k"] = args.retrieval_k
    if args.temperature is not None:
        sampling["temperature"] = args.temperature
    if args.top_p is not None:
        sampling["top_p"] = args.top_p
    if args.max_tokens is not None:
        sampling["max_tokens"] = args.max_tokens
    if sampling:
        overrides["sampling"] = sampling
    return overrides


def cmd_solve(args: argparse.Namespace) -> int:
    manifest = _build_manifest(args)
    config = apply_overrides(manifest.config, _solve_flag_overrides(args))
    question = _read_question(args.question)
    if config.reasoning == "tir" and args.no_sandbox:
        raise ConfigError("tir reasoning needs the code sandbox; drop --no-sandbox")
    executor = None
    if config.reasoning == "tir":
        executor = _make_executor(manifest)
    client = _make_client(manifest)
    registry = _make_registry(manifest)
    result = solve_one(
        Problem(id="cli", text=question),
        config,
        client,
        executor,
        manifest.endpoint,
        registry=registry,
    )
    for i, trace in enumerate(result.traces, start=1):
        answer = trace.answer.as_text() if trace.answer is not None else "-"
        line = (
            f"[trace {i}/{len(result.traces)}] termination={trace.termination} "
            f"answer={answer} executions={len(trace.executions)}"
        )
        if trace.error:
            line += f" error={trace.error}"
        print(line, file=sys.stderr)
    consensus = result.consensus
    if consensus.answer is None:
        print(
            f"no parseable consensus across {consensus.total_candidates} candidate(s)",
            file=sys.stderr,
        )
        return EXIT_NO_CONSENSUS
    print(
        f"consensus: {consensus.vote_count}/{consensus.total_candidates} votes"
        + (" (tie, first-seen wins)" if consensus.tie else ""),
        file=sys.stderr,
    )
    print(consensus.answer.value)
    return EXIT_OK


def cmd_translate(args: argparse.Namespace) -> int:
    manifest = _build_manifest(args)
    question = _read_question(args.question)
    if not detect_bengali(question):
        print("input does not look like Bengali text; nothing to translate", file=sys.stderr)
        return EXIT_ERROR
    client = _make_client(manifest)
    registry = _make_registry(manifest)
    translated = translate(
        Problem(id="cli", text=question), client, manifest.endpoint, registry=registry
    )
    print(translated.english_text)
    return EXIT_OK


def _write_reports(output_dir: str, run_name: str, markdown: str, as_json: str) -> list[str]:
    os.makedirs(output_dir, exist_ok=True)
    paths = []
    for suffix, text in ((".md", markdown), (".json", as_json)):
        path = os.path.join(output_dir, run_name + suffix)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        paths.append(path)
    return paths


def cmd_eval(args: argparse.Namespace) -> int:
    if args.manifest is None:
        raise ConfigError("eval needs --manifest")
    manifest = _build_manifest(args)
    if manifest.dataset_path is None:
        raise ConfigError(f"{args.manifest}: manifest needs 'dataset_path'")
    dataset = load_dataset(manifest.dataset_path)
    client = _make_client(manifest)
    registry = _make_registry(manifest)
    executor = _make_executor(manifest) if manifest.config.reasoning == "tir" else None
    report = evaluate(dataset, manifest.config, client, executor, manifest.endpoint, registry)
    paths = _write_reports(
        manifest.output_dir,
        manifest.run_name,
        render_report(report, "markdown"),
        render_report(report, "json"),
    )
    for path in paths:
        print(f"wrote {path}", file=sys.stderr)
    if report.score is not None:
        print(f"score: {report.score:.2f} / 100")
    else:
        print("score: n/a (no labeled problems)")
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace) -> int:
    if args.manifest is None:
        raise ConfigError("ablate needs --manifest")
    manifest = _build_manifest(args)
    if manifest.dataset_path is None:
        raise ConfigError(f"{args.manifest}: manifest needs 'dataset_path'")
    if not manifest.axes:
        raise ConfigError(f"{args.manifest}: manifest needs a non-empty 'axes' array")
    dataset = load_dataset(manifest.dataset_path)
    client = _make_client(manifest)
    registry = _make_registry(manifest)
    # Rows may toggle reasoning to tir, so the executor is always wired
    # up; it only spawns a process when code actually runs.
    executor = _make_executor(manifest)
    table = ablation_run(
        manifest.config, manifest.axes, dataset, client, executor, manifest.endpoint, registry
    )
    paths = _write_reports(
        manifest.output_dir,
        manifest.run_name,
        render_ablation(table, "markdown"),
        render_ablation(table, "json"),
    )
    for path in paths:
        print(f"wrote {path}", file=sys.stderr)
    for row in table.rows:
        score = "-" if row.score is None else f"{row.score:.2f}"
        print(f"{row.label}: {score}")
    return EXIT_OK


def cmd_exec_test(args: argparse.Namespace) -> int:
    command = (
        _parse_sandbox_cmd(args.sandbox_cmd, "--sandbox-cmd")
        if args.sandbox_cmd
        else DEFAULT_SANDBOX_CMD
    )
    executor = SubprocessExecutor(command)
    code = args.code if args.code is not None else "print(6*7)"
    result = executor.run(code, timeout_s=args.timeout, output_cap=8192)
    if result.status == "timeout":
        print(f"status: timeout after {args.timeout:g}s")
        return EXIT_SANDBOX_TIMEOUT
    if result.status == "runner_failure":
        print(result.stderr, file=sys.stderr)
        return EXIT_ERROR
    if result.status == "nonzero_exit":
        print("sandbox code exited nonzero", file=sys.stderr)
        if result.stderr:
            print(result.stderr, file=sys.stderr)
        return EXIT_ERROR
    if args.code is None and result.stdout != "42\n":
        print(
            f"sandbox smoke test expected stdout '42', got {result.stdout!r}",
            file=sys.stderr,
        )
        return EXIT_ERROR
    print(result.stdout, end="")
    if args.code is None:
        print("status: ok")
    return EXIT_OK


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--manifest", metavar="PATH", help="JSON run manifest; flags override its values"
    )
    parser.add_argument("--endpoint-url", metavar="URL", help="chat-completions base URL")
    parser.add_argument("--model", metavar="NAME", help="model name sent with each request")
    parser.add_argument(
        "--concurrency", type=int, metavar="N", help="max problems solved in parallel"
    )
    parser.add_argument("--output-dir", metavar="DIR", help="directory for report files")
    parser.add_argument(
        "--mock-script",
        metavar="PATH",
        help="JSON mock endpoint script; replaces the HTTP client (testing)",
    )
    parser.add_argument(
        "--api-key-env",
        metavar="VAR",
        help="environment variable holding the API key (never pass keys in argv)",
    )
    parser.add_argument(
        "--prompt-file", metavar="PATH", help="JSON prompt templates overriding the built-ins"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="bnsolve",
        description="Config-driven math problem solving over a chat-completions endpoint: "
        "translation, retrieval, tool-integrated reasoning, and majority voting.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = sub.add_parser(
        "solve",
        help="solve one problem and print the consensus answer",
        description="Solve a single problem end to end and print the consensus answer.",
    )
    p.add_argument("question", help="question text, or a path to a UTF-8 text file")
    _add_common_flags(p)
    p.add_argument("--reasoning", choices=["cot", "tir"], help="reasoning strategy")
    p.add_argument(
        "--self-consistency",
        dest="self_consistency",
        type=int,
        metavar="N",
        help="number of candidates to vote over",
    )
    p.add_argument("--temperature", type=float, metavar="T", help="sampling temperature")
    p.add_argument("--top-p", dest="top_p", type=float, metavar="P", help="nucleus cutoff")
    p.add_argument("--max-tokens", dest="max_tokens", type=int, metavar="N", help="reply budget")
    p.add_argument(
        "--translate-model",
        metavar="NAME",
        help="translate Bengali input to English with this model first",
    )
    p.add_argument("--corpus", metavar="PATH", help="retrieve context from this JSONL corpus")
    p.add_argument("--retrieval-k", type=int, metavar="K", help="snippets to retrieve")
    p.add_argument(
        "--sandbox-cmd", metavar="CMD", help="sandbox runner command line (tir only)"
    )
    p.add_argument(
        "--no-sandbox", action="store_true", help="run without a code sandbox (tir unavailable)"
    )
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser(
        "eval",
        help="evaluate a dataset and write report files",
        description="Run the pipeline over a labeled dataset and write markdown + JSON reports.",
    )
    _add_common_flags(p)
    p.add_argument(
        "--sandbox-cmd", metavar="CMD", help="sandbox runner command line (tir only)"
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "ablate",
        help="run a configuration sweep and write comparison tables",
        description="Evaluate every axes row from the manifest and write comparison tables.",
    )
    _add_common_flags(p)
    p.add_argument("--sandbox-cmd", metavar="CMD", help="sandbox runner command line")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser(
        "translate",
        help="translate one Bengali problem to English",
        description="Run the translation stage on one Bengali problem and print the English text.",
    )
    p.add_argument("question", help="question text, or a path to a UTF-8 text file")
    _add_common_flags(p)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser(
        "exec-test",
        help="smoke-test the code sandbox",
        description="Send a snippet through the sandbox runner and report its status.",
    )
    p.add_argument(
        "--sandbox-cmd", metavar="CMD", help="sandbox runner command line to test"
    )
    p.add_argument(
        "--code", metavar="SNIPPET", help="code to run instead of the default print(6*7)"
    )
    p.add_argument(
        "--timeout", type=float, default=10.0, metavar="S", help="execution timeout in seconds"
    )
    p.set_defaults(func=cmd_exec_test)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help
        code = exc.code
        return code if isinstance(code, int) else EXIT_OK
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
