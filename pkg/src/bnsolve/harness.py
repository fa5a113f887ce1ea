"""Evaluation harness: dataset loading, per-problem pipeline runs with
bounded concurrency, exact-match scoring out of 100, ablation sweeps,
and report rendering.

Scoring is exact-match over canonical integers, no partial credit. A
problem whose consensus is unparseable simply scores incorrect; a
problem without a gold answer is excluded from the denominator.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .answers import CanonicalAnswer, canonicalize, normalize_digits
from .client import ChatClient, ChatMessage, EndpointConfig, SamplingParams
from .consensus import ConsensusResult, majority_vote
from .errors import ConfigError, LoadError, ParseError
from .executors import CodeExecutor, ExecutionResult
from .prompts import PromptRegistry, default_registry
from .stages import Document, detect_bengali, inject_snippets, load_corpus, retrieve, translate
from .tir import CandidateTrace, TirConfig, run_cot, run_tir

_CONFIG_KEYS = frozenset(
    {
        "reasoning",
        "translation_model",
        "corpus_path",
        "retrieval_k",
        "self_consistency_n",
        "sampling",
        "tir",
        "concurrency",
        "seed",
    }
)
_SAMPLING_KEYS = frozenset(
    {"temperature", "top_p", "n_candidates", "max_tokens", "stop_sequences"}
)
_TIR_KEYS = frozenset({"max_rounds", "exec_timeout", "output_cap", "code_fence_tag"})


@dataclass(frozen=True)
class Problem:
    id: str
    text: str
    gold: CanonicalAnswer | None = None


@dataclass(frozen=True)
class PipelineConfig:
    """Every ablation toggle in one place.

    translation_model None means translation off; corpus_path None means
    retrieval off. For cot, sampling.n_candidates must equal
    self_consistency_n (one request, n replies); for tir each trace is
    its own conversation, so self_consistency_n controls trace count and
    n_candidates is pinned to 1 at call time. seed only labels the run:
    sampling happens endpoint-side.
    """

    reasoning: str = "cot"  # cot | tir
    translation_model: str | None = None
    corpus_path: str | None = None
    retrieval_k: int = 3
    self_consistency_n: int = 1
    sampling: SamplingParams = field(default_factory=SamplingParams)
    tir: TirConfig = field(default_factory=TirConfig)
    concurrency: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.reasoning not in ("cot", "tir"):
            raise ConfigError(f"reasoning must be 'cot' or 'tir', got {self.reasoning!r}")
        if self.self_consistency_n < 1:
            raise ConfigError(
                f"self_consistency_n must be >= 1, got {self.self_consistency_n}"
            )
        if self.retrieval_k < 1:
            raise ConfigError(f"retrieval_k must be >= 1, got {self.retrieval_k}")
        if self.concurrency < 1:
            raise ConfigError(f"concurrency must be >= 1, got {self.concurrency}")
        if self.reasoning == "cot" and self.sampling.n_candidates != self.self_consistency_n:
            raise ConfigError(
                "cot requires sampling.n_candidates == self_consistency_n "
                f"(got {self.sampling.n_candidates} vs {self.self_consistency_n})"
            )

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        """Build a config from parsed JSON, deriving n_candidates from
        self_consistency_n so manifests never have to state it twice."""
        if not isinstance(doc, dict):
            raise ConfigError("pipeline config must be an object")
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown pipeline config keys: {', '.join(sorted(unknown))}")
        sampling_doc = doc.get("sampling") or {}
        if not isinstance(sampling_doc, dict):
            raise ConfigError("'sampling' must be an object")
        sampling_doc = dict(sampling_doc)
        unknown = set(sampling_doc) - _SAMPLING_KEYS
        if unknown:
            raise ConfigError(f"unknown sampling keys: {', '.join(sorted(unknown))}")
        tir_doc = doc.get("tir") or {}
        if not isinstance(tir_doc, dict):
            raise ConfigError("'tir' must be an object")
        unknown = set(tir_doc) - _TIR_KEYS
        if unknown:
            raise ConfigError(f"unknown tir keys: {', '.join(sorted(unknown))}")

        reasoning = doc.get("reasoning", "cot")
        sc_n = doc.get("self_consistency_n", 1)
        if not isinstance(sc_n, int) or isinstance(sc_n, bool):
            raise ConfigError(f"self_consistency_n must be an integer, got {sc_n!r}")
        derived_n = sc_n if reasoning == "cot" else 1
        explicit_n = sampling_doc.pop("n_candidates", None)
        if explicit_n is not None and reasoning == "cot" and explicit_n != derived_n:
            raise ConfigError(
                f"sampling.n_candidates={explicit_n} conflicts with "
                f"self_consistency_n={sc_n} for cot"
            )
        stop = sampling_doc.pop("stop_sequences", None)
        try:
            sampling = SamplingParams(
                n_candidates=derived_n,
                stop_sequences=tuple(stop) if stop is not None else (),
                **sampling_doc,
            )
            tir_cfg = TirConfig(**tir_doc)
        except TypeError as exc:
            raise ConfigError(f"bad pipeline config: {exc}") from exc
        return cls(
            reasoning=reasoning,
            translation_model=doc.get("translation_model"),
            corpus_path=doc.get("corpus_path"),
            retrieval_k=doc.get("retrieval_k", 3),
            self_consistency_n=sc_n,
            sampling=sampling,
            tir=tir_cfg,
            concurrency=doc.get("concurrency", 1),
            seed=doc.get("seed", 0),
        )


@dataclass
class ProblemResult:
    problem_id: str
    consensus: ConsensusResult
    correct: bool | None  # None when the problem has no gold answer
    traces: list[CandidateTrace]
    elapsed: float


@dataclass
class EvalReport:
    config: PipelineConfig
    results: list[ProblemResult]  # sorted by problem_id
    score: float | None  # None when no problem carries a gold answer
    total_inference_time: float
    started_at: str
    finished_at: str


@dataclass
class AblationRow:
    label: str
    config: PipelineConfig
    score: float | None
    total_inference_time: float | None
    error: str | None = None


@dataclass
class AblationTable:
    base_config: PipelineConfig
    rows: list[AblationRow]


def compute_score(correct: int, labeled: int) -> float:
    """100 * correct / labeled, rounded half-up to two decimals."""
    if labeled <= 0:
        raise ValueError("labeled count must be positive")
    ratio = (Decimal(correct) * 100) / Decimal(labeled)
    return float(ratio.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


# --- dataset loading ---


def _read_csv_rows(path: str) -> list[tuple[int, str, str, object]]:
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise LoadError(f"{path}: dataset is empty")
        missing = {"id", "question"} - set(reader.fieldnames)
        if missing:
            raise LoadError(f"{path}: missing required columns: {', '.join(sorted(missing))}")
        return [
            (
                reader.line_num,
                (row.get("id") or "").strip(),
                row.get("question") or "",
                row.get("answer"),
            )
            for row in reader
        ]


def _read_jsonl_rows(path: str) -> list[tuple[int, str, str, object]]:
    rows: list[tuple[int, str, str, object]] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LoadError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from exc
            if not isinstance(doc, dict):
                raise LoadError(f"{path}:{line_no}: expected an object per line")
            missing = {"id", "question"} - set(doc)
            if missing:
                raise LoadError(f"{path}:{line_no}: missing keys: {', '.join(sorted(missing))}")
            question = doc["question"]
            if not isinstance(question, str):
                raise LoadError(f"{path}:{line_no}: 'question' must be a string")
            rows.append((line_no, str(doc["id"]).strip(), question, doc.get("answer")))
    return rows


def load_dataset(path: str) -> list[Problem]:
    """Read problems from UTF-8 CSV (header: id, question[, answer]) or
    JSONL (objects with those keys). Gold answers pass through numeral
    normalization and canonicalization; anything unparseable is a
    LoadError naming the row, not a silent unlabeled problem."""
    suffix = Path(path).suffix.lower()
    try:
        if suffix == ".csv":
            raw_rows = _read_csv_rows(path)
        elif suffix in (".jsonl", ".ndjson", ".json"):
            raw_rows = _read_jsonl_rows(path)
        else:
            raise LoadError(
                f"unsupported dataset format {suffix!r} for {path} (expected .csv or .jsonl)"
            )
    except OSError as exc:
        raise LoadError(f"cannot read dataset {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise LoadError(f"dataset {path} is not valid UTF-8: {exc}") from exc

    problems: list[Problem] = []
    seen: dict[str, int] = {}
    for row_no, pid, question, answer in raw_rows:
        where = f"{path}:{row_no}"
        if not pid:
            raise LoadError(f"{where}: empty id")
        if not question.strip():
            raise LoadError(f"{where}: empty question")
        if pid in seen:
            raise LoadError(
                f"duplicate id {pid!r} at rows {seen[pid]} and {row_no} of {path}"
            )
        seen[pid] = row_no
        gold: CanonicalAnswer | None = None
        if answer is not None and str(answer).strip():
            parsed = canonicalize(normalize_digits(str(answer)))
            if not parsed.is_integer:
                raise LoadError(f"{where}: unparseable gold answer {answer!r}")
            gold = parsed
        problems.append(Problem(id=pid, text=question, gold=gold))
    return problems


# --- pipeline execution ---


def solve_one(
    problem: Problem,
    config: PipelineConfig,
    client: ChatClient,
    executor: CodeExecutor | None,
    endpoint: EndpointConfig,
    registry: PromptRegistry | None = None,
    corpus: list[Document] | None = None,
) -> ProblemResult:
    """Run the full stage pipeline on one problem: detect/translate,
    retrieve, render the prompt, reason (cot or tir), vote. Model-side
    failures inside reasoning are recorded in traces, never raised."""
    if registry is None:
        registry = default_registry()
    started = time.monotonic()

    is_bengali = detect_bengali(problem.text)
    question = problem.text
    translated = False
    if config.translation_model is not None and is_bengali:
        translator_endpoint = replace(endpoint, model_name=config.translation_model)
        translation = translate(problem, client, translator_endpoint, registry=registry)
        question = translation.english_text
        translated = True

    language = "en" if (translated or not is_bengali) else "bn"
    template_id = f"{config.reasoning}_{language}"
    messages = registry.render(template_id, {"question": question})

    if config.corpus_path is not None:
        if corpus is None:
            corpus = load_corpus(config.corpus_path)
        snippets = retrieve(question, corpus, config.retrieval_k)
        messages = inject_snippets(messages, snippets)

    if config.reasoning == "tir":
        if executor is None:
            raise ConfigError("tir reasoning requires a code executor")
        traces = [
            run_tir(messages, client, executor, config.sampling, config.tir, endpoint)
            for _ in range(config.self_consistency_n)
        ]
    else:
        traces = run_cot(messages, client, config.sampling, endpoint)

    candidates = [
        t.answer if t.answer is not None else CanonicalAnswer.unparseable() for t in traces
    ]
    consensus = majority_vote(candidates)
    correct: bool | None = None
    if problem.gold is not None:
        correct = consensus.answer is not None and consensus.answer == problem.gold
    return ProblemResult(
        problem_id=problem.id,
        consensus=consensus,
        correct=correct,
        traces=traces,
        elapsed=time.monotonic() - started,
    )


def _failure_result(problem: Problem, exc: Exception, elapsed: float) -> ProblemResult:
    trace = CandidateTrace(
        messages=[],
        executions=[],
        final_text="",
        answer=None,
        termination="model_error",
        elapsed=elapsed,
        error=f"{type(exc).__name__}: {exc}",
    )
    return ProblemResult(
        problem_id=problem.id,
        consensus=majority_vote([CanonicalAnswer.unparseable()]),
        correct=None if problem.gold is None else False,
        traces=[trace],
        elapsed=elapsed,
    )


def evaluate(
    dataset: list[Problem],
    config: PipelineConfig,
    client: ChatClient,
    executor: CodeExecutor | None,
    endpoint: EndpointConfig,
    registry: PromptRegistry | None = None,
) -> EvalReport:
    """solve_one over a dataset with at most config.concurrency problems
    in flight. Per-problem failures become incorrect results; only
    dataset and config errors abort the run. Results are sorted by id so
    the report never depends on completion order."""
    if not dataset:
        raise LoadError("dataset is empty")
    ids = [p.id for p in dataset]
    if len(set(ids)) != len(ids):
        dupes = sorted({pid for pid in ids if ids.count(pid) > 1})
        raise LoadError(f"duplicate problem ids: {', '.join(repr(d) for d in dupes)}")
    if registry is None:
        registry = default_registry()
    corpus = load_corpus(config.corpus_path) if config.corpus_path is not None else None

    def work(problem: Problem) -> ProblemResult:
        problem_started = time.monotonic()
        try:
            return solve_one(
                problem, config, client, executor, endpoint, registry=registry, corpus=corpus
            )
        except ConfigError:
            raise
        except Exception as exc:
            return _failure_result(problem, exc, time.monotonic() - problem_started)

    started_at = datetime.now(timezone.utc).isoformat()
    run_started = time.monotonic()
    if config.concurrency == 1:
        results = [work(p) for p in dataset]
    else:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            results = list(pool.map(work, dataset))
    total = time.monotonic() - run_started
    finished_at = datetime.now(timezone.utc).isoformat()

    results.sort(key=lambda r: r.problem_id)
    labeled = sum(1 for r in results if r.correct is not None)
    correct = sum(1 for r in results if r.correct is True)
    score = compute_score(correct, labeled) if labeled else None
    return EvalReport(
        config=config,
        results=results,
        score=score,
        total_inference_time=total,
        started_at=started_at,
        finished_at=finished_at,
    )


# --- ablation sweeps ---


def apply_overrides(base: PipelineConfig, overrides: dict) -> PipelineConfig:
    """New config from base plus a flat override dict; 'sampling' and
    'tir' sub-dicts are merged key-wise rather than replaced."""
    if not isinstance(overrides, dict):
        raise ConfigError("overrides must be an object")
    doc = config_to_dict(base)
    # n_candidates is re-derived from self_consistency_n, so the stale
    # base value must not survive into the merged document.
    doc["sampling"] = {k: v for k, v in doc["sampling"].items() if k != "n_candidates"}
    for key, value in overrides.items():
        if key in ("sampling", "tir"):
            if not isinstance(value, dict):
                raise ConfigError(f"override {key!r} must be an object")
            doc[key] = {**doc[key], **value}
        else:
            doc[key] = value
    return PipelineConfig.from_dict(doc)


def ablation_run(
    base_config: PipelineConfig,
    axes: list[tuple[str, dict]],
    dataset: list[Problem],
    client: ChatClient,
    executor: CodeExecutor | None,
    endpoint: EndpointConfig,
    registry: PromptRegistry | None = None,
) -> AblationTable:
    """One evaluate per (label, overrides) row. A failing row records
    its error and the sweep moves on; duplicate labels are rejected up
    front because the rendered tables identify rows by position."""
    if not axes:
        raise ConfigError("ablation needs at least one row")
    labels = [label for label, _ in axes]
    dupes = sorted({label for label in labels if labels.count(label) > 1})
    if dupes:
        raise ConfigError(f"duplicate ablation labels: {', '.join(repr(d) for d in dupes)}")
    rows: list[AblationRow] = []
    for label, overrides in axes:
        row_config = base_config
        try:
            row_config = apply_overrides(base_config, overrides)
            report = evaluate(dataset, row_config, client, executor, endpoint, registry=registry)
        except Exception as exc:
            rows.append(
                AblationRow(
                    label=label,
                    config=row_config,
                    score=None,
                    total_inference_time=None,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
            continue
        rows.append(
            AblationRow(
                label=label,
                config=row_config,
                score=report.score,
                total_inference_time=report.total_inference_time,
            )
        )
    return AblationTable(base_config=base_config, rows=rows)


# --- rendering and serialization ---


def _fmt_knob(value: float | int | None) -> str:
    if value is None:
        return "-"
    return format(value, "g")


def _fmt_time(value: float | None) -> str:
    if value is None:
        return "-"
    return f"{value:.1f}"


def _md_row(cells: list[str]) -> str:
    return "| " + " | ".join(cells) + " |"


def _md_table(header: list[str], body: list[list[str]]) -> list[str]:
    lines = [_md_row(header), _md_row(["---"] * len(header))]
    lines.extend(_md_row(cells) for cells in body)
    return lines


def _toggle_cells(config: PipelineConfig, score: float | None) -> list[str]:
    translation = (
        f"Yes({config.translation_model})" if config.translation_model is not None else "No"
    )
    return [
        translation,
        "Yes" if config.corpus_path is not None else "No",
        "Yes" if config.reasoning == "tir" else "No",
        "Yes" if config.self_consistency_n > 1 else "No",
        _fmt_knob(score),
    ]


def _knob_cells(row: AblationRow) -> list[str]:
    return [
        _fmt_knob(row.config.sampling.temperature),
        _fmt_knob(row.config.sampling.top_p),
        _fmt_knob(row.config.self_consistency_n),
        _fmt_time(row.total_inference_time),
        _fmt_knob(row.score),
    ]


def render_ablation(table: AblationTable, format: str = "markdown") -> str:
    if format == "json":
        return json.dumps(ablation_to_dict(table), ensure_ascii=False, indent=2) + "\n"
    if format != "markdown":
        raise ValueError(f"unknown format {format!r}")
    lines = ["# Ablation results", ""]
    if table.rows:
        lines.append("Rows, in run order:")
        lines.extend(f"{i}. {row.label}" for i, row in enumerate(table.rows, start=1))
        lines.append("")
    lines.append("## Configuration matrix")
    lines.append("")
    lines.extend(
        _md_table(
            ["Translation", "RAG", "TIR", "Self-Consistency", "Score"],
            [_toggle_cells(row.config, row.score) for row in table.rows],
        )
    )
    lines.append("")
    lines.append("## Sampling settings")
    lines.append("")
    lines.extend(
        _md_table(
            ["Temperature", "Top_p", "Number of Candidates", "Inference Time(s)", "Score"],
            [_knob_cells(row) for row in table.rows],
        )
    )
    failed = [row for row in table.rows if row.error is not None]
    if failed:
        lines.append("")
        lines.append("## Failed rows")
        lines.append("")
        lines.extend(f"- {row.label}: {row.error}" for row in failed)
    return "\n".join(lines) + "\n"


def render_report(report: EvalReport, format: str = "markdown") -> str:
    if format == "json":
        return json.dumps(report_to_dict(report), ensure_ascii=False, indent=2) + "\n"
    if format != "markdown":
        raise ValueError(f"unknown format {format!r}")
    labeled = sum(1 for r in report.results if r.correct is not None)
    correct = sum(1 for r in report.results if r.correct is True)
    config = report.config
    lines = ["# Evaluation report", ""]
    if report.score is not None:
        lines.append(f"- Score: {report.score:.2f} / 100")
    else:
        lines.append("- Score: n/a (no labeled problems)")
    lines.append(f"- Problems: {len(report.results)} ({labeled} labeled, {correct} correct)")
    lines.append(f"- Total inference time (s): {report.total_inference_time:.1f}")
    lines.append(f"- Started: {report.started_at}")
    lines.append(f"- Finished: {report.finished_at}")
    translation = config.translation_model if config.translation_model is not None else "off"
    rag = config.corpus_path if config.corpus_path is not None else "off"
    lines.append(
        f"- Config: reasoning={config.reasoning}, translation={translation}, "
        f"rag={rag}, self_consistency_n={config.self_consistency_n}, "
        f"temperature={_fmt_knob(config.sampling.temperature)}, "
        f"top_p={_fmt_knob(config.sampling.top_p)}, concurrency={config.concurrency}"
    )
    lines.append("")
    body = []
    for result in report.results:
        answer = result.consensus.answer
        answer_cell = str(answer.value) if answer is not None else "-"
        correct_cell = "-"
        if result.correct is not None:
            correct_cell = "yes" if result.correct else "no"
        body.append(
            [
                result.problem_id,
                answer_cell,
                correct_cell,
                f"{result.consensus.vote_count}/{result.consensus.total_candidates}",
                f"{result.elapsed:.2f}",
            ]
        )
    lines.extend(_md_table(["Problem", "Answer", "Correct", "Votes", "Time(s)"], body))
    return "\n".join(lines) + "\n"


def _answer_to_json(answer: CanonicalAnswer | None) -> int | None:
    if answer is None or not answer.is_integer:
        return None
    return answer.value


def _answer_from_json(value: object) -> CanonicalAnswer | None:
    if value is None:
        return None
    if isinstance(value, int) and not isinstance(value, bool):
        return CanonicalAnswer.integer(value)
    raise ParseError(f"answer must be an integer or null, got {value!r}")


def config_to_dict(config: PipelineConfig) -> dict:
    return {
        "reasoning": config.reasoning,
        "translation_model": config.translation_model,
        "corpus_path": config.corpus_path,
        "retrieval_k": config.retrieval_k,
        "self_consistency_n": config.self_consistency_n,
        "sampling": {
            "temperature": config.sampling.temperature,
            "top_p": config.sampling.top_p,
            "n_candidates": config.sampling.n_candidates,
            "max_tokens": config.sampling.max_tokens,
            "stop_sequences": list(config.sampling.stop_sequences),
        },
        "tir": {
            "max_rounds": config.tir.max_rounds,
            "exec_timeout": config.tir.exec_timeout,
            "output_cap": config.tir.output_cap,
            "code_fence_tag": config.tir.code_fence_tag,
        },
        "concurrency": config.concurrency,
        "seed": config.seed,
    }


def _consensus_to_dict(consensus: ConsensusResult) -> dict:
    return {
        "answer": _answer_to_json(consensus.answer),
        "vote_count": consensus.vote_count,
        "total_candidates": consensus.total_candidates,
        "tie": consensus.tie,
        "distribution": dict(consensus.distribution),
    }


def _trace_to_dict(trace: CandidateTrace) -> dict:
    return {
        "messages": [{"role": m.role, "content": m.content} for m in trace.messages],
        "executions": [
            {
                "code": code,
                "result": {
                    "stdout": r.stdout,
                    "stderr": r.stderr,
                    "status": r.status,
                    "duration": r.duration,
                    "truncated": r.truncated,
                },
            }
            for code, r in trace.executions
        ],
        "final_text": trace.final_text,
        "answer": _answer_to_json(trace.answer),
        "termination": trace.termination,
        "elapsed": trace.elapsed,
        "error": trace.error,
    }


def report_to_dict(report: EvalReport) -> dict:
    return {
        "config": config_to_dict(report.config),
        "score": report.score,
        "total_inference_time": report.total_inference_time,
        "started_at": report.started_at,
        "finished_at": report.finished_at,
        "results": [
            {
                "problem_id": r.problem_id,
                "consensus": _consensus_to_dict(r.consensus),
                "correct": r.correct,
                "traces": [_trace_to_dict(t) for t in r.traces],
                "elapsed": r.elapsed,
            }
            for r in report.results
        ],
    }


def ablation_to_dict(table: AblationTable) -> dict:
    return {
        "base_config": config_to_dict(table.base_config),
        "rows": [
            {
                "label": row.label,
                "config": config_to_dict(row.config),
                "score": row.score,
                "total_inference_time": row.total_inference_time,
                "error": row.error,
            }
            for row in table.rows
        ],
    }


def _consensus_from_dict(doc: dict) -> ConsensusResult:
    return ConsensusResult(
        answer=_answer_from_json(doc["answer"]),
        vote_count=doc["vote_count"],
        total_candidates=doc["total_candidates"],
        tie=doc["tie"],
        distribution=dict(doc["distribution"]),
    )


def _trace_from_dict(doc: dict) -> CandidateTrace:
    return CandidateTrace(
        messages=[ChatMessage(role=m["role"], content=m["content"]) for m in doc["messages"]],
        executions=[
            (
                e["code"],
                ExecutionResult(
                    stdout=e["result"]["stdout"],
                    stderr=e["result"]["stderr"],
                    status=e["result"]["status"],
                    duration=e["result"]["duration"],
                    truncated=e["result"]["truncated"],
                ),
            )
            for e in doc["executions"]
        ],
        final_text=doc["final_text"],
        answer=_answer_from_json(doc["answer"]),
        termination=doc["termination"],
        elapsed=doc["elapsed"],
        error=doc.get("error"),
    )


def report_from_json(text: str) -> EvalReport:
    """Inverse of render_report(..., format="json")."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid report JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("report JSON must be an object")
    try:
        return EvalReport(
            config=PipelineConfig.from_dict(doc["config"]),
            results=[
                ProblemResult(
                    problem_id=r["problem_id"],
                    consensus=_consensus_from_dict(r["consensus"]),
                    correct=r["correct"],
                    traces=[_trace_from_dict(t) for t in r["traces"]],
                    elapsed=r["elapsed"],
                )
                for r in doc["results"]
            ],
            score=doc["score"],
            total_inference_time=doc["total_inference_time"],
            started_at=doc["started_at"],
            finished_at=doc["finished_at"],
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"report JSON is missing or mistypes a field: {exc!r}") from exc
