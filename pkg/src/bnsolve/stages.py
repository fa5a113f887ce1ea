"""Pre-generation stages: Bengali-script detection, model translation,
and the minimal lexical retriever behind the RAG toggle.

The retriever is deliberately tiny (token-set Jaccard): the retrieval
axis exists so sweeps can reproduce the with/without-context comparison,
not to be a competitive retriever.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .answers import normalize_digits
from .client import ChatClient, ChatMessage, EndpointConfig, SamplingParams
from .errors import EmptyTranslation, ParseError

if TYPE_CHECKING:
    from .harness import Problem
    from .prompts import PromptRegistry

BENGALI_BLOCK_START = 0x0980
BENGALI_BLOCK_END = 0x09FF

# Fraction of Bengali codepoints (among letters and digits) above which a
# text counts as Bengali; tolerates Latin math notation mixed in.
BENGALI_THRESHOLD = 0.3

_TOKEN = re.compile(r"\w+")

_QUOTE_PAIRS = {
    ('"', '"'),
    ("'", "'"),
    ("“", "”"),  # curly double
    ("‘", "’"),  # curly single
}


@dataclass(frozen=True)
class TranslatedProblem:
    problem_id: str
    source_text: str
    english_text: str
    translator_model: str
    translation_latency: float


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass(frozen=True)
class ContextSnippet:
    doc_id: str
    text: str
    overlap_score: float


def detect_bengali(text: str) -> bool:
    """True iff more than 30% of the alphanumeric codepoints fall in the
    Bengali Unicode block (U+0980..U+09FF). Whitespace and punctuation
    count toward neither tally; empty text is not Bengali."""
    counted = 0
    bengali = 0
    for ch in text:
        if not ch.isalnum():
            continue
        counted += 1
        if BENGALI_BLOCK_START <= ord(ch) <= BENGALI_BLOCK_END:
            bengali += 1
    return counted > 0 and bengali / counted > BENGALI_THRESHOLD


def _strip_wrapper_quotes(text: str) -> str:
    text = text.strip()
    while len(text) >= 2 and (text[0], text[-1]) in _QUOTE_PAIRS:
        text = text[1:-1].strip()
    return text


def translate(
    problem: "Problem",
    client: ChatClient,
    endpoint: EndpointConfig,
    registry: "PromptRegistry | None" = None,
) -> TranslatedProblem:
    """Translate a Bengali problem into English via the model.

    The caller is responsible for only passing Bengali problems (gate on
    detect_bengali). Translation always samples deterministically
    (temperature 0.0, top_p 1.0, one candidate).
    """
    if registry is None:
        from .prompts import default_registry

        registry = default_registry()
    messages = registry.render("translate_bn_en", {"question": problem.text})
    params = SamplingParams(temperature=0.0, top_p=1.0, n_candidates=1, max_tokens=2048)
    reply = client.complete(messages, params, endpoint)
    english = _strip_wrapper_quotes(reply.candidates[0])
    if not english:
        raise EmptyTranslation(f"translator returned empty text for problem {problem.id!r}")
    return TranslatedProblem(
        problem_id=problem.id,
        source_text=problem.text,
        english_text=english,
        translator_model=endpoint.model_name,
        translation_latency=reply.latency,
    )


def _token_set(text: str) -> frozenset[str]:
    return frozenset(normalize_digits(token.lower()) for token in _TOKEN.findall(text))


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def retrieve(query: str, corpus: list[Document], k: int) -> list[ContextSnippet]:
    """Top-k documents by Jaccard overlap of lowercased, digit-normalized
    token sets; ties break toward the lower doc_id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query_tokens = _token_set(query)
    snippets = [
        ContextSnippet(
            doc_id=doc.doc_id,
            text=doc.text,
            overlap_score=jaccard(query_tokens, _token_set(doc.text)),
        )
        for doc in corpus
    ]
    snippets.sort(key=lambda s: (-s.overlap_score, s.doc_id))
    return snippets[: min(k, len(corpus))]


def inject_snippets(
    messages: list[ChatMessage], snippets: list[ContextSnippet]
) -> list[ChatMessage]:
    """Insert retrieved snippets as a system preamble before the question
    turn (the first user message)."""
    if not snippets:
        return list(messages)
    body = "Relevant reference material:\n\n" + "\n\n".join(
        f"[{s.doc_id}] {s.text}" for s in snippets
    )
    preamble = ChatMessage(role="system", content=body)
    out = list(messages)
    for index, message in enumerate(out):
        if message.role == "user":
            out.insert(index, preamble)
            return out
    out.append(preamble)
    return out


def load_corpus(path: str) -> list[Document]:
    """Read a UTF-8 JSONL corpus: one {"doc_id": ..., "text": ...} object
    per line; blank lines are skipped."""
    documents: list[Document] = []
    try:
        with open(path, encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"{path}:{line_no}: invalid JSON: {exc.msg}") from exc
                if not isinstance(doc, dict):
                    raise ParseError(f"{path}:{line_no}: expected an object")
                doc_id = doc.get("doc_id")
                text = doc.get("text")
                if not isinstance(doc_id, str) or not doc_id:
                    raise ParseError(f"{path}:{line_no}: missing 'doc_id'")
                if not isinstance(text, str):
                    raise ParseError(f"{path}:{line_no}: missing 'text'")
                documents.append(Document(doc_id=doc_id, text=text))
    except OSError as exc:
        raise ParseError(f"cannot read corpus {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"corpus {path} is not valid UTF-8: {exc}") from exc
    return documents
