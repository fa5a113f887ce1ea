"""Final-answer extraction and canonicalization.

Everything downstream (voting, scoring) compares answers in canonical
integer form, so this module is deliberately strict: anything that does
not reduce to an integer is "unparseable" rather than approximated.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

BENGALI_DIGITS = "০১২৩৪৫৬৭৮৯"  # ০১২৩৪৫৬৭৮৯

_BENGALI_TO_ASCII = str.maketrans(BENGALI_DIGITS, "0123456789")

# Optionally signed run of digits with comma separators and an optional
# fractional part; canonicalize() decides whether it is an integer.
_NUMBER = r"[+-]?\d[\d,]*(?:\.\d+)?"

_STANDALONE_NUMBER = re.compile(r"(?<![\w.])" + _NUMBER + r"(?!\w)")

_MARKER_PATTERNS = [
    re.compile(r"answer\s+is\s*[:\-]?\s*\$?(" + _NUMBER + ")", re.IGNORECASE),
    re.compile(r"উত্তর\D{0,12}?(" + _NUMBER + ")"),  # উত্তর
    # Trailing punctuation is tolerated so that appending "." or "!" to a
    # reply cannot flip which marker matched.
    re.compile(r"=\s*(" + _NUMBER + r")[\s.!?,;:'\")\]]*$", re.MULTILINE),
]


@dataclass(frozen=True)
class CanonicalAnswer:
    """Normalized final answer: an arbitrary-precision integer or an
    explicit unparseable marker."""

    kind: str  # "integer" | "unparseable"
    value: int | None = None

    @classmethod
    def integer(cls, value: int) -> "CanonicalAnswer":
        return cls(kind="integer", value=int(value))

    @classmethod
    def unparseable(cls) -> "CanonicalAnswer":
        return cls(kind="unparseable", value=None)

    @property
    def is_integer(self) -> bool:
        return self.kind == "integer"

    def as_text(self) -> str:
        """Canonical text form; empty string for unparseable."""
        return str(self.value) if self.kind == "integer" else ""


def normalize_digits(text: str) -> str:
    """Replace every Bengali digit (U+09E6..U+09EF) with its ASCII
    counterpart; all other codepoints pass through untouched."""
    return text.translate(_BENGALI_TO_ASCII)


def canonicalize(raw: str) -> CanonicalAnswer:
    """Reduce a raw answer string to a canonical integer.

    Strips whitespace, ``\\text{}`` / ``$`` wrappers, trailing periods and
    thousands-separator commas, then parses an optionally signed decimal
    integer. A fractional part consisting only of zeros is dropped
    ("12.000" -> 12); any other fraction is unparseable.
    """
    s = raw.strip()
    while True:
        before = s
        s = s.strip()
        if s.startswith("\\text{") and s.endswith("}"):
            s = s[len("\\text{"):-1]
        elif len(s) >= 2 and s.startswith("$") and s.endswith("$"):
            s = s[1:-1]
        if s == before:
            break
    s = s.rstrip(".").replace(",", "").strip()
    m = re.fullmatch(r"([+-]?)(\d+)(?:\.(\d+))?", s)
    if m is None:
        return CanonicalAnswer.unparseable()
    sign, whole, frac = m.groups()
    if frac is not None and frac.strip("0"):
        return CanonicalAnswer.unparseable()
    return CanonicalAnswer.integer(int(sign + whole))


def extract_final_answer(text: str) -> CanonicalAnswer:
    """Pull the final answer out of model text.

    After digit normalization, the first matching tier wins:
    last ``\\boxed{...}`` content, then the last answer-marker match
    ("answer is", "উত্তর", "=" at end of line), then the last standalone
    number on the final content-bearing line. The selected raw string goes
    through canonicalize(); no tier fallback happens after selection.
    """
    text = normalize_digits(text)
    raw = _last_boxed_content(text)
    if raw is None:
        raw = _last_marker_number(text)
    if raw is None:
        raw = _final_line_number(text)
    if raw is None:
        return CanonicalAnswer.unparseable()
    return canonicalize(raw)


def _last_boxed_content(text: str) -> str | None:
    last = None
    idx = 0
    while True:
        idx = text.find("\\boxed", idx)
        if idx < 0:
            break
        after = idx + len("\\boxed")
        brace = text.find("{", after)
        if brace < 0:
            break
        if text[after:brace].strip():
            idx = after
            continue
        depth = 0
        content = None
        for j in range(brace, len(text)):
            if text[j] == "{":
                depth += 1
            elif text[j] == "}":
                depth -= 1
                if depth == 0:
                    content = text[brace + 1:j]
                    break
        if content is not None:
            last = content
        idx = brace + 1
    return last


def _last_marker_number(text: str) -> str | None:
    best: tuple[int, str] | None = None
    for pattern in _MARKER_PATTERNS:
        for m in pattern.finditer(text):
            if best is None or m.start(1) >= best[0]:
                best = (m.start(1), m.group(1))
    return best[1] if best else None


def _final_line_number(text: str) -> str | None:
    # Trailing lines with no alphanumeric content (bare punctuation,
    # blank lines) do not count as the final line.
    for line in reversed(text.splitlines()):
        if not any(ch.isalnum() for ch in line):
            continue
        numbers = _STANDALONE_NUMBER.findall(line)
        return numbers[-1] if numbers else None
    return None
