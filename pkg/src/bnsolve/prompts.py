"""Named prompt templates rendered into chat message lists.

Templates are data, not code: the built-in defaults below are stand-in
wordings and can be overridden from a JSON file without touching the
package (see load_registry).

Placeholder syntax is ``{{name}}``. Literal double braces are escaped as
``{{{{`` and ``}}}}``; single braces pass through untouched.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .client import ChatMessage
from .errors import DuplicateId, MissingVariable, ParseError, UnknownTemplate

_PLACEHOLDER = re.compile(r"\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}")
_ROLES = ("system", "user", "assistant", "tool")


def _scan_placeholders(text: str) -> frozenset[str]:
    names = set()
    i = 0
    while i < len(text):
        if text.startswith("{{{{", i) or text.startswith("}}}}", i):
            i += 4
            continue
        m = _PLACEHOLDER.match(text, i)
        if m:
            names.add(m.group(1))
            i = m.end()
        else:
            i += 1
    return frozenset(names)


def _render_text(text: str, variables: dict[str, str], template_id: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        if text.startswith("{{{{", i):
            out.append("{{")
            i += 4
            continue
        if text.startswith("}}}}", i):
            out.append("}}")
            i += 4
            continue
        m = _PLACEHOLDER.match(text, i)
        if m:
            name = m.group(1)
            if name not in variables:
                raise MissingVariable(name, template_id)
            out.append(str(variables[name]))
            i = m.end()
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    messages: tuple[tuple[str, str], ...]
    required_vars: frozenset[str] = field(init=False)

    def __post_init__(self):
        if not self.id:
            raise ParseError("template id must be non-empty")
        for role, _ in self.messages:
            if role not in _ROLES:
                raise ParseError(f"template {self.id!r}: unknown role {role!r}")
        names: set[str] = set()
        for _, text in self.messages:
            names |= _scan_placeholders(text)
        object.__setattr__(self, "required_vars", frozenset(names))

    def render(self, variables: dict[str, str]) -> list[ChatMessage]:
        return [
            ChatMessage(role=role, content=_render_text(text, variables, self.id))
            for role, text in self.messages
        ]


class PromptRegistry:
    """Immutable-after-construction mapping of template id to template."""

    def __init__(self, templates: list[PromptTemplate]):
        self._templates: dict[str, PromptTemplate] = {}
        for template in templates:
            if template.id in self._templates:
                raise DuplicateId(f"duplicate template id {template.id!r}")
            self._templates[template.id] = template

    def __contains__(self, template_id: str) -> bool:
        return template_id in self._templates

    def ids(self) -> list[str]:
        return sorted(self._templates)

    def get(self, template_id: str) -> PromptTemplate:
        try:
            return self._templates[template_id]
        except KeyError:
            raise UnknownTemplate(template_id) from None

    def render(self, template_id: str, variables: dict[str, str]) -> list[ChatMessage]:
        return self.get(template_id).render(variables)

    def overlaid(self, templates: list[PromptTemplate]) -> "PromptRegistry":
        merged = dict(self._templates)
        for template in templates:
            merged[template.id] = template
        return PromptRegistry(list(merged.values()))

    def to_json(self) -> str:
        payload = {
            "templates": [
                {
                    "id": t.id,
                    "messages": [{"role": r, "text": x} for r, x in t.messages],
                }
                for t in self._templates.values()
            ]
        }
        return json.dumps(payload, ensure_ascii=False, indent=2)


_MATH_SYSTEM = (
    "You are an expert competition mathematician. Work carefully, check your "
    "arithmetic, and keep your reasoning explicit."
)

_BOXED_RULE = (
    "After your reasoning, give the final answer as a single integer inside "
    "\\boxed{...} on the last line, e.g. \\boxed{42}."
)

_TIR_RULE = (
    "Whenever a calculation is needed, write one Python code block "
    "(```python ... ```) that prints the value you need. It will be executed "
    "and its output shown to you inside an ```output block; continue from "
    "there. " + _BOXED_RULE
)

_BENGALI_NOTE = "The problem below is written in Bengali; reason in English."


def default_templates() -> list[PromptTemplate]:
    return [
        PromptTemplate(
            id="translate_bn_en",
            messages=(
                (
                    "system",
                    "You are a careful translator of mathematics problems from "
                    "Bengali to English.",
                ),
                (
                    "user",
                    "Translate the following Bengali math problem into English. "
                    "Keep every number, name, and mathematical relationship "
                    "exactly as stated. Reply with the English translation only, "
                    "no commentary.\n\n{{question}}",
                ),
            ),
        ),
        PromptTemplate(
            id="cot_en",
            messages=(
                ("system", _MATH_SYSTEM),
                (
                    "user",
                    "Solve the following problem step by step. " + _BOXED_RULE
                    + "\n\n{{question}}",
                ),
            ),
        ),
        PromptTemplate(
            id="cot_bn",
            messages=(
                ("system", _MATH_SYSTEM),
                (
                    "user",
                    _BENGALI_NOTE + " Solve it step by step. " + _BOXED_RULE
                    + "\n\n{{question}}",
                ),
            ),
        ),
        PromptTemplate(
            id="tir_en",
            messages=(
                ("system", _MATH_SYSTEM),
                (
                    "user",
                    "Solve the following problem step by step. " + _TIR_RULE
                    + "\n\n{{question}}",
                ),
            ),
        ),
        PromptTemplate(
            id="tir_bn",
            messages=(
                ("system", _MATH_SYSTEM),
                (
                    "user",
                    _BENGALI_NOTE + " Solve it step by step. " + _TIR_RULE
                    + "\n\n{{question}}",
                ),
            ),
        ),
    ]


def default_registry() -> PromptRegistry:
    return PromptRegistry(default_templates())


def parse_templates(text: str, source: str = "<string>") -> list[PromptTemplate]:
    """Parse the template file format; raises ParseError/DuplicateId with
    field diagnostics. Empty input means "no overrides"."""
    if not text.strip():
        return []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("templates"), list):
        raise ParseError(f"{source}: expected an object with a 'templates' list")
    templates: list[PromptTemplate] = []
    seen: set[str] = set()
    for index, entry in enumerate(doc["templates"]):
        where = f"{source}: templates[{index}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: expected an object")
        template_id = entry.get("id")
        if not isinstance(template_id, str) or not template_id:
            raise ParseError(f"{where}: missing or empty 'id'")
        if template_id in seen:
            raise DuplicateId(f"{source}: duplicate template id {template_id!r}")
        seen.add(template_id)
        raw_messages = entry.get("messages")
        if not isinstance(raw_messages, list) or not raw_messages:
            raise ParseError(f"{where}: missing non-empty 'messages' list")
        messages: list[tuple[str, str]] = []
        for m_index, message in enumerate(raw_messages):
            m_where = f"{where}.messages[{m_index}]"
            if not isinstance(message, dict):
                raise ParseError(f"{m_where}: expected an object")
            role = message.get("role")
            body = message.get("text")
            if role not in _ROLES:
                raise ParseError(f"{m_where}: bad or missing 'role'")
            if not isinstance(body, str):
                raise ParseError(f"{m_where}: missing 'text'")
            messages.append((role, body))
        templates.append(PromptTemplate(id=template_id, messages=tuple(messages)))
    return templates


def load_registry(path: str) -> PromptRegistry:
    """Built-in defaults overlaid by the entries of the file at ``path``."""
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ParseError(f"cannot read template file {path}: {exc}") from exc
    return default_registry().overlaid(parse_templates(text, source=path))
