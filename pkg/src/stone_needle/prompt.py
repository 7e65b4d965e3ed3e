"""Prompt assembly: history, knowledge annotations, tool output, current query.

The rendered prompt has a fixed section order (HISTORY, KNOWLEDGE,
TOOL_RESULT, QUERY); empty sections are omitted, QUERY never is. A char/4
token estimate enforces the budget by dropping whole history turns oldest
first; the other sections are never dropped.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable

from .domain import DialogueHistory, Query, Resource, TurnRecord
from .errors import BudgetTooSmall
from .knowledge import KnowledgeBase, annotate_entities
from .registry import MfmKind, MfmOutput

SECTION_ORDER = ("HISTORY", "KNOWLEDGE", "TOOL_RESULT", "QUERY")

CHARS_PER_TOKEN = 4


def render_sections(sections: Iterable[tuple[str, str]]) -> str:
    """Pure rendering of (tag, body) pairs; re-rendering is idempotent."""
    return "\n\n".join(f"[{tag}]\n{body}" for tag, body in sections)


def estimate_tokens(rendered: str) -> int:
    return math.ceil(len(rendered) / CHARS_PER_TOKEN)


def prompt_fingerprint(rendered: str) -> str:
    return hashlib.sha256(rendered.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class AssembledPrompt:
    """The structured prompt handed to the generation backend."""

    prompt_id: str
    sections: tuple[tuple[str, str], ...]
    rendered: str
    token_estimate: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "sections", tuple(tuple(s) for s in self.sections))
        tags = [tag for tag, _ in self.sections]
        order = [t for t in SECTION_ORDER if t in tags]
        if tags != order or len(set(tags)) != len(tags):
            raise ValueError(f"sections out of order or duplicated: {tags}")
        if "QUERY" not in tags:
            raise ValueError("QUERY section is mandatory")
        if self.rendered != render_sections(self.sections):
            raise ValueError("rendered text does not match sections")
        if self.token_estimate < 0:
            raise ValueError("token_estimate must be non-negative")

    @property
    def section_tags(self) -> tuple[str, ...]:
        return tuple(tag for tag, _ in self.sections)


def _modality_phrase(resources: Iterable[Resource]) -> str:
    seen: list[str] = []
    for r in resources:
        name = r.modality.value
        if name not in seen:
            seen.append(name)
    return ", ".join(seen)


def _non_text_placeholder(resources: Iterable[Resource]) -> str:
    return f"[non-text query: {_modality_phrase(resources)}]"


def _history_turn_lines(turn: TurnRecord) -> str:
    if turn.query.text is not None:
        user = turn.query.text
    else:
        user = _non_text_placeholder(turn.query.resources)
    if turn.response.text is not None:
        assistant = turn.response.text
    else:
        assistant = f"[non-text response: {_modality_phrase(turn.response.resources)}]"
    return f"USER: {user}\nASSISTANT: {assistant}"


def _knowledge_body(texts: Iterable[str], kb: KnowledgeBase) -> str:
    lines: list[str] = []
    seen_ids: set[str] = set()
    for text in texts:
        for annotation in annotate_entities(text, kb):
            if annotation.entity_id in seen_ids:
                continue
            seen_ids.add(annotation.entity_id)
            record = kb.entity(annotation.entity_id)
            line = f"{record.canonical_name} [{record.category.value}]"
            if record.attributes:
                attrs = "; ".join(f"{k}={v}" for k, v in record.attributes.items())
                line = f"{line}: {attrs}"
            lines.append(line)
    return "\n".join(lines)


def _tool_result_body(mfm_output: MfmOutput) -> str:
    if mfm_output.kind is MfmKind.TEXT_RESULT:
        return mfm_output.text or ""
    if mfm_output.kind is MfmKind.RESOURCE_RESULT:
        source = mfm_output.source_model or "unknown"
        return "\n".join(
            f"model {source} produced {r.modality.value} resource {r.id}"
            for r in mfm_output.resources
        )
    return ""


def _query_body(query: Query) -> str:
    if query.text is not None:
        return query.text
    return _non_text_placeholder(query.resources)


def assemble_prompt(
    mfm_output: MfmOutput,
    query: Query,
    history: DialogueHistory,
    kb: KnowledgeBase,
    budget: int,
) -> AssembledPrompt:
    """Combine tool output, annotations, history, and the query into one prompt.

    KNOWLEDGE covers entities found in the current query text and the tool
    output text, one line per distinct entity in first-occurrence order. When
    the token estimate exceeds ``budget``, whole history turns are dropped
    oldest first; if the remaining sections still do not fit, BudgetTooSmall.
    """
    if budget <= 0:
        raise BudgetTooSmall("prompt budget must be positive")

    annotate_targets = []
    if query.text:
        annotate_targets.append(query.text)
    if mfm_output.kind is MfmKind.TEXT_RESULT and mfm_output.text:
        annotate_targets.append(mfm_output.text)

    knowledge = _knowledge_body(annotate_targets, kb)
    tool_result = _tool_result_body(mfm_output)
    query_body = _query_body(query)

    kept = list(history.turns)
    while True:
        sections: list[tuple[str, str]] = []
        if kept:
            sections.append(("HISTORY", "\n".join(_history_turn_lines(t) for t in kept)))
        if knowledge:
            sections.append(("KNOWLEDGE", knowledge))
        if tool_result:
            sections.append(("TOOL_RESULT", tool_result))
        sections.append(("QUERY", query_body))

        rendered = render_sections(sections)
        estimate = estimate_tokens(rendered)
        if estimate <= budget:
            return AssembledPrompt(
                prompt_id=prompt_fingerprint(rendered),
                sections=tuple(sections),
                rendered=rendered,
                token_estimate=estimate,
            )
        if kept:
            kept.pop(0)
        else:
            raise BudgetTooSmall(
                f"query, tool result, and knowledge need {estimate} tokens, budget is {budget}"
            )
