"""Structured knowledge base: entity records, alias index, dictionary annotation.

Annotation is deterministic leftmost-longest matching of aliases at word
boundaries, case-insensitive and whitespace-tolerant. No fuzzy matching and
no statistical tagging; what the dictionary does not name does not exist.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

from .errors import KbAliasConflict, KbParseError


class EntityCategory(Enum):
    DISEASE = "disease"
    SYMPTOM = "symptom"
    INSPECTION = "inspection"


def normalize_surface(surface: str) -> str:
    """Canonical key form: lowercased with whitespace runs collapsed."""
    return " ".join(surface.lower().split())


@dataclass(frozen=True)
class EntityRecord:
    """One knowledge-base entity with its aliases and attribute map."""

    id: str
    canonical_name: str
    category: EntityCategory
    aliases: tuple[str, ...]
    attributes: dict[str, str]

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("entity id must be non-empty")
        if not normalize_surface(self.canonical_name):
            raise ValueError("canonical_name must be non-empty")
        aliases = tuple(self.aliases)
        # The canonical name is always a self-alias.
        normalized = {normalize_surface(a) for a in aliases}
        if normalize_surface(self.canonical_name) not in normalized:
            aliases = aliases + (self.canonical_name,)
        if any(not normalize_surface(a) for a in aliases):
            raise ValueError(f"entity {self.id!r} has an empty alias")
        object.__setattr__(self, "aliases", aliases)
        object.__setattr__(self, "attributes", dict(self.attributes))


@dataclass(frozen=True)
class KnowledgeBase:
    """Immutable entity collection with a normalized alias index."""

    entities: tuple[EntityRecord, ...]
    alias_index: dict[str, str]

    @classmethod
    def build(cls, entities: Iterable[EntityRecord]) -> "KnowledgeBase":
        records = tuple(entities)
        index: dict[str, str] = {}
        by_id: dict[str, EntityRecord] = {}
        for record in records:
            if record.id in by_id:
                raise KbParseError(f"duplicate entity id {record.id!r}")
            by_id[record.id] = record
            for alias in record.aliases:
                key = normalize_surface(alias)
                owner = index.get(key)
                if owner is not None and owner != record.id:
                    raise KbAliasConflict(
                        f"alias {alias!r} maps to both {owner!r} and {record.id!r}"
                    )
                index[key] = record.id
        return cls(entities=records, alias_index=index)

    @classmethod
    def empty(cls) -> "KnowledgeBase":
        return cls.build(())

    def entity(self, entity_id: str) -> EntityRecord:
        for record in self.entities:
            if record.id == entity_id:
                return record
        raise KeyError(entity_id)


@dataclass(frozen=True)
class EntityAnnotation:
    """One matched alias occurrence: span offsets, surface, resolved entity."""

    start: int
    end: int
    surface: str
    entity_id: str
    canonical_name: str
    attributes: dict[str, str]

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError("annotation span must satisfy 0 <= start < end")
        object.__setattr__(self, "attributes", dict(self.attributes))


def load_knowledge_base(path: str | Path) -> KnowledgeBase:
    """Load a KB from its JSON file format.

    The file is ``{"entities": [{"id", "canonical_name", "category",
    "aliases", "attributes"}]}`` with category one of disease, symptom,
    inspection.

    Raises:
        KbParseError: missing file, bad JSON, or malformed entities.
        KbAliasConflict: one alias claimed by two entities.
    """
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise KbParseError(f"cannot read knowledge base {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise KbParseError(f"knowledge base is not valid JSON: {exc}") from exc

    if not isinstance(doc, dict) or not isinstance(doc.get("entities"), list):
        raise KbParseError('knowledge base must be an object with an "entities" list')

    records = []
    for i, entry in enumerate(doc["entities"]):
        if not isinstance(entry, dict):
            raise KbParseError(f"entity #{i} is not an object")
        try:
            record = EntityRecord(
                id=entry["id"],
                canonical_name=entry["canonical_name"],
                category=EntityCategory(entry["category"]),
                aliases=tuple(entry.get("aliases", ())),
                attributes=dict(entry.get("attributes", {})),
            )
        except KeyError as exc:
            raise KbParseError(f"entity #{i} missing field {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise KbParseError(f"entity #{i} is malformed: {exc}") from exc
        records.append(record)
    return KnowledgeBase.build(records)


def _is_boundary(text: str, pos: int) -> bool:
    if pos <= 0 or pos >= len(text):
        return True
    return not (text[pos - 1].isalnum() and text[pos].isalnum())


def _match_alias_at(text: str, start: int, alias_key: str) -> int | None:
    """Try to match a normalized alias at ``start``; return the end offset.

    A single space in the alias key matches any whitespace run in the text;
    other characters must match case-insensitively.
    """
    pos, n = start, len(text)
    for ch in alias_key:
        if ch == " ":
            if pos >= n or not text[pos].isspace():
                return None
            while pos < n and text[pos].isspace():
                pos += 1
        else:
            if pos >= n or text[pos].lower() != ch:
                return None
            pos += 1
    return pos


def annotate_entities(text: str, kb: KnowledgeBase) -> list[EntityAnnotation]:
    """Find all maximal non-overlapping alias matches, leftmost-longest.

    Matches anchor at word boundaries on both sides; at each position the
    longest matching alias (by covered text span) wins and scanning resumes
    after it.
    """
    if not text or not kb.alias_index:
        return []

    by_id = {record.id: record for record in kb.entities}
    annotations: list[EntityAnnotation] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace() or not _is_boundary(text, i):
            i += 1
            continue
        best_end = -1
        best_entity: str | None = None
        for alias_key, entity_id in kb.alias_index.items():
            end = _match_alias_at(text, i, alias_key)
            if end is not None and _is_boundary(text, end) and end > best_end:
                best_end = end
                best_entity = entity_id
        if best_entity is not None and best_end > i:
            record = by_id[best_entity]
            annotations.append(
                EntityAnnotation(
                    start=i,
                    end=best_end,
                    surface=text[i:best_end],
                    entity_id=record.id,
                    canonical_name=record.canonical_name,
                    attributes=dict(record.attributes),
                )
            )
            i = best_end
        else:
            i += 1
    return annotations
