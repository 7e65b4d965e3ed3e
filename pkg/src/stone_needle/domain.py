"""Core domain types shared by every stage: resources, queries, turns, traces.

All types here are immutable values after construction and carry their own
JSON (de)serialization, which is also the persistence wire format.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable

from .errors import EmptyPayload, InvalidQuery, UnsupportedMediaType


class Modality(Enum):
    """The four supported resource modalities."""

    TEXT = "text"
    IMAGE = "image"
    VIDEO = "video"
    AUDIO = "audio"


class ResourceOrigin(Enum):
    UPLOAD = "upload"
    MODEL_PRODUCED = "model_produced"


_TOP_LEVEL_TO_MODALITY = {
    "text": Modality.TEXT,
    "image": Modality.IMAGE,
    "video": Modality.VIDEO,
    "audio": Modality.AUDIO,
}


def modality_of(media_type: str) -> Modality:
    """Map a MIME media type to its modality by top-level type.

    Raises:
        UnsupportedMediaType: for malformed strings and for any top-level
            type outside text/image/video/audio (e.g. "application/pdf").
    """
    top, sep, subtype = media_type.partition("/")
    if not sep or not top.strip() or not subtype.strip():
        raise UnsupportedMediaType(f"malformed media type: {media_type!r}")
    modality = _TOP_LEVEL_TO_MODALITY.get(top.strip().lower())
    if modality is None:
        raise UnsupportedMediaType(f"unsupported media type: {media_type!r}")
    return modality


def resource_id(data: bytes) -> str:
    """Content hash (lowercase SHA-256 hex) used as the stable resource identity."""
    if not data:
        raise EmptyPayload("cannot derive an id from an empty payload")
    return hashlib.sha256(data).hexdigest()


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class Resource:
    """Metadata for one stored binary attachment; the bytes live in the blob store."""

    id: str
    modality: Modality
    media_type: str
    byte_length: int
    origin: ResourceOrigin = ResourceOrigin.UPLOAD

    def __post_init__(self) -> None:
        if self.byte_length <= 0:
            raise ValueError("byte_length must be positive")
        if modality_of(self.media_type) is not self.modality:
            raise ValueError(
                f"modality {self.modality.value!r} inconsistent with media type {self.media_type!r}"
            )

    @classmethod
    def from_bytes(
        cls,
        data: bytes,
        media_type: str,
        origin: ResourceOrigin = ResourceOrigin.UPLOAD,
    ) -> "Resource":
        return cls(
            id=resource_id(data),
            modality=modality_of(media_type),
            media_type=media_type,
            byte_length=len(data),
            origin=origin,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "modality": self.modality.value,
            "media_type": self.media_type,
            "byte_length": self.byte_length,
            "origin": self.origin.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Resource":
        return cls(
            id=d["id"],
            modality=Modality(d["modality"]),
            media_type=d["media_type"],
            byte_length=d["byte_length"],
            origin=ResourceOrigin(d["origin"]),
        )


@dataclass(frozen=True)
class Query:
    """One turn's input: optional text plus an ordered list of attachments.

    A fully empty query is rejected here; this constructor is the boundary.
    """

    text: str | None = None
    resources: tuple[Resource, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "resources", tuple(self.resources))
        if self.text is not None and not self.text.strip():
            raise InvalidQuery("query text must be non-empty after trimming")
        if self.text is None and not self.resources:
            raise InvalidQuery("query needs text or at least one resource")

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "resources": [r.to_dict() for r in self.resources],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Query":
        return cls(
            text=d.get("text"),
            resources=tuple(Resource.from_dict(r) for r in d.get("resources", [])),
        )


@dataclass(frozen=True)
class RoutingTrace:
    """Per-turn audit record: scores, selection, fallback provenance, prompt id.

    ``selected`` is None when no model was chosen and the turn went straight
    to prompt assembly. ``notes`` records degradations (adapter or backend
    failures, missing resources) so no failure is silent.
    """

    scores: dict[str, float]
    selected: str | None
    prompt_id: str
    fallback_turn_index: int | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", dict(self.scores))
        object.__setattr__(self, "notes", tuple(self.notes))
        for model_id, p in self.scores.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"score for {model_id!r} outside [0, 1]: {p}")
        if self.fallback_turn_index is not None and self.fallback_turn_index < 1:
            raise ValueError("fallback_turn_index must be positive")

    def to_dict(self) -> dict[str, Any]:
        return {
            "scores": dict(self.scores),
            "selected": self.selected,
            "prompt_id": self.prompt_id,
            "fallback_turn_index": self.fallback_turn_index,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RoutingTrace":
        return cls(
            scores=dict(d["scores"]),
            selected=d["selected"],
            prompt_id=d["prompt_id"],
            fallback_turn_index=d.get("fallback_turn_index"),
            notes=tuple(d.get("notes", [])),
        )


@dataclass(frozen=True)
class Response:
    """One turn's output: text and/or model-produced resources, plus the trace."""

    text: str | None
    resources: tuple[Resource, ...]
    routing_trace: RoutingTrace

    def __post_init__(self) -> None:
        object.__setattr__(self, "resources", tuple(self.resources))
        if not self.text and not self.resources:
            raise ValueError("response needs text or at least one resource")

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "resources": [r.to_dict() for r in self.resources],
            "trace": self.routing_trace.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Response":
        return cls(
            text=d.get("text"),
            resources=tuple(Resource.from_dict(r) for r in d.get("resources", [])),
            routing_trace=RoutingTrace.from_dict(d["trace"]),
        )


@dataclass(frozen=True)
class TurnRecord:
    """One committed (query, response) round. Indices are 1-based."""

    index: int
    query: Query
    response: Response
    routed_model: str | None
    timestamp: datetime

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("turn index must be >= 1")
        if self.timestamp.tzinfo is None:
            raise ValueError("timestamp must be timezone-aware (UTC)")
        fallback = self.response.routing_trace.fallback_turn_index
        if fallback is not None and fallback >= self.index:
            raise ValueError("fallback_turn_index must reference an earlier turn")

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "query": self.query.to_dict(),
            "response": self.response.to_dict(),
            "routed_model": self.routed_model,
            "timestamp": self.timestamp.isoformat(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TurnRecord":
        return cls(
            index=d["index"],
            query=Query.from_dict(d["query"]),
            response=Response.from_dict(d["response"]),
            routed_model=d.get("routed_model"),
            timestamp=datetime.fromisoformat(d["timestamp"]),
        )


@dataclass(frozen=True)
class DialogueHistory:
    """Ordered turns of one session; indices are consecutive starting at 1."""

    session_id: str
    turns: tuple[TurnRecord, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "turns", tuple(self.turns))
        for position, turn in enumerate(self.turns, start=1):
            if turn.index != position:
                raise ValueError(
                    f"turn indices must be consecutive from 1; got {turn.index} at position {position}"
                )

    @property
    def next_index(self) -> int:
        return len(self.turns) + 1

    def with_turn(self, turn: TurnRecord) -> "DialogueHistory":
        if turn.index != self.next_index:
            raise ValueError(f"expected turn index {self.next_index}, got {turn.index}")
        return DialogueHistory(self.session_id, self.turns + (turn,))

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "turns": [t.to_dict() for t in self.turns],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DialogueHistory":
        return cls(
            session_id=d["session_id"],
            turns=tuple(TurnRecord.from_dict(t) for t in d.get("turns", [])),
        )


def canonical_json(obj: Any, indent: int | None = None) -> str:
    """Stable JSON rendering (sorted keys) used for golden files and hashing."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=indent)


def history_to_json(history: DialogueHistory) -> str:
    return canonical_json(history.to_dict(), indent=2)


def history_from_json(text: str) -> DialogueHistory:
    return DialogueHistory.from_dict(json.loads(text))


def modalities_of(resources: Iterable[Resource]) -> set[Modality]:
    return {r.modality for r in resources}
