from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from stone_needle.domain import (
    DialogueHistory,
    Modality,
    Query,
    Resource,
    Response,
    RoutingTrace,
    TurnRecord,
)
from stone_needle.intent import IntentConfig, RoutingSignal
from stone_needle.knowledge import EntityCategory, EntityRecord, KnowledgeBase
from stone_needle.registry import ModelDescriptor, ModelRegistry

T0 = datetime(2024, 5, 1, 12, 0, 0, tzinfo=timezone.utc)

_MEDIA_TYPE_FOR = {
    Modality.TEXT: "text/plain",
    Modality.IMAGE: "image/png",
    Modality.VIDEO: "video/mp4",
    Modality.AUDIO: "audio/wav",
}


def make_resource(modality: Modality, tag: str = "a") -> Resource:
    data = f"{modality.value}:{tag}".encode("utf-8")
    return Resource.from_bytes(data, _MEDIA_TYPE_FOR[modality])


def make_turn(index: int, query: Query, response_text: str = "ok") -> TurnRecord:
    trace = RoutingTrace(scores={}, selected=None, prompt_id=f"p{index}")
    response = Response(text=response_text, resources=(), routing_trace=trace)
    return TurnRecord(
        index=index,
        query=query,
        response=response,
        routed_model=None,
        timestamp=T0 + timedelta(minutes=index),
    )


def make_history(queries: list[Query], session_id: str = "s") -> DialogueHistory:
    turns = tuple(make_turn(i, q) for i, q in enumerate(queries, start=1))
    return DialogueHistory(session_id, turns)


@pytest.fixture
def segmenter_descriptor() -> ModelDescriptor:
    return ModelDescriptor(
        id="segmenter",
        display_name="Image Segmenter",
        accepted_modalities=frozenset({Modality.IMAGE}),
        routing_signal=RoutingSignal(
            keywords=("segment",), required_modalities=frozenset({Modality.IMAGE})
        ),
        endpoint="mock://segmenter",
    )


@pytest.fixture
def transcriber_descriptor() -> ModelDescriptor:
    return ModelDescriptor(
        id="transcriber",
        display_name="Speech Transcriber",
        accepted_modalities=frozenset({Modality.AUDIO}),
        routing_signal=RoutingSignal(
            keywords=("transcribe",), required_modalities=frozenset({Modality.AUDIO})
        ),
        endpoint="mock://transcriber",
    )


@pytest.fixture
def two_model_registry(segmenter_descriptor, transcriber_descriptor) -> ModelRegistry:
    return ModelRegistry([segmenter_descriptor, transcriber_descriptor])


@pytest.fixture
def intent_config() -> IntentConfig:
    return IntentConfig(threshold=0.25, history_window=3)


@pytest.fixture
def kb_small() -> KnowledgeBase:
    return KnowledgeBase.build(
        [
            EntityRecord(
                id="d-hypertension",
                canonical_name="Hypertension",
                category=EntityCategory.DISEASE,
                aliases=("high blood pressure", "htn"),
                attributes={"icd10": "I10", "risk": "cardiovascular"},
            ),
            EntityRecord(
                id="s-chest-pain",
                canonical_name="Chest pain",
                category=EntityCategory.SYMPTOM,
                aliases=("chest pain", "thoracic pain"),
                attributes={"triage": "urgent"},
            ),
            EntityRecord(
                id="i-ct-scan",
                canonical_name="CT scan",
                category=EntityCategory.INSPECTION,
                aliases=("ct scan", "scan", "computed tomography"),
                attributes={"kind": "imaging"},
            ),
        ]
    )
