"""Task-model ensemble: descriptors, registration order, resource resolution, stage runner.

The registry holds the configured adapters in registration order (the routing
tie-break). Resource resolution prefers the current query's compatible
attachments and otherwise borrows the compatible attachments of the most
recent earlier turn, never merging across turns.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, Iterator

from .domain import DialogueHistory, Modality, Query, Resource
from .errors import DuplicateModelId, UnknownModel
from .intent import RoutingSignal

logger = logging.getLogger(__name__)

DEFAULT_ADAPTER_TIMEOUT = 10.0

LoadBytes = Callable[[str], bytes]
StoreBytes = Callable[[bytes, str], Resource]


@dataclass(frozen=True)
class ModelDescriptor:
    """One registered task-model adapter: identity, modalities, routing signal, binding."""

    id: str
    display_name: str
    accepted_modalities: frozenset[Modality]
    routing_signal: RoutingSignal
    endpoint: str
    timeout: float = DEFAULT_ADAPTER_TIMEOUT

    def __post_init__(self) -> None:
        object.__setattr__(self, "accepted_modalities", frozenset(self.accepted_modalities))
        if not self.id:
            raise ValueError("model id must be non-empty")
        if not self.accepted_modalities:
            raise ValueError("accepted_modalities must be non-empty")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @property
    def requires_non_text_input(self) -> bool:
        """True when the model cannot run on query text alone."""
        return Modality.TEXT not in self.accepted_modalities


class MfmKind(Enum):
    TEXT_RESULT = "text_result"
    RESOURCE_RESULT = "resource_result"
    EMPTY = "empty"


@dataclass(frozen=True)
class MfmOutput:
    """Result of the task-model stage: text, produced resources, or nothing.

    ``source_model`` is None exactly when the stage was skipped because no
    model was selected; a selected model that produced nothing (or failed)
    still appears as the source.
    """

    kind: MfmKind
    text: str | None = None
    resources: tuple[Resource, ...] = ()
    source_model: str | None = None
    fallback_turn_index: int | None = None
    note: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "resources", tuple(self.resources))
        if self.kind is MfmKind.TEXT_RESULT and not self.text:
            raise ValueError("text result requires non-empty text")
        if self.kind is MfmKind.RESOURCE_RESULT and not self.resources:
            raise ValueError("resource result requires at least one resource")
        if self.kind is MfmKind.EMPTY and (self.text or self.resources):
            raise ValueError("empty output cannot carry text or resources")
        if self.kind is not MfmKind.RESOURCE_RESULT and self.resources:
            raise ValueError("only resource results carry resources")

    @classmethod
    def empty(cls, source_model: str | None = None, note: str | None = None) -> "MfmOutput":
        return cls(kind=MfmKind.EMPTY, source_model=source_model, note=note)

    @classmethod
    def from_text(cls, text: str, source_model: str) -> "MfmOutput":
        return cls(kind=MfmKind.TEXT_RESULT, text=text, source_model=source_model)

    @classmethod
    def from_resources(cls, resources: Iterable[Resource], source_model: str) -> "MfmOutput":
        return cls(
            kind=MfmKind.RESOURCE_RESULT,
            resources=tuple(resources),
            source_model=source_model,
        )


class ModelRegistry:
    """Ordered ensemble of model descriptors; iteration follows registration order."""

    def __init__(self, descriptors: Iterable[ModelDescriptor] = ()) -> None:
        self._by_id: dict[str, ModelDescriptor] = {}
        for descriptor in descriptors:
            self.register(descriptor)

    def register(self, descriptor: ModelDescriptor) -> None:
        if descriptor.id in self._by_id:
            raise DuplicateModelId(f"model id already registered: {descriptor.id!r}")
        self._by_id[descriptor.id] = descriptor

    def get(self, model_id: str) -> ModelDescriptor:
        try:
            return self._by_id[model_id]
        except KeyError:
            raise UnknownModel(f"no registered model with id {model_id!r}") from None

    def ids(self) -> list[str]:
        return list(self._by_id)

    def __contains__(self, model_id: object) -> bool:
        return model_id in self._by_id

    def __iter__(self) -> Iterator[ModelDescriptor]:
        return iter(self._by_id.values())

    def __len__(self) -> int:
        return len(self._by_id)


def resolve_resources(
    query: Query,
    history: DialogueHistory,
    accepted: Iterable[Modality],
) -> tuple[tuple[Resource, ...], int | None]:
    """Pick the resources to dispatch, borrowing from history when needed.

    Returns (resources, fallback_turn_index). The current query's compatible
    resources win outright; otherwise the most recent earlier turn with any
    compatible query resources contributes all of them, and its index is
    reported. An empty result with no index is a valid outcome.
    """
    accepted_set = frozenset(accepted)
    if not accepted_set:
        raise ValueError("accepted modalities must be non-empty")

    current = tuple(r for r in query.resources if r.modality in accepted_set)
    if current:
        return current, None

    for turn in reversed(history.turns):
        borrowed = tuple(r for r in turn.query.resources if r.modality in accepted_set)
        if borrowed:
            return borrowed, turn.index
    return (), None


def run_mfm_stage(
    selected: str | None,
    query: Query,
    history: DialogueHistory,
    registry: ModelRegistry,
    *,
    load_bytes: LoadBytes | None = None,
    store_bytes: StoreBytes | None = None,
) -> MfmOutput:
    """Run the selected task model for this turn, or produce an empty output.

    With no selection the stage is a no-op. With a selection, resources are
    resolved (history fallback included); a model that needs non-text input
    but found none degrades to an empty output with a note instead of failing.
    Adapter errors propagate for the orchestrator to handle.
    """
    if selected is None:
        return MfmOutput.empty()

    descriptor = registry.get(selected)
    resources, fallback_index = resolve_resources(query, history, descriptor.accepted_modalities)
    if not resources and descriptor.requires_non_text_input:
        logger.info("model %s selected but no compatible resource found", descriptor.id)
        return MfmOutput.empty(source_model=descriptor.id, note="no compatible resource")

    from .adapters import dispatch  # deferred: adapters imports this module's types

    output = dispatch(
        descriptor,
        resources,
        query.text,
        load_bytes=load_bytes,
        store_bytes=store_bytes,
    )
    return replace(output, fallback_turn_index=fallback_index)
