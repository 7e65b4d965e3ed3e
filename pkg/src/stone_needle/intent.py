"""Intent analysis: score every registered model for the current turn, pick one or none.

The scorer is deliberately deterministic and auditable: a keyword component
(fraction of a model's keyword phrases found in the recent dialogue text) plus
a modality-compatibility component, combined with per-model weights and
sum-normalized into per-model probabilities. Selection takes the maximal
probability when it clears a threshold; otherwise no model is chosen and the
turn proceeds straight to prompt assembly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping

from .domain import DialogueHistory, Modality, Query
from .errors import EmptyRegistry

if TYPE_CHECKING:
    from .registry import ModelDescriptor

_NORMALIZED_SUM_SLACK = 1e-9


@dataclass(frozen=True)
class RoutingSignal:
    """Declared routing evidence for one model.

    keywords are matched as case-insensitive substrings of the recent dialogue
    text; required_modalities must all be present among the turn's resources
    (or, for a resource-less turn, among recent historical query resources).
    """

    keywords: tuple[str, ...] = ()
    required_modalities: frozenset[Modality] = frozenset()
    weight_text: float = 1.0
    weight_modality: float = 1.0

    def __post_init__(self) -> None:
        normalized = tuple(" ".join(kw.split()).lower() for kw in self.keywords)
        if any(not kw for kw in normalized):
            raise ValueError("keyword phrases must be non-empty")
        object.__setattr__(self, "keywords", normalized)
        object.__setattr__(self, "required_modalities", frozenset(self.required_modalities))
        if self.weight_text < 0 or self.weight_modality < 0:
            raise ValueError("weights must be non-negative")
        if self.weight_text + self.weight_modality <= 0:
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class IntentConfig:
    """Tunables for scoring and selection."""

    threshold: float = 0.25
    history_window: int = 3

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be within [0, 1]")
        if self.history_window < 0:
            raise ValueError("history_window must be >= 0")


@dataclass(frozen=True)
class ScoreVector:
    """Raw and normalized per-model scores, keyed in registration order."""

    entries: dict[str, float]
    normalized: dict[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", dict(self.entries))
        object.__setattr__(self, "normalized", dict(self.normalized))
        if self.entries.keys() != self.normalized.keys():
            raise ValueError("entries and normalized must share the same model ids")
        if any(v < 0 for v in self.entries.values()):
            raise ValueError("raw scores must be non-negative")
        total = sum(self.normalized.values())
        if total > 1.0 + _NORMALIZED_SUM_SLACK:
            raise ValueError(f"normalized scores sum to {total} > 1")


def normalize_scores(raw: Mapping[str, float]) -> ScoreVector:
    """Sum-normalize raw scores; an all-zero vector normalizes to all zeros."""
    total = sum(raw.values())
    if total > 0:
        normalized = {model_id: score / total for model_id, score in raw.items()}
    else:
        normalized = {model_id: 0.0 for model_id in raw}
    return ScoreVector(entries=dict(raw), normalized=normalized)


def _window_turns(history: DialogueHistory, window: int):
    return history.turns[-window:] if window > 0 else ()


def score_models(
    query: Query,
    history: DialogueHistory,
    registry: Iterable["ModelDescriptor"],
    config: IntentConfig,
) -> ScoreVector:
    """Score every registered model's suitability for the current turn.

    Raw score per model = weight_text * (fraction of its keywords found as
    case-insensitive substrings of the current text plus the last
    ``history_window`` historical query texts) + weight_modality * 1 if every
    required modality is available (from the current query's resources, or
    from historical query resources in the window when the current query has
    none). Scores are then sum-normalized.

    Raises:
        EmptyRegistry: when the registry holds no models.
    """
    descriptors = list(registry)
    if not descriptors:
        raise EmptyRegistry("cannot score against an empty registry")

    window = _window_turns(history, config.history_window)
    corpus_parts = []
    if query.text:
        corpus_parts.append(query.text)
    for turn in window:
        if turn.query.text:
            corpus_parts.append(turn.query.text)
    # Newline joins keep keyword phrases from matching across part boundaries.
    corpus = "\n".join(corpus_parts).lower()

    if query.resources:
        present = {r.modality for r in query.resources}
    else:
        present = {r.modality for turn in window for r in turn.query.resources}

    raw: dict[str, float] = {}
    for descriptor in descriptors:
        signal = descriptor.routing_signal
        if signal.keywords:
            hits = sum(1 for kw in signal.keywords if kw in corpus)
            text_part = hits / len(signal.keywords)
        else:
            text_part = 0.0
        modality_part = (
            1.0
            if signal.required_modalities and signal.required_modalities <= present
            else 0.0
        )
        raw[descriptor.id] = signal.weight_text * text_part + signal.weight_modality * modality_part
    return normalize_scores(raw)


def select_model(scores: ScoreVector, threshold: float) -> str | None:
    """Pick the model with maximal normalized probability, or None below threshold.

    Ties break toward the earliest-registered model (the score vector keeps
    registration order).
    """
    best_id: str | None = None
    best_p = float("-inf")
    for model_id, p in scores.normalized.items():
        if p > best_p:
            best_id, best_p = model_id, p
    if best_id is None or best_p < threshold:
        return None
    return best_id
