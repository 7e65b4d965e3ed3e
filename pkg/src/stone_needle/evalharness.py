"""Routing evaluation: labeled fixtures -> confusion matrix -> standard metrics.

Evaluates the routing decision only (the one fully in-repo decision point):
each fixture case is scored and selected exactly as a live turn would be, and
the predicted label is compared with the expected one. NONE is the label for
"no model selected".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import timezone, datetime
from pathlib import Path
from typing import Any

from .domain import (
    DialogueHistory,
    Modality,
    Query,
    Resource,
    Response,
    RoutingTrace,
    TurnRecord,
)
from .errors import EmptyMatrix, FixtureParseError, UnknownLabel
from .intent import IntentConfig, score_models, select_model
from .registry import ModelRegistry

NONE_LABEL = "NONE"

_FIXTURE_TIMESTAMP = datetime(2000, 1, 1, tzinfo=timezone.utc)


def _stub_resource(modality: Modality) -> Resource:
    # Scoring only inspects modality, so one canonical stub per modality is enough.
    data = f"fixture:{modality.value}".encode("utf-8")
    return Resource.from_bytes(data, f"{modality.value}/fixture")


def _stub_query(entry: Any, context: str) -> Query:
    if not isinstance(entry, dict):
        raise FixtureParseError(f"{context}: query must be an object")
    text = entry.get("text")
    modalities = entry.get("modalities", [])
    if not isinstance(modalities, list):
        raise FixtureParseError(f"{context}: modalities must be a list")
    try:
        resources = tuple(_stub_resource(Modality(m)) for m in modalities)
        return Query(text=text, resources=resources)
    except ValueError as exc:
        raise FixtureParseError(f"{context}: {exc}") from exc


def _stub_history(entries: Any, context: str) -> DialogueHistory:
    if not isinstance(entries, list):
        raise FixtureParseError(f"{context}: history must be a list")
    turns = []
    for i, entry in enumerate(entries, start=1):
        query = _stub_query(entry, f"{context}.history[{i - 1}]")
        trace = RoutingTrace(scores={}, selected=None, prompt_id="fixture")
        response = Response(text="ok", resources=(), routing_trace=trace)
        turns.append(
            TurnRecord(
                index=i,
                query=query,
                response=response,
                routed_model=None,
                timestamp=_FIXTURE_TIMESTAMP,
            )
        )
    return DialogueHistory("fixture", tuple(turns))


@dataclass(frozen=True)
class RoutingCase:
    """One labeled routing example."""

    query: Query
    history: DialogueHistory
    expected: str


@dataclass(frozen=True)
class RoutingFixture:
    cases: tuple[RoutingCase, ...]


def load_fixture(path: str | Path, registry: ModelRegistry) -> RoutingFixture:
    """Load a JSON fixture: a list of {query, history, expected} cases.

    Raises:
        FixtureParseError: unreadable or malformed file.
        UnknownLabel: an expected label outside registry ids + NONE.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FixtureParseError(f"cannot read fixture {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FixtureParseError(f"fixture is not valid JSON: {exc}") from exc
    if not isinstance(doc, list) or not doc:
        raise FixtureParseError("fixture must be a non-empty JSON list of cases")

    valid = set(registry.ids()) | {NONE_LABEL}
    cases = []
    for i, entry in enumerate(doc):
        context = f"case[{i}]"
        if not isinstance(entry, dict):
            raise FixtureParseError(f"{context}: must be an object")
        expected = entry.get("expected")
        if expected is None:
            expected = NONE_LABEL
        if expected not in valid:
            raise UnknownLabel(f"{context}: expected label {expected!r} not in {sorted(valid)}")
        cases.append(
            RoutingCase(
                query=_stub_query(entry.get("query"), context),
                history=_stub_history(entry.get("history", []), context),
                expected=expected,
            )
        )
    return RoutingFixture(cases=tuple(cases))


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square counts matrix; rows are expected labels, columns predicted."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "counts", tuple(tuple(row) for row in self.counts))
        n = len(self.labels)
        if len(self.counts) != n or any(len(row) != n for row in self.counts):
            raise ValueError("counts must be square and match the label count")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(c for row in self.counts for c in row)

    def to_dict(self) -> dict[str, Any]:
        return {"labels": list(self.labels), "counts": [list(row) for row in self.counts]}


def run_routing_eval(
    fixture: RoutingFixture,
    registry: ModelRegistry,
    intent_config: IntentConfig,
) -> ConfusionMatrix:
    """Run every case through scoring + selection and tally the outcomes."""
    labels = tuple(registry.ids()) + (NONE_LABEL,)
    position = {label: i for i, label in enumerate(labels)}
    counts = [[0] * len(labels) for _ in labels]
    for case in fixture.cases:
        scores = score_models(case.query, case.history, registry, intent_config)
        selected = select_model(scores, intent_config.threshold)
        predicted = selected if selected is not None else NONE_LABEL
        counts[position[case.expected]][position[predicted]] += 1
    return ConfusionMatrix(labels=labels, counts=tuple(tuple(row) for row in counts))


@dataclass(frozen=True)
class LabelMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    """Accuracy plus per-label and macro precision/recall/F1."""

    accuracy: float
    per_label: dict[str, LabelMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "per_label": {
                label: {"precision": m.precision, "recall": m.recall, "f1": m.f1}
                for label, m in self.per_label.items()
            },
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def compute_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Standard multiclass metrics with explicit zero-denominator conventions.

    precision/recall/F1 are 0 when their denominators are 0; macro averages
    run over labels with a nonzero row sum (labels that actually occur).

    Raises:
        EmptyMatrix: no cases tallied.
    """
    total = cm.total
    if total == 0:
        raise EmptyMatrix("confusion matrix has no cases")

    n = len(cm.labels)
    diagonal = sum(cm.counts[i][i] for i in range(n))
    accuracy = diagonal / total

    per_label: dict[str, LabelMetrics] = {}
    occurring: list[LabelMetrics] = []
    for i, label in enumerate(cm.labels):
        row_sum = sum(cm.counts[i])
        col_sum = sum(cm.counts[r][i] for r in range(n))
        tp = cm.counts[i][i]
        precision = tp / col_sum if col_sum > 0 else 0.0
        recall = tp / row_sum if row_sum > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        metrics = LabelMetrics(precision=precision, recall=recall, f1=f1)
        per_label[label] = metrics
        if row_sum > 0:
            occurring.append(metrics)

    count = len(occurring)
    macro_precision = sum(m.precision for m in occurring) / count if count else 0.0
    macro_recall = sum(m.recall for m in occurring) / count if count else 0.0
    macro_f1 = sum(m.f1 for m in occurring) / count if count else 0.0
    return MetricsReport(
        accuracy=accuracy,
        per_label=per_label,
        macro_precision=macro_precision,
        macro_recall=macro_recall,
        macro_f1=macro_f1,
    )


def render_table(cm: ConfusionMatrix, report: MetricsReport) -> str:
    """Aligned plain-text report: per-label rows, then the aggregates."""
    width = max(12, max(len(label) for label in cm.labels) + 2)
    lines = [f"{'label':<{width}} {'precision':>9} {'recall':>9} {'f1':>9}"]
    for label in cm.labels:
        m = report.per_label[label]
        lines.append(f"{label:<{width}} {m.precision:>9.4f} {m.recall:>9.4f} {m.f1:>9.4f}")
    lines.append("")
    lines.append(f"{'accuracy':<{width}} {report.accuracy:>9.4f}")
    lines.append(f"{'macro_precision':<{width}} {report.macro_precision:>9.4f}")
    lines.append(f"{'macro_recall':<{width}} {report.macro_recall:>9.4f}")
    lines.append(f"{'macro_f1':<{width}} {report.macro_f1:>9.4f}")
    lines.append("")
    lines.append(f"cases: {cm.total}")
    return "\n".join(lines)
