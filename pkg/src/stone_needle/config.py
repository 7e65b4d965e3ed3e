"""Service configuration: one JSON file describing every deployment knob.

Relative paths in the file resolve against the file's own directory, so a
config directory can be moved as a unit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .domain import Modality
from .errors import ConfigError
from .intent import IntentConfig, RoutingSignal
from .knowledge import KnowledgeBase, load_knowledge_base
from .mlm import DEFAULT_SYSTEM_PROMPT, MlmBackend, MlmKind
from .registry import DEFAULT_ADAPTER_TIMEOUT, ModelDescriptor, ModelRegistry

DEFAULT_LISTEN = "127.0.0.1:8080"
DEFAULT_PROMPT_BUDGET = 2048


def _parse_modalities(values: Any, context: str) -> frozenset[Modality]:
    if not isinstance(values, list):
        raise ConfigError(f"{context}: modalities must be a list of strings")
    try:
        return frozenset(Modality(v) for v in values)
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def _parse_model(entry: Any, position: int) -> ModelDescriptor:
    context = f"models[{position}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{context}: must be an object")
    routing = entry.get("routing", {})
    if not isinstance(routing, dict):
        raise ConfigError(f"{context}: routing must be an object")
    try:
        signal = RoutingSignal(
            keywords=tuple(routing.get("keywords", ())),
            required_modalities=_parse_modalities(
                routing.get("required_modalities", []), context
            ),
            weight_text=float(routing.get("weight_text", 1.0)),
            weight_modality=float(routing.get("weight_modality", 1.0)),
        )
        return ModelDescriptor(
            id=entry["id"],
            display_name=entry.get("display_name", entry["id"]),
            accepted_modalities=_parse_modalities(entry["accepted_modalities"], context),
            routing_signal=signal,
            endpoint=entry["endpoint"],
            timeout=float(entry.get("timeout", DEFAULT_ADAPTER_TIMEOUT)),
        )
    except KeyError as exc:
        raise ConfigError(f"{context}: missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{context}: {exc}") from exc


def _parse_mlm(entry: Any) -> MlmBackend:
    if not isinstance(entry, dict):
        raise ConfigError("mlm: must be an object")
    kind = entry.get("kind", "mock")
    try:
        if kind == "mock":
            return MlmBackend(
                kind=MlmKind.MOCK_TEMPLATED,
                system_prompt=entry.get("system_prompt", DEFAULT_SYSTEM_PROMPT),
            )
        if kind == "remote":
            return MlmBackend(
                kind=MlmKind.REMOTE_CHAT,
                endpoint=entry["endpoint"],
                model_name=entry["model_name"],
                timeout=float(entry.get("timeout", 30.0)),
                max_retries=int(entry.get("max_retries", 2)),
                temperature=float(entry.get("temperature", 0.0)),
                system_prompt=entry.get("system_prompt", DEFAULT_SYSTEM_PROMPT),
            )
    except KeyError as exc:
        raise ConfigError(f"mlm: missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"mlm: {exc}") from exc
    raise ConfigError(f'mlm: kind must be "mock" or "remote", got {kind!r}')


@dataclass(frozen=True)
class ServiceConfig:
    """Validated deployment configuration."""

    listen_host: str
    listen_port: int
    data_dir: Path
    knowledge_base_path: Path | None
    prompt_budget: int
    intent: IntentConfig
    models: tuple[ModelDescriptor, ...]
    mlm: MlmBackend
    ui_dir: Path | None = None

    def build_registry(self) -> ModelRegistry:
        return ModelRegistry(self.models)

    def load_kb(self) -> KnowledgeBase:
        if self.knowledge_base_path is None:
            return KnowledgeBase.empty()
        return load_knowledge_base(self.knowledge_base_path)


def load_config(path: str | Path) -> ServiceConfig:
    """Parse and validate the JSON service configuration.

    Raises:
        ConfigError: unreadable file, bad JSON, or any invalid field.
    """
    config_path = Path(path)
    try:
        doc = json.loads(config_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")

    base = config_path.resolve().parent

    def resolve(p: str) -> Path:
        candidate = Path(p)
        return candidate if candidate.is_absolute() else base / candidate

    listen = doc.get("listen", DEFAULT_LISTEN)
    host, _, port_text = str(listen).rpartition(":")
    if not host or not port_text.isdigit():
        raise ConfigError(f'listen must look like "host:port", got {listen!r}')

    models_doc = doc.get("models", [])
    if not isinstance(models_doc, list):
        raise ConfigError("models must be a list")
    models = tuple(_parse_model(entry, i) for i, entry in enumerate(models_doc))
    ids = [m.id for m in models]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"model ids must be unique, got {ids}")

    intent_doc = doc.get("intent", {})
    if not isinstance(intent_doc, dict):
        raise ConfigError("intent must be an object")
    try:
        intent = IntentConfig(
            threshold=float(intent_doc.get("threshold", IntentConfig.threshold)),
            history_window=int(intent_doc.get("history_window", IntentConfig.history_window)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"intent: {exc}") from exc

    budget = doc.get("prompt_budget", DEFAULT_PROMPT_BUDGET)
    if not isinstance(budget, int) or budget <= 0:
        raise ConfigError(f"prompt_budget must be a positive integer, got {budget!r}")

    if "data_dir" not in doc:
        raise ConfigError("data_dir is required")

    kb_path = doc.get("knowledge_base_path")
    ui_dir = doc.get("ui_dir")

    return ServiceConfig(
        listen_host=host,
        listen_port=int(port_text),
        data_dir=resolve(str(doc["data_dir"])),
        knowledge_base_path=resolve(str(kb_path)) if kb_path else None,
        prompt_budget=budget,
        intent=intent,
        models=models,
        mlm=_parse_mlm(doc.get("mlm", {"kind": "mock"})),
        ui_dir=resolve(str(ui_dir)) if ui_dir else None,
    )
