"""Multimodal dialogue orchestration gateway.

Per turn: intent analysis over text and attachments, dispatch to a selected
task-model adapter (or none), resource fallback from dialogue history,
knowledge-annotated prompt assembly, and a pluggable generation backend.
"""

__version__ = "0.1.0"

from .domain import (
    DialogueHistory,
    Modality,
    Query,
    Resource,
    ResourceOrigin,
    Response,
    RoutingTrace,
    TurnRecord,
    modality_of,
    resource_id,
)
from .intent import IntentConfig, RoutingSignal, ScoreVector, score_models, select_model
from .knowledge import KnowledgeBase, annotate_entities, load_knowledge_base
from .mlm import MlmBackend, generate
from .orchestrator import TurnDeps, create_session, get_transcript, run_turn, store_resource
from .prompt import AssembledPrompt, assemble_prompt
from .registry import (
    MfmKind,
    MfmOutput,
    ModelDescriptor,
    ModelRegistry,
    resolve_resources,
    run_mfm_stage,
)
from .store import Session, SessionStore

__all__ = [
    "AssembledPrompt",
    "DialogueHistory",
    "IntentConfig",
    "KnowledgeBase",
    "MfmKind",
    "MfmOutput",
    "MlmBackend",
    "Modality",
    "ModelDescriptor",
    "ModelRegistry",
    "Query",
    "Resource",
    "ResourceOrigin",
    "Response",
    "RoutingSignal",
    "RoutingTrace",
    "ScoreVector",
    "Session",
    "SessionStore",
    "TurnDeps",
    "TurnRecord",
    "annotate_entities",
    "assemble_prompt",
    "create_session",
    "generate",
    "get_transcript",
    "load_knowledge_base",
    "modality_of",
    "resource_id",
    "resolve_resources",
    "run_mfm_stage",
    "run_turn",
    "score_models",
    "select_model",
    "store_resource",
]
