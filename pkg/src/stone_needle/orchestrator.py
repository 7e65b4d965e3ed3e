"""The per-turn pipeline: intent -> task-model stage -> prompt -> generation -> commit.

Adapter and backend failures never fail a turn; they degrade it and leave a
note in the routing trace. A turn is committed (appended and fsynced) before
the response is returned, so history never contains a query without its
response.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Callable

from .domain import (
    DialogueHistory,
    Query,
    Resource,
    ResourceOrigin,
    Response,
    RoutingTrace,
    TurnRecord,
    utc_now,
)
from .errors import AdapterError, MlmError
from .intent import IntentConfig, score_models, select_model
from .knowledge import KnowledgeBase
from .mlm import MlmBackend, generate
from .prompt import assemble_prompt
from .registry import MfmKind, MfmOutput, ModelRegistry, run_mfm_stage
from .store import Session, SessionStore

logger = logging.getLogger(__name__)

DEGRADED_RESPONSE_TEXT = "[assistant unavailable]"

Clock = Callable[[], datetime]


@dataclass
class TurnDeps:
    """Everything run_turn needs besides the session and the query."""

    registry: ModelRegistry
    kb: KnowledgeBase
    intent_config: IntentConfig
    mlm_backend: MlmBackend
    prompt_budget: int
    store: SessionStore
    clock: Clock = field(default=utc_now)


def create_session(store: SessionStore, session_id: str | None = None) -> Session:
    """Create and persist a fresh empty session."""
    return store.create_session(session_id)


def store_resource(store: SessionStore, data: bytes, media_type: str) -> Resource:
    """Store uploaded bytes content-addressed; idempotent per payload."""
    return store.put_blob(data, media_type, origin=ResourceOrigin.UPLOAD)


def get_transcript(store: SessionStore, session_id: str) -> DialogueHistory:
    """Full ordered history of a session, routing traces included."""
    return store.load_session(session_id).history


def run_turn(session: Session, query: Query, deps: TurnDeps) -> tuple[Response, Session]:
    """Execute one dialogue turn and commit it.

    Pipeline: score and select a model; run the task-model stage (degrading
    on adapter errors); assemble the prompt; generate the response text
    (degrading on backend errors); append the committed turn to the session
    log before returning.

    Raises:
        InvalidQuery: propagated from query construction at the boundary.
        PersistenceError: the turn is not committed; history is unchanged.
    """
    scores = score_models(query, session.history, deps.registry, deps.intent_config)
    selected = select_model(scores, deps.intent_config.threshold)

    notes: list[str] = []
    try:
        mfm_output = run_mfm_stage(
            selected,
            query,
            session.history,
            deps.registry,
            load_bytes=deps.store.load_blob_bytes,
            store_bytes=lambda data, media_type: deps.store.put_blob(
                data, media_type, origin=ResourceOrigin.MODEL_PRODUCED
            ),
        )
    except AdapterError as exc:
        logger.warning("adapter failure for model %s: %s", selected, exc)
        mfm_output = MfmOutput.empty(
            source_model=selected,
            note=f"adapter error ({exc.__class__.__name__}): {exc}",
        )
    if mfm_output.note:
        notes.append(mfm_output.note)

    prompt = assemble_prompt(mfm_output, query, session.history, deps.kb, deps.prompt_budget)

    try:
        text = generate(deps.mlm_backend, prompt)
    except MlmError as exc:
        logger.warning("generation failure: %s", exc)
        text = DEGRADED_RESPONSE_TEXT
        notes.append(f"mlm error ({exc.__class__.__name__}): {exc}")

    trace = RoutingTrace(
        scores=scores.normalized,
        selected=selected,
        prompt_id=prompt.prompt_id,
        fallback_turn_index=mfm_output.fallback_turn_index,
        notes=tuple(notes),
    )
    produced = mfm_output.resources if mfm_output.kind is MfmKind.RESOURCE_RESULT else ()
    response = Response(text=text, resources=produced, routing_trace=trace)

    turn = TurnRecord(
        index=session.history.next_index,
        query=query,
        response=response,
        routed_model=selected,
        timestamp=deps.clock(),
    )
    deps.store.append_turn(session.session_id, turn)

    touched = {r.id for r in query.resources} | {r.id for r in produced}
    updated = replace(
        session,
        history=session.history.with_turn(turn),
        resource_ids=session.resource_ids | touched,
    )
    return response, updated
