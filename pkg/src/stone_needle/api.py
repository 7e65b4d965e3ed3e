"""HTTP gateway: sessions, uploads, turns, transcripts, blobs, health, static UI.

Turns within one session are serialized behind a per-session lock; different
sessions proceed concurrently. Session state is reloaded from the log on each
turn, so the response always reflects committed history only.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response as HttpResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import ServiceConfig
from .domain import Query, Response
from .errors import (
    EmptyPayload,
    InvalidQuery,
    PersistenceError,
    ResourceNotFound,
    SessionNotFound,
    StoneNeedleError,
    UnsupportedMediaType,
)
from .orchestrator import TurnDeps, run_turn
from .store import SessionStore

logger = logging.getLogger(__name__)


class TurnRequest(BaseModel):
    text: str | None = None
    resource_ids: list[str] = []


def _turn_response_body(response: Response) -> dict:
    trace = response.routing_trace
    return {
        "text": response.text,
        "resources": [
            {"resource_id": r.id, "media_type": r.media_type} for r in response.resources
        ],
        "trace": {
            "scores": dict(trace.scores),
            "selected": trace.selected,
            "fallback_turn_index": trace.fallback_turn_index,
        },
    }


def create_app(config: ServiceConfig, store: SessionStore | None = None) -> FastAPI:
    """Build the gateway application from a validated configuration."""
    store = store or SessionStore(config.data_dir)
    deps = TurnDeps(
        registry=config.build_registry(),
        kb=config.load_kb(),
        intent_config=config.intent,
        mlm_backend=config.mlm,
        prompt_budget=config.prompt_budget,
        store=store,
    )

    app = FastAPI(title="stone-needle gateway")

    @app.exception_handler(StoneNeedleError)
    async def _domain_error(request: Request, exc: StoneNeedleError):
        status = 500
        if isinstance(exc, SessionNotFound):
            status = 404
        elif isinstance(exc, ResourceNotFound):
            status = 404 if request.method == "GET" else 422
        elif isinstance(exc, (InvalidQuery, EmptyPayload)):
            status = 422
        elif isinstance(exc, UnsupportedMediaType):
            status = 415
        elif isinstance(exc, PersistenceError):
            status = 500
        if status == 500:
            logger.error("internal error on %s %s: %s", request.method, request.url.path, exc)
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/sessions", status_code=201)
    def create_session():
        session = store.create_session()
        return {"session_id": session.session_id}

    @app.post("/v1/sessions/{session_id}/resources", status_code=201)
    async def upload_resource(session_id: str, request: Request):
        if not store.session_exists(session_id):
            raise SessionNotFound(f"no session with id {session_id!r}")
        media_type = request.headers.get("content-type", "")
        data = await request.body()
        resource = store.put_blob(data, media_type)
        store.record_resource(session_id, resource.id)
        return {"resource_id": resource.id, "modality": resource.modality.value}

    @app.post("/v1/sessions/{session_id}/turns")
    def post_turn(session_id: str, body: TurnRequest):
        with store.lock_for(session_id):
            session = store.load_session(session_id)
            try:
                resources = tuple(store.get_resource(rid) for rid in body.resource_ids)
            except ResourceNotFound as exc:
                raise InvalidQuery(str(exc)) from exc
            query = Query(text=body.text, resources=resources)
            response, _ = run_turn(session, query, deps)
        return _turn_response_body(response)

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.load_session(session_id)
        return {
            "session_id": session.session_id,
            "created_at": session.created_at.isoformat(),
            "turns": [t.to_dict() for t in session.history.turns],
        }

    @app.get("/v1/resources/{res_id}")
    def get_resource(res_id: str):
        data, resource = store.get_blob(res_id)
        return HttpResponse(content=data, media_type=resource.media_type)

    if config.ui_dir is not None and config.ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
