"""Crash-safe session persistence and the content-addressed blob store.

Each session is one append-only log at ``data_dir/sessions/<id>.log``:
length-prefixed (4-byte big-endian) UTF-8 JSON records, one per committed
event, fsynced before the write is acknowledged. Readers stop cleanly at a
torn tail, so a crash mid-append never surfaces a partial turn.

Blobs live at ``data_dir/blobs/<first2>/<hash>`` with a ``<hash>.json``
metadata sidecar; writes are idempotent for identical bytes.

Writes within one session must be serialized by the caller (the service layer
holds a per-session lock); reads are safe concurrently.
"""

from __future__ import annotations

import json
import logging
import os
import struct
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Iterator

from .domain import (
    DialogueHistory,
    Resource,
    ResourceOrigin,
    TurnRecord,
    modality_of,
    resource_id,
    utc_now,
)
from .errors import (
    EmptyPayload,
    PersistenceError,
    ResourceNotFound,
    SessionNotFound,
)

logger = logging.getLogger(__name__)

_LENGTH_PREFIX = struct.Struct(">I")


@dataclass(frozen=True)
class Session:
    """One dialogue session: identity, committed history, referenced resources."""

    session_id: str
    history: DialogueHistory
    created_at: datetime
    resource_ids: frozenset[str] = frozenset()


def _encode_record(record: dict[str, Any]) -> bytes:
    payload = json.dumps(record, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    return _LENGTH_PREFIX.pack(len(payload)) + payload


def _iter_records(path: Path) -> Iterator[dict[str, Any]]:
    """Yield committed records; a truncated tail ends iteration silently."""
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise PersistenceError(f"cannot read session log {path}: {exc}") from exc
    offset = 0
    total = len(data)
    while offset + _LENGTH_PREFIX.size <= total:
        (length,) = _LENGTH_PREFIX.unpack_from(data, offset)
        start = offset + _LENGTH_PREFIX.size
        end = start + length
        if end > total:
            logger.warning("session log %s has a torn tail record; ignoring it", path.name)
            return
        try:
            yield json.loads(data[start:end].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise PersistenceError(f"corrupt record in session log {path}: {exc}") from exc
        offset = end


class SessionStore:
    """File-backed store for sessions and blobs under one data directory."""

    def __init__(self, data_dir: str | Path) -> None:
        self.data_dir = Path(data_dir)
        self.sessions_dir = self.data_dir / "sessions"
        self.blobs_dir = self.data_dir / "blobs"
        try:
            self.sessions_dir.mkdir(parents=True, exist_ok=True)
            self.blobs_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise PersistenceError(f"cannot prepare data dir {self.data_dir}: {exc}") from exc
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # --- locking ---

    def lock_for(self, session_id: str) -> threading.Lock:
        """Per-session mutex; the service layer holds it across a whole turn."""
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    # --- session log ---

    def _log_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.log"

    def _append(self, session_id: str, record: dict[str, Any]) -> None:
        path = self._log_path(session_id)
        frame = _encode_record(record)
        try:
            with open(path, "ab") as fh:
                fh.write(frame)
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise PersistenceError(f"cannot append to session log {path}: {exc}") from exc

    def create_session(self, session_id: str | None = None) -> Session:
        sid = session_id or str(uuid.uuid4())
        path = self._log_path(sid)
        if path.exists():
            raise PersistenceError(f"session {sid!r} already exists")
        created_at = utc_now()
        self._append(sid, {
            "type": "session",
            "session_id": sid,
            "created_at": created_at.isoformat(),
        })
        return Session(session_id=sid, history=DialogueHistory(sid), created_at=created_at)

    def session_exists(self, session_id: str) -> bool:
        return self._log_path(session_id).exists()

    def load_session(self, session_id: str) -> Session:
        path = self._log_path(session_id)
        if not path.exists():
            raise SessionNotFound(f"no session with id {session_id!r}")

        created_at: datetime | None = None
        turns: list[TurnRecord] = []
        referenced: set[str] = set()
        for record in _iter_records(path):
            kind = record.get("type")
            if kind == "session":
                created_at = datetime.fromisoformat(record["created_at"])
            elif kind == "turn":
                turn = TurnRecord.from_dict(record["turn"])
                turns.append(turn)
                referenced.update(r.id for r in turn.query.resources)
                referenced.update(r.id for r in turn.response.resources)
            elif kind == "resource":
                referenced.add(record["id"])
            else:
                raise PersistenceError(f"unknown record type {kind!r} in {path}")
        if created_at is None:
            # The create record never committed; the session does not exist.
            raise SessionNotFound(f"session {session_id!r} has no committed create record")
        return Session(
            session_id=session_id,
            history=DialogueHistory(session_id, tuple(turns)),
            created_at=created_at,
            resource_ids=frozenset(referenced),
        )

    def append_turn(self, session_id: str, turn: TurnRecord) -> None:
        if not self.session_exists(session_id):
            raise SessionNotFound(f"no session with id {session_id!r}")
        self._append(session_id, {"type": "turn", "turn": turn.to_dict()})

    def record_resource(self, session_id: str, res_id: str) -> None:
        if not self.session_exists(session_id):
            raise SessionNotFound(f"no session with id {session_id!r}")
        self._append(session_id, {"type": "resource", "id": res_id})

    # --- blob store ---

    def _blob_path(self, res_id: str) -> Path:
        return self.blobs_dir / res_id[:2] / res_id

    def put_blob(
        self,
        data: bytes,
        media_type: str,
        origin: ResourceOrigin = ResourceOrigin.UPLOAD,
    ) -> Resource:
        """Store bytes content-addressed; idempotent for identical payloads."""
        if not data:
            raise EmptyPayload("cannot store an empty blob")
        resource = Resource(
            id=resource_id(data),
            modality=modality_of(media_type),
            media_type=media_type,
            byte_length=len(data),
            origin=origin,
        )
        path = self._blob_path(resource.id)
        meta_path = path.with_suffix(".json")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            if not path.exists():
                # Unique temp name: concurrent writers of the same blob must not collide.
                tmp = path.with_name(f"{path.name}.{uuid.uuid4().hex}.tmp")
                tmp.write_bytes(data)
                os.replace(tmp, path)
            if not meta_path.exists():
                meta_path.write_text(
                    json.dumps(resource.to_dict(), ensure_ascii=False), encoding="utf-8"
                )
        except OSError as exc:
            raise PersistenceError(f"cannot store blob {resource.id}: {exc}") from exc
        return resource

    def get_resource(self, res_id: str) -> Resource:
        meta_path = self._blob_path(res_id).with_suffix(".json")
        if not meta_path.exists():
            raise ResourceNotFound(f"no resource with id {res_id!r}")
        try:
            return Resource.from_dict(json.loads(meta_path.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            raise PersistenceError(f"corrupt blob metadata for {res_id}: {exc}") from exc

    def get_blob(self, res_id: str) -> tuple[bytes, Resource]:
        resource = self.get_resource(res_id)
        path = self._blob_path(res_id)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise ResourceNotFound(f"blob bytes missing for {res_id!r}: {exc}") from exc
        return data, resource

    def load_blob_bytes(self, res_id: str) -> bytes:
        return self.get_blob(res_id)[0]
