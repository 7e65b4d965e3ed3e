"""Adapter bindings for task models: built-in mocks and the HTTP wire client.

Endpoints of the form ``mock://<name>`` select a deterministic built-in mock
(echo-describe, segmenter, transcriber, health-index, failing, slow); http(s)
endpoints speak the JSON wire protocol:

  request:  {"model_id": str, "text": str|null,
             "resources": [{"id": hex, "media_type": str, "bytes_b64": b64}]}
  response: {"kind": "text", "text": str}
         or {"kind": "resources", "resources": [{"media_type": str, "bytes_b64": b64}]}

Any non-200 status or non-conforming body is an AdapterProtocolError.
"""

from __future__ import annotations

import base64
import binascii
import logging
import time
from dataclasses import dataclass

import httpx

from .domain import Resource, ResourceOrigin, resource_id
from .errors import AdapterProtocolError, AdapterTimeout, AdapterUnavailable
from .registry import LoadBytes, MfmOutput, ModelDescriptor, StoreBytes

logger = logging.getLogger(__name__)

MOCK_SCHEME = "mock://"

# 1x1 transparent PNG, the fixed artifact produced by the segmenter mock.
SEGMENTER_PNG = base64.b64decode(
    "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJ"
    "AAAADUlEQVR42mNkYPhfDwAChwGA60e6kgAAAABJRU5ErkJggg=="
)


@dataclass(frozen=True)
class AdapterRequest:
    """What a mock adapter sees: the resolved resources and auxiliary text."""

    model_id: str
    text: str | None
    resources: tuple[Resource, ...]
    timeout: float


def _default_store_bytes(data: bytes, media_type: str) -> Resource:
    return Resource.from_bytes(data, media_type, origin=ResourceOrigin.MODEL_PRODUCED)


def _mock_echo_describe(request: AdapterRequest) -> tuple[str, object]:
    if request.resources:
        lines = [
            f"described {r.modality.value} {r.id} (width×height unknown)"
            for r in request.resources
        ]
        return "text", "; ".join(lines)
    if request.text:
        return "text", f"echo: {request.text}"
    return "text", "described nothing"


def _mock_segmenter(request: AdapterRequest) -> tuple[str, object]:
    return "resources", [(SEGMENTER_PNG, "image/png")]


def _mock_transcriber(request: AdapterRequest) -> tuple[str, object]:
    if not request.resources:
        return "text", "transcribed nothing"
    lines = [f"transcribed {r.modality.value} {r.id}" for r in request.resources]
    return "text", "; ".join(lines)


def _mock_health_index(request: AdapterRequest) -> tuple[str, object]:
    seed = "".join(r.id for r in request.resources) or (request.text or "")
    digest = resource_id(seed.encode("utf-8") or b"empty")
    value = int(digest[:4], 16) / 0xFFFF
    return "text", f"predicted health index {value:.3f}"


def _mock_failing(request: AdapterRequest) -> tuple[str, object]:
    raise AdapterUnavailable("mock adapter 'failing' always fails")


def _mock_slow(request: AdapterRequest) -> tuple[str, object]:
    time.sleep(request.timeout + 0.05)
    return "text", "slow reply"


_MOCKS = {
    "echo-describe": _mock_echo_describe,
    "segmenter": _mock_segmenter,
    "transcriber": _mock_transcriber,
    "health-index": _mock_health_index,
    "failing": _mock_failing,
    "slow": _mock_slow,
}

MOCK_NAMES = tuple(_MOCKS)


def _wrap_reply(
    kind: str,
    payload: object,
    descriptor: ModelDescriptor,
    store_bytes: StoreBytes,
) -> MfmOutput:
    if kind == "text":
        if not isinstance(payload, str) or not payload:
            raise AdapterProtocolError(f"adapter {descriptor.id!r} returned empty text")
        return MfmOutput.from_text(payload, source_model=descriptor.id)
    if kind == "resources":
        produced = [store_bytes(data, media_type) for data, media_type in payload]
        if not produced:
            raise AdapterProtocolError(f"adapter {descriptor.id!r} returned no resources")
        return MfmOutput.from_resources(produced, source_model=descriptor.id)
    raise AdapterProtocolError(f"adapter {descriptor.id!r} returned unknown kind {kind!r}")


def _dispatch_mock(
    name: str,
    descriptor: ModelDescriptor,
    request: AdapterRequest,
    store_bytes: StoreBytes,
) -> MfmOutput:
    mock = _MOCKS.get(name)
    if mock is None:
        raise AdapterUnavailable(f"unknown mock adapter {name!r}")
    started = time.monotonic()
    kind, payload = mock(request)
    elapsed = time.monotonic() - started
    if elapsed > descriptor.timeout:
        raise AdapterTimeout(
            f"mock adapter {name!r} took {elapsed:.3f}s, timeout {descriptor.timeout:.3f}s"
        )
    return _wrap_reply(kind, payload, descriptor, store_bytes)


def _decode_wire_resources(body: dict) -> list[tuple[bytes, str]]:
    items = body.get("resources")
    if not isinstance(items, list) or not items:
        raise AdapterProtocolError("resource reply carries no resources")
    produced = []
    for item in items:
        if not isinstance(item, dict):
            raise AdapterProtocolError("resource entry is not an object")
        media_type = item.get("media_type")
        encoded = item.get("bytes_b64")
        if not isinstance(media_type, str) or not isinstance(encoded, str):
            raise AdapterProtocolError("resource entry missing media_type or bytes_b64")
        try:
            data = base64.b64decode(encoded, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise AdapterProtocolError(f"invalid base64 payload: {exc}") from exc
        if not data:
            raise AdapterProtocolError("resource entry decodes to zero bytes")
        produced.append((data, media_type))
    return produced


def _dispatch_http(
    descriptor: ModelDescriptor,
    request: AdapterRequest,
    load_bytes: LoadBytes | None,
    store_bytes: StoreBytes,
) -> MfmOutput:
    if request.resources and load_bytes is None:
        raise ValueError("remote dispatch with resources requires a byte loader")
    payload = {
        "model_id": request.model_id,
        "text": request.text,
        "resources": [
            {
                "id": r.id,
                "media_type": r.media_type,
                "bytes_b64": base64.b64encode(load_bytes(r.id)).decode("ascii"),
            }
            for r in request.resources
        ],
    }
    try:
        reply = httpx.post(descriptor.endpoint, json=payload, timeout=descriptor.timeout)
    except httpx.TimeoutException as exc:
        raise AdapterTimeout(f"adapter {descriptor.id!r} timed out: {exc}") from exc
    except httpx.HTTPError as exc:
        raise AdapterUnavailable(f"adapter {descriptor.id!r} unreachable: {exc}") from exc

    if reply.status_code != 200:
        raise AdapterProtocolError(
            f"adapter {descriptor.id!r} replied with status {reply.status_code}"
        )
    try:
        body = reply.json()
    except ValueError as exc:
        raise AdapterProtocolError(f"adapter {descriptor.id!r} replied with non-JSON body") from exc
    if not isinstance(body, dict):
        raise AdapterProtocolError(f"adapter {descriptor.id!r} replied with a non-object body")

    kind = body.get("kind")
    if kind == "text":
        text = body.get("text")
        if not isinstance(text, str) or not text:
            raise AdapterProtocolError(f"adapter {descriptor.id!r} text reply is empty")
        return MfmOutput.from_text(text, source_model=descriptor.id)
    if kind == "resources":
        return _wrap_reply("resources", _decode_wire_resources(body), descriptor, store_bytes)
    raise AdapterProtocolError(f"adapter {descriptor.id!r} reply has unknown kind {kind!r}")


def dispatch(
    descriptor: ModelDescriptor,
    resources: tuple[Resource, ...],
    query_text: str | None = None,
    *,
    load_bytes: LoadBytes | None = None,
    store_bytes: StoreBytes | None = None,
) -> MfmOutput:
    """Invoke the adapter binding and wrap its reply.

    Produced artifacts flow through ``store_bytes`` so the caller can persist
    them; by default they become in-memory Resource metadata only.

    Raises:
        AdapterTimeout / AdapterProtocolError / AdapterUnavailable, all
        recoverable by degrading the turn to the no-model path.
    """
    for r in resources:
        if r.modality not in descriptor.accepted_modalities:
            raise ValueError(
                f"resource {r.id} has modality {r.modality.value!r} not accepted by {descriptor.id!r}"
            )
    sink = store_bytes or _default_store_bytes
    request = AdapterRequest(
        model_id=descriptor.id,
        text=query_text,
        resources=tuple(resources),
        timeout=descriptor.timeout,
    )
    endpoint = descriptor.endpoint
    if endpoint.startswith(MOCK_SCHEME):
        return _dispatch_mock(endpoint[len(MOCK_SCHEME):], descriptor, request, sink)
    if endpoint.startswith(("http://", "https://")):
        return _dispatch_http(descriptor, request, load_bytes, sink)
    raise AdapterUnavailable(f"unsupported adapter endpoint: {endpoint!r}")
