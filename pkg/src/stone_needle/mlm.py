"""Pluggable text-generation backend behind the prompt stage.

Two kinds: a deterministic templated mock for offline tests, and an
OpenAI-style chat-completion HTTP client with bounded retries. The bearer
token comes from the MLM_API_KEY environment variable and is never logged.
"""

from __future__ import annotations

import hashlib
import logging
import os
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import httpx

from .errors import MlmProtocolError, MlmTimeout, MlmUnavailable
from .prompt import AssembledPrompt

logger = logging.getLogger(__name__)

DEFAULT_SYSTEM_PROMPT = "You are a careful medical assistant."
RETRY_BASE_DELAY = 0.5
API_KEY_ENV = "MLM_API_KEY"


class MlmKind(Enum):
    REMOTE_CHAT = "remote_chat"
    MOCK_TEMPLATED = "mock_templated"


@dataclass(frozen=True)
class MlmBackend:
    """Backend binding: remote chat endpoint or the built-in mock."""

    kind: MlmKind
    endpoint: str | None = None
    model_name: str | None = None
    timeout: float = 30.0
    max_retries: int = 2
    temperature: float = 0.0
    system_prompt: str = DEFAULT_SYSTEM_PROMPT

    def __post_init__(self) -> None:
        if self.kind is MlmKind.REMOTE_CHAT and not (self.endpoint and self.model_name):
            raise ValueError("remote backend requires endpoint and model_name")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")

    @classmethod
    def mock(cls) -> "MlmBackend":
        return cls(kind=MlmKind.MOCK_TEMPLATED)

    @classmethod
    def remote(cls, endpoint: str, model_name: str, **kwargs) -> "MlmBackend":
        return cls(kind=MlmKind.REMOTE_CHAT, endpoint=endpoint, model_name=model_name, **kwargs)


def _mock_reply(prompt: AssembledPrompt) -> str:
    digest = hashlib.sha256(prompt.rendered.encode("utf-8")).hexdigest()[:8]
    tags = ",".join(prompt.section_tags)
    return f"MOCK-RESPONSE sections={tags} sha={digest}"


def _parse_chat_reply(body: object) -> str:
    try:
        content = body["choices"][0]["message"]["content"]  # type: ignore[index]
    except (KeyError, IndexError, TypeError) as exc:
        raise MlmProtocolError(f"chat reply missing choices[0].message.content: {exc}") from exc
    if not isinstance(content, str):
        raise MlmProtocolError("chat reply content is not a string")
    return content


def _remote_reply(
    backend: MlmBackend,
    prompt: AssembledPrompt,
    sleep: Callable[[float], None],
) -> str:
    headers = {}
    api_key = os.environ.get(API_KEY_ENV)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    payload = {
        "model": backend.model_name,
        "messages": [
            {"role": "system", "content": backend.system_prompt},
            {"role": "user", "content": prompt.rendered},
        ],
        "temperature": backend.temperature,
    }

    attempts = backend.max_retries + 1
    delay = RETRY_BASE_DELAY
    last_error: Exception | None = None
    for attempt in range(attempts):
        try:
            reply = httpx.post(backend.endpoint, json=payload, headers=headers, timeout=backend.timeout)
        except httpx.TimeoutException as exc:
            last_error = MlmTimeout(f"backend timed out: {exc}")
        except httpx.HTTPError as exc:
            last_error = MlmUnavailable(f"backend unreachable: {exc}")
        else:
            if reply.status_code == 200:
                try:
                    body = reply.json()
                except ValueError as exc:
                    raise MlmProtocolError("backend replied with non-JSON body") from exc
                return _parse_chat_reply(body)
            if reply.status_code == 429 or reply.status_code >= 500:
                last_error = MlmUnavailable(f"backend replied with status {reply.status_code}")
            else:
                raise MlmProtocolError(f"backend replied with status {reply.status_code}")
        if attempt + 1 < attempts:
            logger.warning("generation attempt %d/%d failed, retrying", attempt + 1, attempts)
            sleep(delay)
            delay *= 2
    assert last_error is not None
    raise last_error


def generate(
    backend: MlmBackend,
    prompt: AssembledPrompt,
    *,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Produce the turn's response text from the assembled prompt.

    The mock backend is a pure function of the rendered prompt. The remote
    backend posts the rendered prompt verbatim as a single user message and
    retries transient failures with exponential backoff (base 500 ms, x2).

    Raises:
        MlmTimeout / MlmProtocolError / MlmUnavailable after retries are
        exhausted; callers degrade the turn rather than fail it.
    """
    if not prompt.rendered:
        raise ValueError("prompt must be rendered and non-empty")
    if backend.kind is MlmKind.MOCK_TEMPLATED:
        return _mock_reply(prompt)
    return _remote_reply(backend, prompt, sleep)
