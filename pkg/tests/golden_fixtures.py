"""Deterministic fixtures behind the golden-file tests.

Everything here must be a pure function of constants: fixed byte payloads,
fixed clocks, fixed session ids. The golden files under tests/data/ were
generated from these fixtures once (tests/gen_goldens.py), eyeballed, and
committed; the tests rebuild the same objects and compare bytes.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

from stone_needle.domain import (
    DialogueHistory,
    Modality,
    Query,
    Resource,
    Response,
    RoutingTrace,
    TurnRecord,
)
from stone_needle.intent import IntentConfig, RoutingSignal
from stone_needle.knowledge import EntityCategory, EntityRecord, KnowledgeBase
from stone_needle.mlm import MlmBackend
from stone_needle.orchestrator import TurnDeps, run_turn
from stone_needle.prompt import assemble_prompt
from stone_needle.registry import MfmOutput, ModelDescriptor, ModelRegistry
from stone_needle.store import SessionStore

DATA_DIR = Path(__file__).parent / "data"
GOLDEN_PROMPTS_DIR = DATA_DIR / "golden_prompts"
GOLDEN_TRANSCRIPT_PATH = DATA_DIR / "golden_transcript.json"

GOLDEN_SESSION_ID = "00000000-0000-4000-8000-000000000001"
GOLDEN_SCAN_BYTES = b"golden-scan-image-bytes-0001"
GOLDEN_AUDIO_BYTES = b"golden-audio-bytes-0001"


def golden_kb() -> KnowledgeBase:
    return KnowledgeBase.build(
        [
            EntityRecord(
                id="d-hypertension",
                canonical_name="Hypertension",
                category=EntityCategory.DISEASE,
                aliases=("high blood pressure", "htn"),
                attributes={"icd10": "I10", "risk": "cardiovascular"},
            ),
            EntityRecord(
                id="s-chest-pain",
                canonical_name="Chest pain",
                category=EntityCategory.SYMPTOM,
                aliases=("chest pain",),
                attributes={"triage": "urgent"},
            ),
            EntityRecord(
                id="i-ct-scan",
                canonical_name="CT scan",
                category=EntityCategory.INSPECTION,
                aliases=("ct scan", "scan"),
                attributes={"kind": "imaging"},
            ),
        ]
    )


def _resource(data: bytes, media_type: str) -> Resource:
    return Resource.from_bytes(data, media_type)


def _turn(index: int, query: Query, response_text: str) -> TurnRecord:
    trace = RoutingTrace(scores={}, selected=None, prompt_id=f"fixed-{index}")
    return TurnRecord(
        index=index,
        query=query,
        response=Response(text=response_text, resources=(), routing_trace=trace),
        routed_model=None,
        timestamp=datetime(2024, 6, 1, 8, index, tzinfo=timezone.utc),
    )


def _history(*texts: str) -> DialogueHistory:
    turns = tuple(
        _turn(i, Query(text=t), f"answer {i}") for i, t in enumerate(texts, start=1)
    )
    return DialogueHistory("golden", turns)


def prompt_fixtures() -> list[tuple[str, MfmOutput, Query, DialogueHistory, KnowledgeBase, int]]:
    """Name + assemble_prompt arguments for every golden prompt."""
    kb = golden_kb()
    empty_kb = KnowledgeBase.empty()
    scan = _resource(GOLDEN_SCAN_BYTES, "image/png")
    audio = _resource(GOLDEN_AUDIO_BYTES, "audio/wav")
    no_history = DialogueHistory("golden")

    image_turn_history = DialogueHistory(
        "golden",
        (
            _turn(1, Query(text="hello"), "hi there"),
            _turn(2, Query(resources=(scan,)), "received the image"),
        ),
    )

    return [
        ("01_query_only", MfmOutput.empty(), Query(text="good morning"), no_history, empty_kb, 2048),
        (
            "02_all_sections",
            MfmOutput.from_text("the scan shows a small lesion", source_model="describer"),
            Query(text="what does the ct scan show"),
            _history("hello doctor", "I uploaded the image"),
            kb,
            2048,
        ),
        (
            "03_non_text_query",
            MfmOutput.empty(),
            Query(resources=(scan, audio)),
            no_history,
            empty_kb,
            2048,
        ),
        (
            "04_resource_result",
            MfmOutput.from_resources((_resource(b"mask-bytes", "image/png"),), source_model="segmenter"),
            Query(text="segment the region"),
            no_history,
            empty_kb,
            2048,
        ),
        (
            "05_truncated_history",
            MfmOutput.empty(),
            Query(text="latest question"),
            _history(*[f"padded question number {i}" for i in range(1, 9)]),
            empty_kb,
            64,
        ),
        (
            "06_knowledge_dedupe",
            MfmOutput.from_text("scan confirms chest pain near the scan site", source_model="m"),
            Query(text="the scan and my chest pain got worse, plus htn"),
            no_history,
            kb,
            2048,
        ),
        (
            "07_history_only",
            MfmOutput.empty(),
            Query(text="carry on"),
            _history("first message", "second message"),
            empty_kb,
            2048,
        ),
        (
            "08_resource_only_history_turn",
            MfmOutput.empty(),
            Query(text="about that file"),
            image_turn_history,
            empty_kb,
            2048,
        ),
        (
            "09_entity_only_in_tool_text",
            MfmOutput.from_text("findings consistent with high blood pressure", source_model="m"),
            Query(text="anything to worry about"),
            no_history,
            kb,
            2048,
        ),
        (
            "10_longest_alias_wins",
            MfmOutput.empty(),
            Query(text="reading of high blood pressure today"),
            no_history,
            kb,
            2048,
        ),
        (
            "11_empty_output_note",
            MfmOutput.empty(source_model="segmenter", note="no compatible resource"),
            Query(text="segment something"),
            no_history,
            empty_kb,
            2048,
        ),
        (
            "12_verbatim_query_whitespace",
            MfmOutput.empty(),
            Query(text="keep   my    spacing\nand my newline"),
            no_history,
            empty_kb,
            2048,
        ),
    ]


def render_prompt_fixture(fixture) -> str:
    _, mfm_output, query, history, kb, budget = fixture
    return assemble_prompt(mfm_output, query, history, kb, budget).rendered


def eval_registry() -> ModelRegistry:
    """Two-model registry behind the committed routing fixtures."""
    return ModelRegistry(
        [
            ModelDescriptor(
                id="segmenter",
                display_name="Image Segmenter",
                accepted_modalities=frozenset({Modality.IMAGE}),
                routing_signal=RoutingSignal(
                    keywords=("segment",), required_modalities=frozenset({Modality.IMAGE})
                ),
                endpoint="mock://segmenter",
            ),
            ModelDescriptor(
                id="transcriber",
                display_name="Speech Transcriber",
                accepted_modalities=frozenset({Modality.AUDIO}),
                routing_signal=RoutingSignal(
                    keywords=("transcribe",), required_modalities=frozenset({Modality.AUDIO})
                ),
                endpoint="mock://transcriber",
            ),
        ]
    )


# --- end-to-end golden conversation ---


def golden_registry() -> ModelRegistry:
    return ModelRegistry(
        [
            ModelDescriptor(
                id="segmenter",
                display_name="Image Segmenter",
                accepted_modalities=frozenset({Modality.IMAGE}),
                routing_signal=RoutingSignal(
                    keywords=("segment",),
                    required_modalities=frozenset({Modality.IMAGE}),
                ),
                endpoint="mock://segmenter",
            ),
            ModelDescriptor(
                id="describer",
                display_name="Image Describer",
                accepted_modalities=frozenset({Modality.IMAGE}),
                routing_signal=RoutingSignal(
                    keywords=("describe", "show"),
                    required_modalities=frozenset({Modality.IMAGE}),
                    weight_text=2.0,
                ),
                endpoint="mock://echo-describe",
            ),
            ModelDescriptor(
                id="fracture-checker",
                display_name="Fracture Checker",
                accepted_modalities=frozenset({Modality.IMAGE}),
                routing_signal=RoutingSignal(
                    keywords=("fracture",),
                    required_modalities=frozenset({Modality.IMAGE}),
                    weight_text=3.0,
                ),
                endpoint="mock://failing",
            ),
        ]
    )


def stepping_clock(start=datetime(2024, 6, 1, 9, 0, tzinfo=timezone.utc), step_seconds=60):
    state = {"now": start}

    def clock():
        state["now"] += timedelta(seconds=step_seconds)
        return state["now"]

    return clock


class CannedStatusServer:
    """Local HTTP stub that always replies with one fixed status and body."""

    def __init__(self, status=500, body=b"{}"):
        stub_status, stub_body = status, body

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                self.rfile.read(length)
                self.send_response(stub_status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(stub_body)))
                self.end_headers()
                self.wfile.write(stub_body)

            def log_message(self, *args):
                pass

        self.server = HTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=self.server.serve_forever, daemon=True).start()

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server.server_port}/v1/chat/completions"

    def close(self):
        self.server.shutdown()
        self.server.server_close()


GOLDEN_TURN_TEXTS = [
    "good morning doctor",
    "please segment this scan",
    "describe what the scan shows",
    "check the scan for a fracture",
    "thank you for everything",
]


def run_golden_conversation(data_dir, failing_mlm_url: str):
    """Scripted 5-turn conversation over all-mock backends.

    Turn 1: text-only, routes nowhere. Turn 2: image + keyword, produces a
    resource. Turn 3: text-only, borrows the turn-2 image. Turn 4: routes to
    the always-failing adapter. Turn 5: generation backend failure (canned
    500 at ``failing_mlm_url``). history_window=0 keeps each turn's routing
    locally determined so every expected value is hand-checkable.
    """
    store = SessionStore(data_dir)
    clock = stepping_clock()
    base = dict(
        registry=golden_registry(),
        kb=golden_kb(),
        intent_config=IntentConfig(threshold=0.25, history_window=0),
        prompt_budget=2048,
        store=store,
    )
    deps = TurnDeps(mlm_backend=MlmBackend.mock(), clock=clock, **base)
    degraded_deps = TurnDeps(
        mlm_backend=MlmBackend.remote(failing_mlm_url, "stub-model", timeout=5.0, max_retries=0),
        clock=clock,
        **base,
    )

    session = store.create_session(GOLDEN_SESSION_ID)
    scan = store.put_blob(GOLDEN_SCAN_BYTES, "image/png")
    store.record_resource(session.session_id, scan.id)

    queries = [
        Query(text=GOLDEN_TURN_TEXTS[0]),
        Query(text=GOLDEN_TURN_TEXTS[1], resources=(scan,)),
        Query(text=GOLDEN_TURN_TEXTS[2]),
        Query(text=GOLDEN_TURN_TEXTS[3]),
        Query(text=GOLDEN_TURN_TEXTS[4]),
    ]
    responses = []
    for i, query in enumerate(queries):
        turn_deps = degraded_deps if i == 4 else deps
        response, session = run_turn(session, query, turn_deps)
        responses.append(response)
    return session, responses, store


def write_fixture_files() -> None:
    """(Re)generate the committed JSON fixture inputs used by eval tests."""
    DATA_DIR.mkdir(exist_ok=True)
    unambiguous = []
    for i in range(20):
        unambiguous.append(
            {
                "query": {"text": f"please segment scan {i}", "modalities": ["image"]},
                "history": [],
                "expected": "segmenter",
            }
        )
        unambiguous.append(
            {
                "query": {"text": f"transcribe recording {i}", "modalities": ["audio"]},
                "history": [],
                "expected": "transcriber",
            }
        )
    (DATA_DIR / "routing_unambiguous.json").write_text(
        json.dumps(unambiguous, indent=2) + "\n", encoding="utf-8"
    )

    # Five designed groups, 8 cases each; the ground-truth labels deliberately
    # disagree with what keyword/modality routing can know in groups 2, 4b, 5.
    ambiguous = []
    for i in range(8):
        # 1: clean keyword+attachment match.
        ambiguous.append(
            {
                "query": {"text": f"segment this image {i}", "modalities": ["image"]},
                "history": [],
                "expected": "segmenter",
            }
        )
        # 2: segment keyword but audio attachment; truth says transcriber,
        # the tie (1.0 vs 1.0) breaks toward the first-registered segmenter.
        ambiguous.append(
            {
                "query": {"text": f"segment the audio file {i}", "modalities": ["audio"]},
                "history": [],
                "expected": "transcriber",
            }
        )
        # 3: both keywords, audio attachment; transcriber outscores 2 to 1.
        ambiguous.append(
            {
                "query": {"text": f"segment or transcribe case {i}", "modalities": ["audio"]},
                "history": [],
                "expected": "transcriber",
            }
        )
        # 4a/4b: small talk; half follow an image turn, which keeps the
        # segmenter's modality signal alive and mis-routes away from NONE.
        if i < 4:
            ambiguous.append(
                {
                    "query": {"text": f"small talk number {i}", "modalities": []},
                    "history": [],
                    "expected": "NONE",
                }
            )
        else:
            ambiguous.append(
                {
                    "query": {"text": f"small talk number {i}", "modalities": []},
                    "history": [{"text": "here is an image", "modalities": ["image"]}],
                    "expected": "NONE",
                }
            )
        # 5: segment keyword with nothing to segment anywhere; truth is NONE.
        ambiguous.append(
            {
                "query": {"text": f"can you segment case {i}", "modalities": []},
                "history": [],
                "expected": "NONE",
            }
        )
    (DATA_DIR / "routing_ambiguous.json").write_text(
        json.dumps(ambiguous, indent=2) + "\n", encoding="utf-8"
    )
