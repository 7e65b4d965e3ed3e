from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from stone_needle.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, models=None):
    config = {
        "listen": "127.0.0.1:8080",
        "data_dir": str(tmp_path / "data"),
        "prompt_budget": 2048,
        "intent": {"threshold": 0.25, "history_window": 3},
        "models": models
        if models is not None
        else [
            {
                "id": "segmenter",
                "accepted_modalities": ["image"],
                "endpoint": "mock://segmenter",
                "routing": {"keywords": ["segment"], "required_modalities": ["image"]},
            },
            {
                "id": "transcriber",
                "accepted_modalities": ["audio"],
                "endpoint": "mock://transcriber",
                "routing": {"keywords": ["transcribe"], "required_modalities": ["audio"]},
            },
        ],
        "mlm": {"kind": "mock"},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path


GOOD_KB = {
    "entities": [
        {
            "id": "d1",
            "canonical_name": "Influenza",
            "category": "disease",
            "aliases": ["flu"],
            "attributes": {},
        }
    ]
}


class TestKbLint:
    def test_valid_kb(self, runner, tmp_path):
        path = tmp_path / "kb.json"
        path.write_text(json.dumps(GOOD_KB), encoding="utf-8")
        result = runner.invoke(main, ["kb-lint", str(path)])
        assert result.exit_code == 0
        assert "ok: 1 entities, 2 aliases" in result.output

    def test_alias_conflict_fails(self, runner, tmp_path):
        doc = {
            "entities": GOOD_KB["entities"]
            + [
                {
                    "id": "d2",
                    "canonical_name": "Common cold",
                    "category": "disease",
                    "aliases": ["flu"],
                    "attributes": {},
                }
            ]
        }
        path = tmp_path / "kb.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        result = runner.invoke(main, ["kb-lint", str(path)])
        assert result.exit_code == 1
        assert "invalid" in result.output

    def test_bad_json_fails(self, runner, tmp_path):
        path = tmp_path / "kb.json"
        path.write_text("{oops", encoding="utf-8")
        assert runner.invoke(main, ["kb-lint", str(path)]).exit_code == 1


class TestEval:
    CASES = [
        {"query": {"text": "segment this", "modalities": ["image"]}, "history": [], "expected": "segmenter"},
        {"query": {"text": "transcribe this", "modalities": ["audio"]}, "history": [], "expected": "transcriber"},
        {"query": {"text": "hello", "modalities": []}, "history": [], "expected": "NONE"},
    ]

    def test_table_output(self, runner, tmp_path):
        config = write_config(tmp_path)
        fixtures = tmp_path / "cases.json"
        fixtures.write_text(json.dumps(self.CASES), encoding="utf-8")
        result = runner.invoke(
            main, ["eval", "--fixtures", str(fixtures), "--config", str(config)]
        )
        assert result.exit_code == 0
        assert "accuracy" in result.output
        assert "1.0000" in result.output

    def test_json_output_to_file(self, runner, tmp_path):
        config = write_config(tmp_path)
        fixtures = tmp_path / "cases.json"
        fixtures.write_text(json.dumps(self.CASES), encoding="utf-8")
        out = tmp_path / "report.json"
        result = runner.invoke(
            main,
            ["eval", "--fixtures", str(fixtures), "--config", str(config),
             "--format", "json", "--out", str(out)],
        )
        assert result.exit_code == 0
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["metrics"]["accuracy"] == 1.0
        assert report["confusion_matrix"]["labels"] == ["segmenter", "transcriber", "NONE"]

    def test_low_accuracy_still_exits_zero(self, runner, tmp_path):
        config = write_config(tmp_path)
        wrong = [
            {"query": {"text": "hello", "modalities": []}, "history": [], "expected": "segmenter"}
        ]
        fixtures = tmp_path / "cases.json"
        fixtures.write_text(json.dumps(wrong), encoding="utf-8")
        result = runner.invoke(
            main, ["eval", "--fixtures", str(fixtures), "--config", str(config)]
        )
        assert result.exit_code == 0

    def test_bad_fixture_exits_nonzero(self, runner, tmp_path):
        config = write_config(tmp_path)
        fixtures = tmp_path / "cases.json"
        fixtures.write_text("[]", encoding="utf-8")
        result = runner.invoke(
            main, ["eval", "--fixtures", str(fixtures), "--config", str(config)]
        )
        assert result.exit_code != 0


class TestChat:
    def test_scripted_conversation(self, runner, tmp_path):
        config = write_config(tmp_path)
        result = runner.invoke(main, ["chat", "--config", str(config)], input="hello\n/quit\n")
        assert result.exit_code == 0
        assert "assistant> MOCK-RESPONSE" in result.output

    def test_attach_then_turn(self, runner, tmp_path):
        config = write_config(tmp_path)
        image = tmp_path / "scan.png"
        image.write_bytes(b"\x89PNG fake")
        script = f"/attach {image}\nsegment this\n/quit\n"
        result = runner.invoke(main, ["chat", "--config", str(config), "--verbose"], input=script)
        assert result.exit_code == 0
        assert "attached image" in result.output
        assert "[produced image resource" in result.output
        assert '"selected": "segmenter"' in result.output
