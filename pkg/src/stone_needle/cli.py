"""Command line entry points: serve, chat, eval, kb-lint."""

from __future__ import annotations

import json
import mimetypes
import sys
from pathlib import Path

import click

from .config import load_config
from .domain import Query
from .errors import StoneNeedleError
from .evalharness import compute_metrics, load_fixture, render_table, run_routing_eval
from .knowledge import load_knowledge_base
from .orchestrator import TurnDeps, run_turn
from .store import SessionStore


@click.group()
def main():
    """Multimodal dialogue gateway: route, dispatch, assemble, respond."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def serve(config_path: str):
    """Run the HTTP gateway."""
    import uvicorn

    from .api import create_app

    config = load_config(config_path)
    app = create_app(config)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--verbose", is_flag=True, help="Print the routing trace after each turn.")
def chat(config_path: str, verbose: bool):
    """Interactive terminal session against the configured pipeline.

    Plain lines run a turn; "/attach <file>" queues an upload for the next
    turn; "/quit" exits.
    """
    config = load_config(config_path)
    store = SessionStore(config.data_dir)
    deps = TurnDeps(
        registry=config.build_registry(),
        kb=config.load_kb(),
        intent_config=config.intent,
        mlm_backend=config.mlm,
        prompt_budget=config.prompt_budget,
        store=store,
    )
    session = store.create_session()
    click.echo(f"session {session.session_id} (/attach <file> to upload, /quit to exit)")

    pending = []
    while True:
        try:
            line = click.prompt("you", prompt_suffix="> ", default="", show_default=False)
        except (EOFError, KeyboardInterrupt, click.Abort):
            break
        line = line.strip()
        if not line and not pending:
            continue
        if line == "/quit":
            break
        if line.startswith("/attach "):
            file_path = Path(line[len("/attach "):].strip()).expanduser()
            media_type = mimetypes.guess_type(file_path.name)[0] or "application/octet-stream"
            try:
                resource = store.put_blob(file_path.read_bytes(), media_type)
            except OSError as exc:
                click.echo(f"cannot read {file_path}: {exc}")
                continue
            except StoneNeedleError as exc:
                click.echo(f"rejected: {exc}")
                continue
            store.record_resource(session.session_id, resource.id)
            pending.append(resource)
            click.echo(f"attached {resource.modality.value} {resource.id[:12]}")
            continue

        try:
            query = Query(text=line or None, resources=tuple(pending))
            response, session = run_turn(session, query, deps)
        except StoneNeedleError as exc:
            click.echo(f"error: {exc}")
            continue
        pending = []
        if response.text:
            click.echo(f"assistant> {response.text}")
        for resource in response.resources:
            click.echo(f"assistant> [produced {resource.modality.value} resource {resource.id}]")
        if verbose:
            click.echo(json.dumps(response.routing_trace.to_dict(), indent=2, sort_keys=True))


@main.command("eval")
@click.option("--fixtures", "fixtures_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--format", "output_format", type=click.Choice(["json", "table"]), default="table")
@click.option("--out", "out_path", type=click.Path(), default=None)
def eval_cmd(fixtures_path: str, config_path: str, output_format: str, out_path: str | None):
    """Run routing fixtures and report accuracy, precision, recall, and F1.

    Exit code is 0 iff all cases parsed and ran; metric values never affect it.
    """
    try:
        config = load_config(config_path)
        registry = config.build_registry()
        fixture = load_fixture(fixtures_path, registry)
        cm = run_routing_eval(fixture, registry, config.intent)
        report = compute_metrics(cm)
    except StoneNeedleError as exc:
        raise click.ClickException(str(exc))

    if output_format == "json":
        rendered = json.dumps(
            {"confusion_matrix": cm.to_dict(), "metrics": report.to_dict()},
            indent=2,
            sort_keys=True,
        )
    else:
        rendered = render_table(cm, report)

    if out_path:
        Path(out_path).write_text(rendered + "\n", encoding="utf-8")
    else:
        click.echo(rendered)


@main.command("kb-lint")
@click.argument("kb_path", type=click.Path(exists=True))
def kb_lint(kb_path: str):
    """Validate a knowledge-base file and report alias conflicts."""
    try:
        kb = load_knowledge_base(kb_path)
    except StoneNeedleError as exc:
        click.echo(f"invalid: {exc}", err=True)
        sys.exit(1)
    click.echo(f"ok: {len(kb.entities)} entities, {len(kb.alias_index)} aliases")


if __name__ == "__main__":
    main()
