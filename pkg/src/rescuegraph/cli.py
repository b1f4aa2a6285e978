"""Operator and developer command line.

Exit codes are uniform across commands: 0 success, 1 semantic failure
(validation errors, replay divergence, refusing to serve an invalid
graph), 2 unreadable or unparseable input.
"""

from __future__ import annotations

import json
import sys
import urllib.error
import urllib.request
from pathlib import Path

import click
import uvicorn

from .api import create_app
from .graphio import GraphFormatError, load_graph
from .model import Graph, StructuralError, UnknownNodeError
from .report import (render_findings, render_stats, render_transcript,
                     write_replay_report, write_stats_report)
from .runtime import (Runtime, ScriptDivergence, ScriptError,
                      ScriptedVitalsFeed, load_script, replay)
from .session import InvalidActionError, InvalidEntryError, SessionStatus
from .situation import QuestionnaireError, load_questionnaire
from .validate import errors_only, load_manifest, stats, validate
from .vitals import CsvFormatError


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    raise SystemExit(code)


def _load_graph(path: str) -> Graph:
    try:
        return load_graph(path)
    except OSError as exc:
        _fail(f"cannot read {path}: {exc}", 2)
    except GraphFormatError as exc:
        _fail(str(exc), 2)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(f"cannot read {path}: {exc}", 2)


_FORMAT = click.option("--format", "fmt",
                       type=click.Choice(["text", "structured"]),
                       default="text", show_default=True)


@click.group()
def main():
    """Treatment-path graphs: validate, inspect, replay, serve."""


@main.command("validate")
@click.argument("graph_file", type=click.Path())
@_FORMAT
def cmd_validate(graph_file: str, fmt: str):
    """Run all structural checks; exit 1 on any error-severity finding."""
    graph = _load_graph(graph_file)
    findings = validate(graph)
    click.echo(render_findings(findings, fmt), nl=False)
    raise SystemExit(1 if errors_only(findings) else 0)


@main.command("stats")
@click.argument("graph_file", type=click.Path())
@_FORMAT
@click.option("--report", "report_dir", type=click.Path(), default=None,
              help="Write stats.csv and kind-distribution figures here.")
def cmd_stats(graph_file: str, fmt: str, report_dir: str):
    """Print node/edge counts, overall and by kind."""
    graph = _load_graph(graph_file)
    counts = stats(graph)
    click.echo(render_stats(counts, fmt), nl=False)
    if report_dir:
        for path in write_stats_report(counts, report_dir):
            click.echo(f"wrote {path}", err=True)
    raise SystemExit(0)


@main.command("replay")
@click.argument("graph_file", type=click.Path())
@click.option("--script", "script_file", type=click.Path(), required=True)
@click.option("--vitals", "vitals_file", type=click.Path(), default=None)
@click.option("--report", "report_dir", type=click.Path(), default=None,
              help="Write transcript.txt, audit.csv and a vitals figure.")
def cmd_replay(graph_file: str, script_file: str, vitals_file: str,
               report_dir: str):
    """Deterministic scripted run; exit 1 when the session diverges."""
    graph = _load_graph(graph_file)
    try:
        script = load_script(script_file)
    except ScriptError as exc:
        _fail(str(exc), 2)
    vitals_text = _read_text(vitals_file) if vitals_file else None
    for step in script.steps:
        if step.expect not in graph.nodes:
            _fail(f"script references unknown node {step.expect!r}", 2)
    try:
        session = replay(graph, script, vitals_text)
    except (CsvFormatError, ScriptError) as exc:
        _fail(str(exc), 2)
    except ScriptDivergence as exc:
        click.echo(f"divergence at {exc}", err=True)
        raise SystemExit(1)
    except (StructuralError, UnknownNodeError, InvalidEntryError) as exc:
        _fail(str(exc), 2)
    audit = {"session_id": session.session_id,
             "patient_id": session.patient_id,
             "status": session.status.value,
             "entries": [entry.to_dict() for entry in session.audit]}
    transcript = render_transcript(audit)
    click.echo(transcript, nl=False)
    if report_dir:
        for path in write_replay_report(audit, report_dir, vitals_text):
            click.echo(f"wrote {path}", err=True)
    raise SystemExit(0)


@main.command("run")
@click.argument("graph_file", type=click.Path())
@click.option("--entry", default=None,
              help="Entry node id; defaults to the start node.")
@click.option("--patient", default="p1", show_default=True)
def cmd_run(graph_file: str, entry: str, patient: str):
    """Interactive terminal session: numbered prompts, selection by key."""
    graph = _load_graph(graph_file)
    runtime = Runtime(graph, hold_vitals=False)
    if entry is None:
        try:
            entry = graph.entry_points().start.id
        except StructuralError as exc:
            _fail(str(exc), 2)
    try:
        session = runtime.engine.create_session(patient, entry)
    except (UnknownNodeError, InvalidEntryError) as exc:
        _fail(str(exc), 2)
    runtime.drain()
    while session.status is not SessionStatus.STOPPED:
        prompt = session.pending
        if prompt is None:
            runtime.drain()
            if session.pending is None and \
                    session.status is not SessionStatus.STOPPED:
                _fail("session is waiting on an unavailable value", 1)
            continue
        click.echo(f"\n[{session.current}] {prompt.title}")
        if prompt.attached_value is not None:
            value = prompt.attached_value
            status = "in range" if value.in_range else "out of range"
            click.echo(f"  reading: {value.reading:g} {value.unit or ''} "
                       f"({status}{', stale' if value.stale else ''})")
        for option in prompt.options:
            marker = " *" if option.key == prompt.suggested else ""
            click.echo(f"  [{option.key}] {option.label}{marker}")
        if prompt.info_available:
            click.echo("  [i] additional information")
        click.echo("  [q] stop session")
        try:
            choice = click.prompt("select", default="", show_default=False)
        except (click.Abort, EOFError):
            runtime.engine.stop_session(session.session_id)
            break
        if choice == "q":
            runtime.engine.stop_session(session.session_id)
        elif choice == "i":
            for item in runtime.engine.request_additional_info(
                    session.session_id):
                click.echo(f"  ({item['kind']}) {item['name']}")
        elif choice:
            try:
                if session.status is SessionStatus.AWAITING_PATH_CONFIRMATION:
                    runtime.engine.confirm(session.session_id,
                                           choice == "confirm")
                else:
                    runtime.engine.submit_decision(session.session_id, choice)
            except InvalidActionError as exc:
                click.echo(f"  not possible: {exc}")
        runtime.drain()
    click.echo(f"session stopped at {session.current}")
    raise SystemExit(0)


@main.command("serve")
@click.argument("graph_file", type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--max-age", default=300.0, show_default=True, type=float,
              help="Seconds before a stored reading counts as stale.")
@click.option("--manifest", "manifest_file", type=click.Path(), default=None)
def cmd_serve(graph_file: str, host: str, port: int, max_age: float,
              manifest_file: str):
    """Start the HTTP service; refuses graphs with validation errors."""
    graph = _load_graph(graph_file)
    findings = validate(graph)
    errors = errors_only(findings)
    if errors:
        click.echo(render_findings(findings), nl=False, err=True)
        click.echo(f"refusing to serve: {len(errors)} validation error(s)",
                   err=True)
        raise SystemExit(1)
    questionnaire = None
    try:
        questionnaire = load_questionnaire(Path(graph_file))
    except (QuestionnaireError, KeyError, ValueError):
        pass  # corpus without a questionnaire section still serves
    manifest = load_manifest(manifest_file) if manifest_file else None
    app = create_app(graph, questionnaire=questionnaire, manifest=manifest,
                     max_age=max_age)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("ingest")
@click.argument("csv_file", type=click.Path())
@click.option("--url", default="http://127.0.0.1:8000", show_default=True,
              help="Base URL of a running service.")
def cmd_ingest(csv_file: str, url: str):
    """POST a vitals CSV to a running service."""
    text = _read_text(csv_file)
    request = urllib.request.Request(
        f"{url.rstrip('/')}/vitals", data=text.encode("utf-8"),
        headers={"Content-Type": "text/csv"}, method="POST")
    try:
        with urllib.request.urlopen(request) as response:
            body = json.loads(response.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        click.echo(f"error: service rejected the upload: "
                   f"{exc.read().decode('utf-8', 'replace')}", err=True)
        raise SystemExit(1)
    except urllib.error.URLError as exc:
        _fail(f"cannot reach {url}: {exc}", 2)
    click.echo(json.dumps(body))
    raise SystemExit(0)


if __name__ == "__main__":
    main()
