"""Command-line interface. Every flag can also be set through an
environment variable prefixed VESTBENCH_ (e.g. VESTBENCH_SERVE_PORT)."""

from __future__ import annotations

import glob as globlib
import json
import sys
from pathlib import Path

import click

from . import compiler, path_eval
from .direction import load_odometry_jsonl
from .library import CodingStrategy, EventKind, load_library
from .simulate import constant_latency_responder
from .trials import Load, format_report_text, report_from_sessions, session_from_jsonl
from .vest import export_topology
from .gateway.runner import RunConfig, replay_session, run_trial
from .gateway.store import SessionStore, UnknownSession

STRATEGIES = [s.value for s in CodingStrategy]
EVENTS = [e.value for e in EventKind]
LOADS = [x.value for x in Load]


@click.group(context_settings={"auto_envvar_prefix": "VESTBENCH"})
def main() -> None:
    """Vibrotactile vest engine and experiment bench."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--tick-ms", default=compiler.DEFAULT_TICK_MS, show_default=True, type=int)
@click.option("--patterns-dir", default=None, type=click.Path(exists=True, file_okay=False))
@click.option("--sessions-dir", default="sessions", show_default=True, type=click.Path(file_okay=False))
def serve(host: str, port: int, tick_ms: int, patterns_dir: str | None, sessions_dir: str) -> None:
    """Run the gateway (HTTP commands + frame/odometry streams)."""
    import uvicorn

    from .gateway.service import GatewaySettings, create_app

    app = create_app(
        GatewaySettings(tick_ms=tick_ms, patterns_dir=patterns_dir, sessions_dir=sessions_dir)
    )
    uvicorn.run(app, host=host, port=port)


@main.group()
def trial() -> None:
    """Run and analyze trial sessions."""


@trial.command("run")
@click.option("--strategy", type=click.Choice(STRATEGIES), default="semantic", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--participant", default="anonymous", show_default=True)
@click.option("--load", type=click.Choice(LOADS), default="none", show_default=True)
@click.option("--n-stimuli", type=int, default=8, show_default=True)
@click.option("--duration-ms", type=int, default=60_000, show_default=True)
@click.option("--min-gap-ms", type=int, default=2_000, show_default=True)
@click.option("--tick-ms", type=int, default=compiler.DEFAULT_TICK_MS, show_default=True)
@click.option("--odometry", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSONL odometry replay file feeding the direction channel.")
@click.option("--patterns-dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--sessions-dir", type=click.Path(file_okay=False), default=None,
              help="Archive the run as a session under this directory.")
@click.option("--responder", type=click.Choice(["none", "perfect"]), default="none",
              show_default=True, help="Synthetic participant for end-to-end smoke runs.")
@click.option("--latency-ms", type=int, default=1500, show_default=True)
def trial_run(strategy, seed, participant, load, n_stimuli, duration_ms, min_gap_ms, tick_ms,
              odometry, patterns_dir, sessions_dir, responder, latency_ms) -> None:
    """Headless deterministic trial run; prints a summary JSON."""
    samples = []
    if odometry:
        samples, rejected = load_odometry_jsonl(odometry)
        if rejected:
            click.echo(f"warning: skipped {rejected} malformed odometry lines", err=True)
    config = RunConfig(
        strategy=CodingStrategy(strategy),
        seed=seed,
        participant=participant,
        load=Load(load),
        n_stimuli=n_stimuli,
        duration_ms=duration_ms,
        min_gap_ms=min_gap_ms,
        tick_ms=tick_ms,
        patterns_dir=patterns_dir,
    )
    store = SessionStore(sessions_dir) if sessions_dir else None
    answer = constant_latency_responder(latency_ms) if responder == "perfect" else None
    result = run_trial(config, samples, responder=answer, store=store)
    summary = {
        "session": result.session_id,
        "stimuli": len(result.session.schedule.stimuli),
        "responses": len(result.session.responses),
        "frames": result.frames_csv.count("\n") - 1,
        "rejected_odometry": result.rejected,
    }
    click.echo(json.dumps(summary, indent=2))


@trial.command("analyze")
@click.option("--glob", "pattern", required=True,
              help="Glob of session logs, e.g. 'sessions/*/events.jsonl'.")
@click.option("--json", "as_json", is_flag=True, help="Emit the JSON report only.")
def trial_analyze(pattern: str, as_json: bool) -> None:
    """Aggregate accuracy/delay/confusion metrics over session logs."""
    paths = sorted(globlib.glob(pattern))
    if not paths:
        raise click.ClickException(f"no files match {pattern!r}")
    sessions = []
    for p in paths:
        try:
            sessions.append(session_from_jsonl(Path(p).read_text()))
        except Exception as exc:
            click.echo(f"warning: skipping {p}: {exc}", err=True)
    report = report_from_sessions(sessions)
    if as_json:
        click.echo(json.dumps(report, indent=2))
    else:
        click.echo(format_report_text(report))


@main.command("analyze")
@click.option("--glob", "pattern", required=True,
              help="Glob of session logs, e.g. 'sessions/*/events.jsonl'.")
@click.option("--json", "as_json", is_flag=True, help="Emit the JSON report only.")
@click.pass_context
def analyze_alias(ctx: click.Context, pattern: str, as_json: bool) -> None:
    """Alias for `trial analyze`."""
    ctx.invoke(trial_analyze, pattern=pattern, as_json=as_json)


@main.command()
@click.argument("session_id")
@click.option("--sessions-dir", default="sessions", show_default=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the frame CSV here (default: stdout).")
@click.option("--sink", type=click.Choice(["csv", "null"]), default="csv", show_default=True)
def replay(session_id: str, sessions_dir: str, out: str | None, sink: str) -> None:
    """Re-execute an archived session; the frame stream is bit-identical."""
    store = SessionStore(sessions_dir)
    try:
        csv_text = replay_session(store, session_id)
    except UnknownSession as exc:
        raise click.ClickException(str(exc))
    if sink == "null":
        click.echo(f"replayed {session_id} to null sink", err=True)
        return
    if out:
        Path(out).write_text(csv_text)
        click.echo(f"wrote {out}", err=True)
    else:
        click.echo(csv_text, nl=False)


@main.group()
def path() -> None:
    """Path-similarity scoring."""


@path.command("score")
@click.option("--record", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSON file with truth and drawn polylines.")
@click.option("--turn-tol-deg", type=float, default=path_eval.DEFAULT_TURN_TOL_DEG, show_default=True)
@click.option("--endpoint-tol-m", type=float, default=path_eval.DEFAULT_ENDPOINT_TOL_M, show_default=True)
def path_score(record: str, turn_tol_deg: float, endpoint_tol_m: float) -> None:
    """Score one drawn-vs-truth path record; emits PathScore JSON."""
    try:
        result = path_eval.score_record(
            record, turn_tol_deg=turn_tol_deg, endpoint_tol_m=endpoint_tol_m
        )
    except path_eval.DegeneratePath as exc:
        raise click.ClickException(f"degenerate path: {exc}")
    click.echo(json.dumps(result.to_dict(), indent=2))


@main.command("export-topology")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def export_topology_cmd(out: str | None) -> None:
    """Dump the vest geometry JSON consumed by the UI."""
    text = json.dumps(export_topology(), indent=2) + "\n"
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {out}", err=True)
    else:
        click.echo(text, nl=False)


@main.group()
def pattern() -> None:
    """Inspect compiled patterns."""


@pattern.command("dump")
@click.argument("name")
@click.option("--strategy", type=click.Choice(STRATEGIES + ["raw"]), default="semantic",
              show_default=True, help="'raw' treats NAME as a library pattern name.")
@click.option("--tick-ms", type=int, default=compiler.DEFAULT_TICK_MS, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--patterns-dir", type=click.Path(exists=True, file_okay=False), default=None)
def pattern_dump(name: str, strategy: str, tick_ms: int, fmt: str, patterns_dir: str | None) -> None:
    """Compile a pattern and dump its frames (CSV or WireFrame JSON list)."""
    library = load_library(patterns_dir)
    try:
        if strategy == "raw":
            spec = library.get(name)
        else:
            spec = library.pattern_for(EventKind(name), CodingStrategy(strategy))
    except (KeyError, ValueError):
        raise click.ClickException(f"unknown pattern {name!r}")
    seq = compiler.compile(spec, tick_ms)
    if fmt == "csv":
        click.echo(compiler.frames_to_csv(seq), nl=False)
    else:
        frames = [{"t": i * seq.tick_ms, "i": list(f)} for i, f in enumerate(seq.frames)]
        click.echo(json.dumps(frames))


@main.command("calibrate-north")
@click.option("--server", default="http://127.0.0.1:8000", show_default=True)
def calibrate_north_cmd(server: str) -> None:
    """Pin the direction channel's north on a running gateway."""
    import urllib.request

    req = urllib.request.Request(f"{server}/calibrate-north", method="POST", data=b"{}")
    req.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(req) as resp:
            click.echo(resp.read().decode())
    except Exception as exc:
        raise click.ClickException(f"calibration failed: {exc}")


if __name__ == "__main__":
    main()
