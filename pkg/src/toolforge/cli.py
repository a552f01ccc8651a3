"""Command-line shell: interactive chat, HTTP service, and the evaluation
harness. Exit codes: 0 success, 1 runtime failure, 2 configuration error."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import Config, load_config
from .errors import ConfigurationError, ToolforgeError
from .evalharness import (
    discover_problems,
    render_table,
    report_to_json,
    run_benchmark,
    summarize,
)
from .kb import Registry
from .pipeline import EventLog, Pipeline, PipelineConfig
from .service import build_provider, create_app


def _load(config_path: str | None) -> Config:
    try:
        cfg = load_config(Path(config_path) if config_path else None)
        cfg.validate()
        return cfg
    except ConfigurationError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(2)


@click.group()
def main():
    """Runtime self-extension engine."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--verbose", is_flag=True, help="print pipeline events as they occur")
def chat(config_path, verbose):
    """Interactive REPL against the configured knowledge base."""
    cfg = _load(config_path)
    registry = Registry(cfg.kb_root, cfg.profile)
    events = EventLog()
    pipeline = Pipeline(
        registry,
        build_provider(cfg),
        profile=cfg.profile,
        context_budget=cfg.context_budget,
        events=events,
    )
    pipeline_config = PipelineConfig(
        max_iterations=cfg.max_iterations,
        tdd_enabled=cfg.tdd_enabled,
        timeout_seconds=cfg.timeout_seconds,
    )
    history: list[tuple[str, str]] = []
    click.echo("toolforge chat (EOF to exit)")
    while True:
        try:
            line = input("> ")
        except EOFError:
            click.echo("")
            break
        if not line.strip():
            continue
        seen = len(events.events)
        try:
            reply = pipeline.handle_request(line, pipeline_config, history=tuple(history))
        except ToolforgeError as exc:
            click.echo(f"error: {exc}", err=True)
            continue
        if verbose:
            for event in events.events[seen:]:
                click.echo(f"  [{event.sequence}] {event.kind} {json.dumps(event.payload)}")
        history.append(("user", line))
        history.append(("assistant", reply))
        click.echo(reply)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, host, port):
    """Run the HTTP service hosting sessions and the event stream."""
    import uvicorn

    cfg = _load(config_path)
    app = create_app(cfg)
    try:
        uvicorn.run(app, host=host or cfg.listen_host, port=port or cfg.listen_port)
    except OSError as exc:
        click.echo(f"startup error: {exc}", err=True)
        sys.exit(2)


@main.command(name="eval")
@click.option("--problems", "problems_dir", type=click.Path(exists=True), required=True)
@click.option("--runs", default=5, show_default=True)
@click.option("--no-tdd", is_flag=True, help="ablation: skip test-first generation")
@click.option("--max-iterations", default=6, show_default=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def eval_command(problems_dir, runs, no_tdd, max_iterations, report_path, config_path):
    """Run the benchmark over a problem directory and print a results table."""
    cfg = _load(config_path)
    pipeline_config = PipelineConfig(
        max_iterations=max_iterations,
        tdd_enabled=not no_tdd,
        timeout_seconds=cfg.timeout_seconds,
    )
    try:
        problems = discover_problems(Path(problems_dir))
        outcomes = run_benchmark(
            problems, k=runs, config=pipeline_config, profile=cfg.profile
        )
    except ToolforgeError as exc:
        click.echo(f"evaluation failed: {exc}", err=True)
        sys.exit(1)
    summary = summarize(outcomes)
    click.echo(render_table(summary))
    if report_path:
        Path(report_path).write_text(
            json.dumps(report_to_json(summary, outcomes), indent=2) + "\n"
        )
        click.echo(f"report written to {report_path}")


if __name__ == "__main__":
    main()
