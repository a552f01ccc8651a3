"""HTTP service: sessions, messages, an SSE event stream, and the tool
inventory. All sessions share one registry, so a promotion in one session is
dispatchable from every other without a restart.

Endpoints:
    POST /sessions                    -> {"session_id"}
    POST /sessions/{id}/messages      -> {"reply", "status", ...}
    GET  /sessions/{id}/events        -> text/event-stream of trace events
    GET  /tools                       -> {"tools": [...]}
    GET  /health                      -> {"status": "ok"}
"""

from __future__ import annotations

import asyncio
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .config import Config
from .errors import ConfigurationError
from .kb import Registry
from .llm import (
    OpenAIProvider,
    Provider,
    RecordingProvider,
    ReplayProvider,
    Transcript,
)
from .pipeline import EventLog, Pipeline, PipelineConfig

import os


def build_provider(config: Config) -> Provider:
    """Provider per the configured kind; replay never touches the network."""
    settings = config.provider
    if settings.kind == "replay":
        if not settings.transcript_path:
            raise ConfigurationError("replay provider requires provider.transcript_path")
        return ReplayProvider(Transcript.load(Path(settings.transcript_path)))
    if settings.kind == "live":
        provider: Provider = OpenAIProvider(
            base_url=settings.base_url,
            model=settings.model,
            api_key=os.environ.get(settings.api_key_env),
        )
        if settings.record_path:
            provider = RecordingProvider(provider, Path(settings.record_path))
        return provider
    raise ConfigurationError(f"unknown provider kind: {settings.kind}")


@dataclass
class Session:
    id: str
    pipeline: Pipeline
    events: EventLog
    history: list[tuple[str, str]] = field(default_factory=list)
    busy: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)


class MessageBody(BaseModel):
    text: str


def create_app(config: Config) -> FastAPI:
    config.validate()
    app = FastAPI(title="toolforge")
    registry = Registry(config.kb_root, config.profile)
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()

    def new_session() -> Session:
        events = EventLog()
        pipeline = Pipeline(
            registry,
            build_provider(config),
            profile=config.profile,
            context_budget=config.context_budget,
            events=events,
        )
        session = Session(id=uuid.uuid4().hex, pipeline=pipeline, events=events)
        with sessions_lock:
            sessions[session.id] = session
        return session

    def get_session(session_id: str) -> Session:
        with sessions_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.get("/health")
    def health():
        return {"status": "ok", "kb_version": registry.snapshot.version}

    @app.get("/tools")
    def tools():
        snapshot = registry.snapshot
        return {
            "tools": [
                {
                    "name": d.name,
                    "description": d.description,
                    "provenance": d.provenance,
                }
                for d in sorted(snapshot.descriptors.values(), key=lambda d: d.name)
            ],
            "kb_version": snapshot.version,
        }

    @app.post("/sessions", status_code=201)
    def create_session():
        session = new_session()
        return {"session_id": session.id}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        session = get_session(session_id)
        if not body.text.strip():
            raise HTTPException(status_code=422, detail="empty message")
        pipeline_config = PipelineConfig(
            max_iterations=config.max_iterations,
            tdd_enabled=config.tdd_enabled,
            timeout_seconds=config.timeout_seconds,
        )
        with session.lock:  # one pipeline per session at a time
            session.busy = True
            try:
                session.history.append(("user", body.text))
                reply = session.pipeline.handle_request(
                    body.text, pipeline_config, history=tuple(session.history[:-1])
                )
                session.history.append(("assistant", reply))
            finally:
                session.busy = False
        return {
            "reply": reply,
            "events_count": len(session.events.events),
            "kb_version": registry.snapshot.version,
        }

    @app.get("/sessions/{session_id}/events")
    async def event_stream(session_id: str, after: int = 0):
        session = get_session(session_id)

        async def generate():
            cursor = after
            idle_polls = 0
            while True:
                events = session.events.events
                new = [e for e in events if e.sequence > cursor]
                for event in new:
                    cursor = event.sequence
                    payload = json.dumps(event.to_wire())
                    yield f"id: {event.sequence}\ndata: {payload}\n\n"
                if new:
                    idle_polls = 0
                elif not session.busy:
                    idle_polls += 1
                    if idle_polls >= 2:  # drained and idle: close the stream
                        yield "event: done\ndata: {}\n\n"
                        return
                await asyncio.sleep(0.05)

        return StreamingResponse(generate(), media_type="text/event-stream")

    return app
