"""HTTP surface: session lifecycle, replay-backed messages, the tool
inventory, SSE event streaming, and cross-session hot availability."""

import json

import pytest
from fastapi.testclient import TestClient

from helpers import (
    double_number_success_entries,
    make_transcript,
    propose_entry,
    seed_matrix_operations,
    text_entry,
    tool_entry,
)

from toolforge.config import Config, ProviderSettings
from toolforge.errors import ConfigurationError
from toolforge.service import build_provider, create_app


def end_to_end_entries(rejects=0):
    return [
        propose_entry("double_number", "double a number"),
        *double_number_success_entries(rejects=rejects),
        tool_entry("dispatcher", "double_number", {"x": 21}),
        text_entry("dispatcher", "Double of 21 is 42."),
    ]


@pytest.fixture
def service(tmp_path):
    transcript_path = tmp_path / "transcript.jsonl"
    make_transcript(end_to_end_entries()).save(transcript_path)
    config = Config(
        kb_root=tmp_path / "kb",
        provider=ProviderSettings(kind="replay", transcript_path=str(transcript_path)),
        timeout_seconds=10,
    )
    app = create_app(config)
    return TestClient(app), transcript_path


def test_health(service):
    client, _ = service
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_build_provider_replay_requires_transcript(tmp_path):
    config = Config(
        kb_root=tmp_path / "kb",
        provider=ProviderSettings(kind="replay", transcript_path=None),
    )
    with pytest.raises(ConfigurationError):
        build_provider(config)


def test_session_create_and_message_round_trip(service):
    client, _ = service
    created = client.post("/sessions")
    assert created.status_code == 201
    session_id = created.json()["session_id"]

    response = client.post(f"/sessions/{session_id}/messages", json={"text": "please double 21"})
    assert response.status_code == 200
    body = response.json()
    assert body["reply"] == "Double of 21 is 42."
    assert body["events_count"] > 0
    assert body["kb_version"] > 0


def test_tools_endpoint_reflects_promotion(service):
    client, _ = service
    before = client.get("/tools").json()
    assert before["tools"] == []

    session_id = client.post("/sessions").json()["session_id"]
    client.post(f"/sessions/{session_id}/messages", json={"text": "please double 21"})

    after = client.get("/tools").json()
    names = [t["name"] for t in after["tools"]]
    assert names == ["double_number"]
    assert after["tools"][0]["provenance"] == "evolved"
    assert after["kb_version"] > before["kb_version"]


def test_promotion_visible_to_later_sessions_without_restart(service):
    client, transcript_path = service
    first = client.post("/sessions").json()["session_id"]
    client.post(f"/sessions/{first}/messages", json={"text": "please double 21"})

    # second session gets its own replay source: a plain dispatch to the tool
    # the first session evolved; the shared registry makes it callable
    make_transcript(
        [
            tool_entry("dispatcher", "double_number", {"x": 5}),
            text_entry("dispatcher", "Double of 5 is 10."),
        ]
    ).save(transcript_path)
    second = client.post("/sessions").json()["session_id"]
    response = client.post(f"/sessions/{second}/messages", json={"text": "please double 5"})
    assert response.json()["reply"] == "Double of 5 is 10."


def test_event_stream_orders_events_and_terminates(service):
    client, _ = service
    session_id = client.post("/sessions").json()["session_id"]
    client.post(f"/sessions/{session_id}/messages", json={"text": "please double 21"})

    events = []
    done = False
    with client.stream("GET", f"/sessions/{session_id}/events") as response:
        assert response.headers["content-type"].startswith("text/event-stream")
        for line in response.iter_lines():
            if line.startswith("data: ") and not done:
                events.append(json.loads(line[len("data: "):]))
            if line.startswith("event: done"):
                done = True
    assert done
    meaningful = [e for e in events if e]
    sequences = [e["sequence"] for e in meaningful]
    assert sequences == sorted(sequences)
    kinds = [e["kind"] for e in meaningful]
    assert kinds[0] == "dispatched"
    assert "promoted" in kinds
    assert kinds[-1] == "responded"


def test_event_stream_resumes_after_cursor(service):
    client, _ = service
    session_id = client.post("/sessions").json()["session_id"]
    client.post(f"/sessions/{session_id}/messages", json={"text": "please double 21"})
    total = client.get("/health")  # no-op request keeps client warm

    with client.stream("GET", f"/sessions/{session_id}/events") as response:
        all_ids = [
            int(line[len("id: "):])
            for line in response.iter_lines()
            if line.startswith("id: ")
        ]
    cursor = all_ids[2]
    with client.stream("GET", f"/sessions/{session_id}/events?after={cursor}") as response:
        resumed = [
            int(line[len("id: "):])
            for line in response.iter_lines()
            if line.startswith("id: ")
        ]
    assert resumed == [i for i in all_ids if i > cursor]


def test_unknown_session_is_404(service):
    client, _ = service
    assert client.post("/sessions/nope/messages", json={"text": "hi"}).status_code == 404
    assert client.get("/sessions/nope/events").status_code == 404


def test_empty_and_malformed_messages_rejected(service):
    client, _ = service
    session_id = client.post("/sessions").json()["session_id"]
    assert (
        client.post(f"/sessions/{session_id}/messages", json={"text": "   "}).status_code == 422
    )
    assert client.post(f"/sessions/{session_id}/messages", json={}).status_code == 422


def test_seeded_kb_listed_with_provenance(tmp_path):
    seed_matrix_operations(tmp_path / "kb")
    transcript_path = tmp_path / "transcript.jsonl"
    make_transcript([]).save(transcript_path)
    config = Config(
        kb_root=tmp_path / "kb",
        provider=ProviderSettings(kind="replay", transcript_path=str(transcript_path)),
    )
    client = TestClient(create_app(config))
    tools = client.get("/tools").json()["tools"]
    assert [t["name"] for t in tools] == ["matrix_operations"]
    assert tools[0]["provenance"] == "seeded"
