"""Gateway: replay ordering, live wire protocol, retries, recording."""

import json

import httpx
import pytest

from helpers import text_entry, tool_entry

from toolforge.errors import (
    GatewayError,
    ProtocolViolationError,
    RoleMismatchError,
    TranscriptExhaustedError,
)
from toolforge.kb import ToolDescriptor
from toolforge.llm import (
    ModelRequest,
    ModelResponse,
    OpenAIProvider,
    RecordingProvider,
    ReplayProvider,
    ToolCall,
    Transcript,
)

A_TOOL = ToolDescriptor(
    name="matrix_operations",
    description="multiply",
    parameters_schema={"type": "object"},
    function_file="functions/matrix_operations.py",
    entrypoint="matrix_operations",
)


def req(role="tdd_generator", tools=None):
    return ModelRequest(
        component_role=role,
        system_prompt="sys",
        messages=(("user", "hi"),),
        tools=tools,
    )


def test_model_request_invariants():
    with pytest.raises(ValueError):
        ModelRequest(component_role="tdd_generator", system_prompt="", messages=())
    with pytest.raises(ValueError):
        # tools only on dispatcher requests
        ModelRequest(
            component_role="tdd_generator",
            system_prompt="",
            messages=(("user", "x"),),
            tools=(A_TOOL,),
        )


def test_model_response_exactly_one_payload():
    with pytest.raises(ValueError):
        ModelResponse(kind="text", text=None)
    with pytest.raises(ValueError):
        ModelResponse(kind="tool_call", text="x", tool_call=ToolCall("a", {}))


def test_replay_serves_in_order_then_exhausts():
    transcript = Transcript(
        [text_entry("tdd_generator", "one"), text_entry("tdd_generator", "two"),
         text_entry("tdd_generator", "three")]
    )
    provider = ReplayProvider(transcript)
    assert [provider.complete(req()).text for _ in range(3)] == ["one", "two", "three"]
    with pytest.raises(TranscriptExhaustedError):
        provider.complete(req())


def test_replay_empty_transcript_errors_immediately():
    provider = ReplayProvider(Transcript([]))
    with pytest.raises(TranscriptExhaustedError):
        provider.complete(req())


def test_replay_role_mismatch():
    provider = ReplayProvider(Transcript([text_entry("function_generator", "src")]))
    with pytest.raises(RoleMismatchError):
        provider.complete(req(role="tdd_generator"))


def test_replay_tool_call_with_matching_tool():
    provider = ReplayProvider(
        Transcript([tool_entry("dispatcher", "matrix_operations", {"a": [], "b": []})])
    )
    response = provider.complete(req(role="dispatcher", tools=(A_TOOL,)))
    assert response.kind == "tool_call"
    assert response.tool_call.name == "matrix_operations"


def test_replay_unknown_tool_is_protocol_violation():
    provider = ReplayProvider(Transcript([tool_entry("dispatcher", "nope", {})]))
    with pytest.raises(ProtocolViolationError):
        provider.complete(req(role="dispatcher", tools=(A_TOOL,)))


def test_transcript_file_round_trip(tmp_path):
    transcript = Transcript(
        [text_entry("tdd_generator", "body"), tool_entry("dispatcher", "t", {"x": 1})]
    )
    path = tmp_path / "t.jsonl"
    transcript.save(path)
    loaded = Transcript.load(path)
    assert loaded.entries == transcript.entries
    # line-delimited JSON, one entry per line
    assert len(path.read_text().strip().splitlines()) == 2


def _mock_live(handler):
    transport = httpx.MockTransport(handler)
    client = httpx.Client(base_url="http://model.test/v1", transport=transport)
    return OpenAIProvider(
        base_url="http://model.test/v1", model="m", client=client, sleep=lambda _s: None
    )


def test_live_parses_text_completion():
    def handler(request):
        payload = json.loads(request.content)
        assert payload["messages"][0]["role"] == "system"
        return httpx.Response(
            200, json={"choices": [{"message": {"content": "hello"}}]}
        )

    provider = _mock_live(handler)
    assert provider.complete(req()).text == "hello"


def test_live_parses_tool_call_and_sends_tools():
    def handler(request):
        payload = json.loads(request.content)
        assert payload["tools"][0]["function"]["name"] == "matrix_operations"
        return httpx.Response(
            200,
            json={
                "choices": [
                    {
                        "message": {
                            "content": None,
                            "tool_calls": [
                                {
                                    "function": {
                                        "name": "matrix_operations",
                                        "arguments": json.dumps({"a": [[1]], "b": [[2]]}),
                                    }
                                }
                            ],
                        }
                    }
                ]
            },
        )

    provider = _mock_live(handler)
    response = provider.complete(req(role="dispatcher", tools=(A_TOOL,)))
    assert response.tool_call.arguments == {"a": [[1]], "b": [[2]]}


def test_live_retries_then_surfaces_gateway_error():
    calls = []

    def handler(request):
        calls.append(1)
        raise httpx.ConnectError("down")

    provider = _mock_live(handler)
    with pytest.raises(GatewayError):
        provider.complete(req())
    assert len(calls) == 3


def test_live_recovers_after_transient_failure():
    calls = []

    def handler(request):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(500, json={})
        return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

    provider = _mock_live(handler)
    assert provider.complete(req()).text == "ok"


def test_recording_then_replay_round_trip(tmp_path):
    def handler(request):
        return httpx.Response(200, json={"choices": [{"message": {"content": "pong"}}]})

    path = tmp_path / "rec.jsonl"
    recorder = RecordingProvider(_mock_live(handler), path)
    first = recorder.complete(req())
    assert first.text == "pong"

    replay = ReplayProvider(Transcript.load(path))
    assert replay.complete(req()).text == "pong"
    with pytest.raises(TranscriptExhaustedError):
        replay.complete(req())


def test_providers_are_stateless_across_interleaved_sessions():
    # two replay sessions keyed separately: interleaving does not change outputs
    t_a = Transcript([text_entry("tdd_generator", f"a{i}") for i in range(3)])
    t_b = Transcript([text_entry("tdd_generator", f"b{i}") for i in range(3)])
    a, b = ReplayProvider(t_a), ReplayProvider(t_b)
    out = [a.complete(req()).text, b.complete(req()).text, a.complete(req()).text,
           b.complete(req()).text, b.complete(req()).text, a.complete(req()).text]
    assert out == ["a0", "b0", "a1", "b1", "b2", "a2"]
