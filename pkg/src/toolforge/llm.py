"""Model gateway: one completion contract, two providers.

The live provider speaks the OpenAI-compatible chat-completions wire protocol
(``tools`` / ``tool_calls`` fields). The replay provider serves a prerecorded
transcript for deterministic offline runs; it never falls back to the network.
Transcript files are line-delimited JSON, one entry per line.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from .errors import (
    GatewayError,
    ProtocolViolationError,
    RoleMismatchError,
    TranscriptExhaustedError,
)
from .kb import COMPONENT_ROLES, ToolDescriptor


@dataclass(frozen=True)
class ModelRequest:
    component_role: str
    system_prompt: str
    messages: tuple[tuple[str, str], ...]  # (role, text)
    tools: tuple[ToolDescriptor, ...] | None = None
    temperature: float = 0.0

    def __post_init__(self):
        if self.component_role not in COMPONENT_ROLES:
            raise ValueError(f"unknown component role: {self.component_role}")
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.tools is not None and self.component_role != "dispatcher":
            raise ValueError("tools are only attached to dispatcher requests")


@dataclass(frozen=True)
class ToolCall:
    name: str
    arguments: dict


@dataclass(frozen=True)
class ModelResponse:
    kind: str  # "text" | "tool_call"
    text: str | None = None
    tool_call: ToolCall | None = None

    def __post_init__(self):
        if self.kind == "text":
            if self.text is None or self.tool_call is not None:
                raise ValueError("text response must carry text only")
        elif self.kind == "tool_call":
            if self.tool_call is None or self.text is not None:
                raise ValueError("tool_call response must carry a tool call only")
        else:
            raise ValueError(f"unknown response kind: {self.kind}")

    def to_wire(self) -> dict:
        if self.kind == "text":
            return {"kind": "text", "text": self.text}
        return {
            "kind": "tool_call",
            "tool_call": {"name": self.tool_call.name, "arguments": self.tool_call.arguments},
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "ModelResponse":
        if doc.get("kind") == "text":
            return cls(kind="text", text=doc["text"])
        call = doc["tool_call"]
        return cls(kind="tool_call", tool_call=ToolCall(call["name"], dict(call["arguments"])))


@dataclass(frozen=True)
class TranscriptEntry:
    expected_role: str
    response: ModelResponse


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)

    def append(self, expected_role: str, response: ModelResponse) -> None:
        self.entries.append(TranscriptEntry(expected_role, response))

    def save(self, path: Path) -> None:
        lines = [
            json.dumps({"expected_role": e.expected_role, "response": e.response.to_wire()})
            for e in self.entries
        ]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def load(cls, path: Path) -> "Transcript":
        entries = []
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            doc = json.loads(line)
            entries.append(
                TranscriptEntry(doc["expected_role"], ModelResponse.from_wire(doc["response"]))
            )
        return cls(entries)


class Provider(Protocol):
    def complete(self, request: ModelRequest) -> ModelResponse: ...


def _check_tool_call(request: ModelRequest, response: ModelResponse) -> ModelResponse:
    if response.kind == "tool_call":
        known = {t.name for t in (request.tools or ())}
        if response.tool_call.name not in known:
            raise ProtocolViolationError(
                f"model called unknown tool: {response.tool_call.name}"
            )
    return response


class ReplayProvider:
    """Serves a transcript strictly in order, one entry per complete() call.

    Bound to a single session; each call asserts the request's component role
    matches the recorded entry. Exhaustion is an explicit error, never a
    silent fallback to live calls.
    """

    def __init__(self, transcript: Transcript):
        self._entries = list(transcript.entries)
        self._index = 0
        self._lock = threading.Lock()

    @property
    def remaining(self) -> int:
        with self._lock:
            return len(self._entries) - self._index

    def complete(self, request: ModelRequest) -> ModelResponse:
        with self._lock:
            if self._index >= len(self._entries):
                raise TranscriptExhaustedError(
                    f"transcript exhausted at call {self._index + 1} "
                    f"(role {request.component_role})"
                )
            entry = self._entries[self._index]
            self._index += 1
        if entry.expected_role != request.component_role:
            raise RoleMismatchError(
                f"transcript entry {self._index} expected role "
                f"{entry.expected_role!r}, got {request.component_role!r}"
            )
        return _check_tool_call(request, entry.response)


class OpenAIProvider:
    """Stateless chat-completions client; all context travels in the request."""

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str | None = None,
        max_retries: int = 3,
        backoff_seconds: float = 1.0,
        timeout: float = 120.0,
        client: httpx.Client | None = None,
        sleep=time.sleep,
    ):
        self.model = model
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self._sleep = sleep
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = client or httpx.Client(
            base_url=base_url.rstrip("/"), headers=headers, timeout=timeout
        )

    def _payload(self, request: ModelRequest) -> dict:
        messages = [{"role": "system", "content": request.system_prompt}]
        messages += [{"role": role, "content": text} for role, text in request.messages]
        payload: dict = {
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
        }
        if request.tools:
            payload["tools"] = [
                {"type": "function", "function": t.to_wire()["function"]} for t in request.tools
            ]
            payload["tool_choice"] = "required"
        return payload

    def complete(self, request: ModelRequest) -> ModelResponse:
        payload = self._payload(request)
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            if attempt:
                self._sleep(self.backoff_seconds * 2 ** (attempt - 1))
            try:
                resp = self._client.post("/chat/completions", json=payload)
                if resp.status_code >= 500:
                    last_error = GatewayError(f"server error {resp.status_code}")
                    continue
                resp.raise_for_status()
                return _check_tool_call(request, self._parse(resp.json()))
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last_error = exc
        raise GatewayError(f"model call failed after {self.max_retries} attempts: {last_error}")

    @staticmethod
    def _parse(doc: dict) -> ModelResponse:
        try:
            message = doc["choices"][0]["message"]
        except (KeyError, IndexError) as exc:
            raise GatewayError(f"malformed completion response: {exc}") from exc
        calls = message.get("tool_calls")
        if calls:
            fn = calls[0]["function"]
            arguments = fn.get("arguments", "{}")
            if isinstance(arguments, str):
                try:
                    arguments = json.loads(arguments or "{}")
                except json.JSONDecodeError as exc:
                    raise GatewayError(f"unparseable tool arguments: {exc}") from exc
            return ModelResponse(kind="tool_call", tool_call=ToolCall(fn["name"], arguments))
        content = message.get("content")
        if content is None:
            raise GatewayError("completion carries neither content nor tool_calls")
        return ModelResponse(kind="text", text=content)


class RecordingProvider:
    """Tees every (request role, response) pair to a transcript file."""

    def __init__(self, inner: Provider, path: Path):
        self._inner = inner
        self._path = Path(path)
        self._lock = threading.Lock()

    def complete(self, request: ModelRequest) -> ModelResponse:
        response = self._inner.complete(request)
        line = json.dumps(
            {"expected_role": request.component_role, "response": response.to_wire()}
        )
        with self._lock:
            with self._path.open("a") as fh:
                fh.write(line + "\n")
        return response


class SpyProvider:
    """Wraps a provider and captures every request; used by tests to assert
    feedback threading and prompt payloads."""

    def __init__(self, inner: Provider):
        self._inner = inner
        self.requests: list[ModelRequest] = []

    def complete(self, request: ModelRequest) -> ModelResponse:
        self.requests.append(request)
        return self._inner.complete(request)
