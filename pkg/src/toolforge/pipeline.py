"""Deterministic control flow: dispatch, the iterative evolve loop with a
shared reject budget, atomic KB promotion, and the user-facing reply.

Budget accounting: every intermediate reject, final reject, format error, and
promotion collision consumes one unit; the loop terminates for any model
behavior once ``max_iterations`` units are consumed. ``iterations_used``
counts function-generation invocations, so a first-try success is 1.

Failure purity: a run that does not end in ``accepted`` never mutates the KB.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .adjudicate import Feedback, adjudicate, aggregate_feedback
from .config import TargetProfile
from .context import ContextPackage, build_generation_context
from .errors import (
    CodeExtractionError,
    GatewayError,
    KnowledgeBaseError,
    NameCollisionError,
    ProtocolViolationError,
    SandboxError,
)
from .generate import CodeGenerator, GeneratedFunction, Requirement
from .kb import Registry, ToolDescriptor
from .llm import ModelRequest, Provider
from .sandbox import ExecutionReport, SandboxSpec, run_script, run_tool

EVENT_KINDS = (
    "dispatched",
    "tdd_generated",
    "function_generated",
    "intermediate_verdict",
    "unit_tests_generated",
    "final_verdict",
    "promoted",
    "responded",
    "failed",
)

PROPOSE_TOOL = ToolDescriptor(
    name="propose_new_function",
    description=(
        "Propose creating a new function when no registered tool satisfies the "
        "request. Provide a snake_case function_name and a one-sentence "
        "requirement."
    ),
    parameters_schema={
        "type": "object",
        "properties": {
            "function_name": {"type": "string"},
            "requirement": {"type": "string"},
        },
        "required": ["function_name", "requirement"],
    },
    function_file="builtin",
    entrypoint="propose_new_function",
)


@dataclass(frozen=True)
class PipelineConfig:
    max_iterations: int = 6
    tdd_enabled: bool = True
    timeout_seconds: int = 30

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class PipelineEvent:
    sequence: int
    kind: str
    payload: dict

    def to_wire(self) -> dict:
        return {"sequence": self.sequence, "kind": self.kind, "payload": self.payload}


class EventLog:
    """Per-session append-only trace with strictly increasing sequence."""

    def __init__(self):
        self.events: list[PipelineEvent] = []
        self._seq = 0
        self._lock = threading.Lock()

    def emit(self, kind: str, **payload) -> PipelineEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind: {kind}")
        with self._lock:
            self._seq += 1
            event = PipelineEvent(sequence=self._seq, kind=kind, payload=payload)
            self.events.append(event)
        return event


@dataclass(frozen=True)
class DispatchDecision:
    kind: str  # "existing_tool" | "new_requirement"
    tool_call: tuple[str, dict] | None = None
    requirement: Requirement | None = None

    def __post_init__(self):
        populated = (self.tool_call is not None) + (self.requirement is not None)
        if populated != 1 or (self.kind == "existing_tool") != (self.tool_call is not None):
            raise ValueError("exactly one of tool_call / requirement must match kind")


@dataclass(frozen=True)
class PipelineOutcome:
    status: str  # "accepted" | "budget_exhausted" | "infrastructure_failure"
    iterations_used: int
    promoted_tool: str | None
    events: tuple[PipelineEvent, ...]


def _descriptor_for(function: GeneratedFunction, requirement: Requirement,
                    profile: TargetProfile) -> ToolDescriptor:
    """Parameter schema derived from the entrypoint's parameter list."""
    match = re.search(
        rf"^(?:async\s+)?def\s+{re.escape(function.name)}\s*\((.*?)\)", function.source, re.M
    )
    params = []
    required = []
    if match:
        for raw in match.group(1).split(","):
            raw = raw.strip()
            if not raw or raw.startswith(("*", "/")):
                continue
            name = raw.split(":")[0].split("=")[0].strip()
            if not name:
                continue
            params.append(name)
            if "=" not in raw:
                required.append(name)
    schema = {
        "type": "object",
        "properties": {p: {} for p in params},
        "required": required,
    }
    return ToolDescriptor(
        name=function.name,
        description=requirement.requirement_text,
        parameters_schema=schema,
        function_file=f"functions/{function.name}{profile.source_extension}",
        entrypoint=function.name,
        provenance="evolved",
    )


def _routing_hint(requirement: Requirement) -> str:
    phrase = requirement.requirement_text.strip().rstrip(".").lower()
    return f"When asked to {phrase}, call {requirement.function_name}"


class Pipeline:
    """One session runs at most one pipeline at a time; promotions serialize
    on the registry's writer lock."""

    def __init__(
        self,
        registry: Registry,
        gateway: Provider,
        profile: TargetProfile | None = None,
        codebase_root: Path | None = None,
        context_package: ContextPackage | None = None,
        context_budget: int = 8000,
        events: EventLog | None = None,
        script_runner: Callable[..., ExecutionReport] | None = None,
    ):
        self.registry = registry
        self.gateway = gateway
        self.profile = profile or registry.profile
        self.codebase_root = codebase_root
        self.context_package = context_package
        self.context_budget = context_budget
        self.events = events or EventLog()
        self._run_script = script_runner or run_script

    # -- dispatch ----------------------------------------------------------

    def dispatch(self, user_message: str,
                 history: tuple[tuple[str, str], ...] = ()) -> DispatchDecision:
        """Route a message to an existing tool or a new-function requirement.

        The built-in proposal tool makes the model's output uniformly a
        structured call; a malformed reply is re-prompted once, then fails.
        """
        snapshot = self.registry.snapshot
        tools = tuple(snapshot.descriptors[n] for n in sorted(snapshot.descriptors))
        tools += (PROPOSE_TOOL,)
        prompt = snapshot.prompts["dispatcher"].render()
        messages = history + (("user", user_message),)

        last_error = "model did not return a tool call"
        for attempt in range(2):
            if attempt:
                messages = messages + (
                    ("user", f"Invalid reply ({last_error}); call one of the listed tools."),
                )
            try:
                response = self.gateway.complete(
                    ModelRequest(
                        component_role="dispatcher",
                        system_prompt=prompt,
                        messages=messages,
                        tools=tools,
                    )
                )
            except ProtocolViolationError as exc:
                last_error = str(exc)
                continue
            if response.kind != "tool_call":
                last_error = "model returned prose instead of a tool call"
                continue
            call = response.tool_call
            if call.name == PROPOSE_TOOL.name:
                requirement = Requirement(
                    function_name=str(call.arguments.get("function_name", "")),
                    requirement_text=str(call.arguments.get("requirement", "")),
                    origin_request=user_message,
                )
                decision = DispatchDecision(kind="new_requirement", requirement=requirement)
            else:
                decision = DispatchDecision(
                    kind="existing_tool", tool_call=(call.name, dict(call.arguments))
                )
            self.events.emit(
                "dispatched",
                decision=decision.kind,
                tool=call.name if decision.kind == "existing_tool" else None,
                function_name=(
                    decision.requirement.function_name if decision.requirement else None
                ),
            )
            return decision
        raise ProtocolViolationError(f"dispatch failed after re-prompt: {last_error}")

    # -- evolve loop -------------------------------------------------------

    def _build_context(self) -> str:
        return build_generation_context(
            None, self.registry.snapshot, self.context_package, budget=self.context_budget
        )

    def _sandbox_spec(self, config: PipelineConfig) -> SandboxSpec:
        entries: list[Path] = [self.registry.root / "functions"]
        if self.codebase_root is not None:
            entries.append(Path(self.codebase_root))
        return SandboxSpec(
            module_path_entries=tuple(entries),
            timeout_seconds=config.timeout_seconds,
        )

    def evolve(self, requirement: Requirement, config: PipelineConfig) -> PipelineOutcome:
        """Iterative test-first generation loop ending in atomic promotion.

        Test-first mode restarts every rejected cycle from test generation
        with the accumulated feedback; the ablated mode goes straight from
        function generation to final validation.
        """
        if self.registry.lookup(requirement.function_name) is not None:
            raise KnowledgeBaseError(
                f"cannot evolve already-registered tool: {requirement.function_name}"
            )
        events = self.events
        start_len = len(events.events)
        snapshot = self.registry.snapshot
        generator = CodeGenerator(self.gateway, dict(snapshot.prompts), self.profile)

        consumed = 0
        iterations_used = 0
        attempt = 0
        feedback: Feedback | None = None
        history: list[Feedback] = []

        def fold(new: Feedback) -> Feedback:
            nonlocal feedback
            feedback = aggregate_feedback(history, new)
            history.append(new)
            return feedback

        def outcome(status: str, promoted: str | None = None) -> PipelineOutcome:
            return PipelineOutcome(
                status=status,
                iterations_used=iterations_used,
                promoted_tool=promoted,
                events=tuple(events.events[start_len:]),
            )

        try:
            while consumed < config.max_iterations:
                attempt += 1
                snapshot = self.registry.snapshot
                prompts = dict(snapshot.prompts)
                context = build_generation_context(
                    requirement, snapshot, self.context_package, budget=self.context_budget
                )

                tdd = None
                try:
                    if config.tdd_enabled:
                        tdd = generator.generate_tdd_tests(requirement, feedback, context)
                        events.emit(
                            "tdd_generated", iteration=attempt, case_count=len(tdd.cases)
                        )
                    function = generator.generate_function(
                        requirement,
                        tdd,
                        context,
                        kb=snapshot,
                        iteration=attempt,
                        feedback=None if config.tdd_enabled else feedback,
                    )
                    iterations_used += 1
                    events.emit("function_generated", iteration=attempt, name=function.name)
                except CodeExtractionError as exc:
                    # Format failures share the budget and synthesize feedback.
                    consumed += 1
                    fold(Feedback(text=str(exc), iteration=attempt))
                    continue

                spec = self._sandbox_spec(config)
                function_file = f"{function.name}{self.profile.source_extension}"

                if tdd is not None:
                    report = self._run_script(
                        spec,
                        [(function_file, function.source), ("_tdd_tests.py", tdd.script)],
                        [*self.profile.interpreter, "_tdd_tests.py"],
                    )
                    verdict = adjudicate(
                        "intermediate", report, tdd.script, self.gateway, prompts, attempt
                    )
                    events.emit(
                        "intermediate_verdict",
                        iteration=attempt,
                        decision=verdict.decision,
                        exit_code=report.exit_code,
                        timed_out=report.timed_out,
                    )
                    if verdict.decision == "reject":
                        consumed += 1
                        fold(verdict.feedback)
                        continue

                unit = generator.generate_unit_tests(function, requirement)
                events.emit("unit_tests_generated", iteration=attempt)
                report = self._run_script(
                    self._sandbox_spec(config),
                    [(function_file, function.source), ("_unit_tests.py", unit.script)],
                    [*self.profile.interpreter, "_unit_tests.py"],
                )
                verdict = adjudicate(
                    "final", report, unit.script, self.gateway, prompts, attempt
                )
                events.emit(
                    "final_verdict",
                    iteration=attempt,
                    decision=verdict.decision,
                    exit_code=report.exit_code,
                    timed_out=report.timed_out,
                )
                if verdict.decision == "reject":
                    consumed += 1
                    fold(verdict.feedback)
                    continue

                descriptor = _descriptor_for(function, requirement, self.profile)
                try:
                    new_snapshot = self.registry.promote(
                        function.name, function.source, descriptor, _routing_hint(requirement)
                    )
                except NameCollisionError as exc:
                    consumed += 1
                    fold(Feedback(text=f"name already taken: {exc}", iteration=attempt))
                    continue
                events.emit("promoted", name=function.name, version=new_snapshot.version)
                return outcome("accepted", promoted=function.name)
            return outcome("budget_exhausted")
        except (GatewayError, SandboxError) as exc:
            events.emit("failed", reason=str(exc))
            return outcome("infrastructure_failure")

    # -- request handling --------------------------------------------------

    def handle_request(
        self,
        user_message: str,
        config: PipelineConfig | None = None,
        history: tuple[tuple[str, str], ...] = (),
    ) -> str:
        """Full request cycle: dispatch, optionally evolve, invoke, reply."""
        config = config or PipelineConfig()
        try:
            decision = self.dispatch(user_message, history)
        except (GatewayError, ProtocolViolationError) as exc:
            self.events.emit("failed", reason=str(exc))
            return f"I could not interpret that request ({exc})."

        if decision.kind == "new_requirement":
            existing = self.registry.lookup(decision.requirement.function_name)
            if existing is None:
                outcome = self.evolve(decision.requirement, config)
                if outcome.status != "accepted":
                    reason = (
                        "the generation budget was exhausted"
                        if outcome.status == "budget_exhausted"
                        else "an infrastructure failure interrupted generation"
                    )
                    self.events.emit(
                        "failed", reason=outcome.status, iterations=outcome.iterations_used
                    )
                    return (
                        f"I could not create the capability "
                        f"'{decision.requirement.function_name}': {reason} after "
                        f"{outcome.iterations_used} generation attempt(s). "
                        f"See the event trace for details."
                    )
            # Re-dispatch so the (now) registered tool is invoked with the
            # user's original input.
            try:
                decision = self.dispatch(user_message, history)
            except (GatewayError, ProtocolViolationError) as exc:
                self.events.emit("failed", reason=str(exc))
                return f"The new capability was created but could not be invoked ({exc})."
            if decision.kind != "existing_tool":
                self.events.emit("failed", reason="re-dispatch did not select a tool")
                return "The new capability was created but could not be invoked."

        name, arguments = decision.tool_call
        descriptor = self.registry.lookup(name)
        if descriptor is None:
            self.events.emit("failed", reason=f"dispatched unknown tool {name}")
            return f"The selected tool '{name}' is not available."
        report = run_tool(
            self._sandbox_spec(config), descriptor, arguments, self.profile.interpreter
        )
        if not report.ok:
            self.events.emit(
                "failed", reason="tool runtime error", exit_code=report.exit_code
            )
            detail = report.stderr.strip().splitlines()[-1:] or ["no stderr"]
            return f"Running '{name}' failed: {detail[0]}"
        try:
            result = report.last_stdout_json()
        except ValueError:
            result = report.stdout.strip()

        reply = self._phrase_reply(user_message, name, result)
        self.events.emit("responded", tool=name)
        return reply

    def _phrase_reply(self, user_message: str, tool: str, result) -> str:
        import json as _json

        rendered = _json.dumps(result) if not isinstance(result, str) else result
        try:
            response = self.gateway.complete(
                ModelRequest(
                    component_role="dispatcher",
                    system_prompt=self.registry.snapshot.prompts["dispatcher"].render(),
                    messages=(
                        ("user", user_message),
                        (
                            "user",
                            f"The tool {tool} returned: {rendered}\n"
                            f"Reply to the original request in natural language.",
                        ),
                    ),
                )
            )
            if response.kind == "text" and response.text:
                return response.text
        except GatewayError:
            pass
        return f"Result from {tool}: {rendered}"


# -- trace grammar ---------------------------------------------------------

_TERMINAL = {"responded", "failed"}


def validate_trace(events: Sequence[PipelineEvent], tdd_enabled: bool = True) -> None:
    """Assert a trace obeys the stage machine; raises ValueError otherwise."""
    last_seq = 0
    prev: PipelineEvent | None = None
    for event in events:
        if event.sequence <= last_seq:
            raise ValueError(f"sequence not strictly increasing at {event}")
        last_seq = event.sequence
        if not tdd_enabled and event.kind in ("tdd_generated", "intermediate_verdict"):
            raise ValueError(f"{event.kind} present in ablated trace")
        if prev is not None:
            if not _transition_ok(prev, event, tdd_enabled):
                raise ValueError(f"illegal transition {prev.kind} -> {event.kind}")
        prev = event


def _transition_ok(prev: PipelineEvent, cur: PipelineEvent, tdd_enabled: bool) -> bool:
    restart = ("tdd_generated",) if tdd_enabled else ("function_generated",)
    allowed: dict[str, tuple[str, ...]] = {
        "dispatched": ("tdd_generated", "function_generated", "responded", "failed",
                       "dispatched"),
        "tdd_generated": ("function_generated", "tdd_generated", "failed"),
        "function_generated": (
            ("intermediate_verdict",) if tdd_enabled else ("unit_tests_generated",)
        ) + restart + ("failed",),
        "unit_tests_generated": ("final_verdict", "failed"),
        "promoted": ("dispatched", "responded", "failed"),
        "responded": ("dispatched",),
        "failed": ("dispatched",),
    }
    if prev.kind == "intermediate_verdict":
        if prev.payload.get("decision") == "accept":
            return cur.kind in ("unit_tests_generated", "failed")
        return cur.kind in restart + ("failed",)
    if prev.kind == "final_verdict":
        if prev.payload.get("decision") == "accept":
            return cur.kind in ("promoted",) + restart + ("failed",)
        return cur.kind in restart + ("failed",)
    return cur.kind in allowed.get(prev.kind, ())
