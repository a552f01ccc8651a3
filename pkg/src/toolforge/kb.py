"""Persistent knowledge base: prompts, functions, and tool descriptors.

On-disk layout under a KB root:

    functions/<name>.<ext>    executable implementations, one per file
    descriptors/<name>.json   tool descriptors in function-calling wire shape
    prompts/<role>.txt        one system prompt per component role

Snapshots are immutable values; all mutation goes through ``promote`` (atomic:
function file + descriptor file + dispatcher routing hint, all or nothing) or
``Registry.refresh``. Readers never observe a partial promotion.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping

import jsonschema

from .config import TargetProfile
from .errors import (
    ConfigurationError,
    KnowledgeBaseError,
    NameCollisionError,
    PromotionError,
)

COMPONENT_ROLES = (
    "dispatcher",
    "tdd_generator",
    "function_generator",
    "unit_test_generator",
    "intermediate_adjudicator",
    "final_adjudicator",
)

ROUTING_HINT_RE = re.compile(r"^When asked to .+, call \S+$")

DEFAULT_PROMPTS: dict[str, str] = {
    "dispatcher": (
        "You route user requests. If a registered tool can satisfy the request, "
        "call it with arguments extracted from the message. Otherwise call "
        "propose_new_function with a snake_case function name and a one-sentence "
        "requirement describing the desired behavior."
    ),
    "tdd_generator": (
        "You write executable test scripts from requirements, before any "
        "implementation exists. Emit a single fenced code block containing a "
        "standalone script that imports the function by its declared name, "
        "asserts expected outputs for concrete inputs, and exits 0 only if "
        "every assertion passes. Choose as many cases as the requirement needs."
    ),
    "function_generator": (
        "You implement a single function satisfying the given requirement and "
        "test script. Reuse the listed available resources where they help. "
        "Emit one fenced code block defining exactly the requested entrypoint."
    ),
    "unit_test_generator": (
        "You write implementation-aware unit tests for the given source code: "
        "edge cases, error handling, and boundary values. Emit one fenced code "
        "block containing a standalone script that exits 0 iff all checks pass."
    ),
    "intermediate_adjudicator": (
        "Summarize why the requirement-derived tests failed, quoting expected "
        "and received values where visible. Reply with one corrective message."
    ),
    "final_adjudicator": (
        "Summarize why the unit tests failed, quoting expected and received "
        "values where visible. Reply with one corrective message."
    ),
}


@dataclass(frozen=True)
class ToolDescriptor:
    """A stored function paired with its structured invocation metadata."""

    name: str
    description: str
    parameters_schema: Mapping
    function_file: str
    entrypoint: str
    provenance: str = "seeded"  # "seeded" | "evolved"

    def __post_init__(self):
        if not self.name:
            raise ValueError("descriptor name must be non-empty")
        if self.name != self.entrypoint:
            raise ValueError(f"descriptor name {self.name!r} != entrypoint {self.entrypoint!r}")
        jsonschema.Draft202012Validator.check_schema(dict(self.parameters_schema))

    def to_wire(self) -> dict:
        """Function-calling wire shape, plus file/entrypoint bookkeeping keys."""
        return {
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": dict(self.parameters_schema),
            },
            "function_file": self.function_file,
            "entrypoint": self.entrypoint,
            "provenance": self.provenance,
        }

    @classmethod
    def from_wire(cls, doc: Mapping, source_extension: str = ".py") -> "ToolDescriptor":
        if doc.get("type") != "function" or "function" not in doc:
            raise ValueError('descriptor must be {"type": "function", "function": {...}}')
        fn = doc["function"]
        name = fn.get("name", "")
        return cls(
            name=name,
            description=fn.get("description", ""),
            parameters_schema=fn.get("parameters", {"type": "object"}),
            function_file=doc.get("function_file", f"functions/{name}{source_extension}"),
            entrypoint=doc.get("entrypoint", name),
            provenance=doc.get("provenance", "seeded"),
        )


@dataclass(frozen=True)
class FunctionRecord:
    name: str
    source_path: Path
    source_text: str
    created_at: str
    provenance: str = "seeded"


@dataclass(frozen=True)
class PromptRecord:
    component_role: str
    body: str
    routing_hints: tuple[str, ...] = ()

    def render(self) -> str:
        """Full prompt text: body followed by one routing hint per line."""
        if not self.routing_hints:
            return self.body
        return self.body.rstrip("\n") + "\n\n" + "\n".join(self.routing_hints)


@dataclass(frozen=True)
class InvalidDescriptor:
    filename: str
    reason: str


@dataclass(frozen=True)
class RegistrySnapshot:
    descriptors: Mapping[str, ToolDescriptor]
    functions: Mapping[str, FunctionRecord]
    prompts: Mapping[str, PromptRecord]
    version: int
    invalid: tuple[InvalidDescriptor, ...] = ()


def _layout(root: Path) -> tuple[Path, Path, Path]:
    return root / "functions", root / "descriptors", root / "prompts"


def ensure_layout(root: Path) -> None:
    for sub in _layout(root):
        sub.mkdir(parents=True, exist_ok=True)


def _parse_prompt_file(role: str, text: str) -> PromptRecord:
    body_lines: list[str] = []
    hints: list[str] = []
    for line in text.splitlines():
        if ROUTING_HINT_RE.match(line.strip()):
            hints.append(line.strip())
        else:
            body_lines.append(line)
    body = "\n".join(body_lines).strip("\n")
    return PromptRecord(component_role=role, body=body, routing_hints=tuple(hints))


def load(root: Path, profile: TargetProfile | None = None) -> RegistrySnapshot:
    """Materialize the on-disk KB into an immutable snapshot (version 1).

    Malformed descriptor files and descriptors whose function file is missing
    are quarantined into ``snapshot.invalid`` with a reason; they never enter
    the dispatchable set.
    """
    profile = profile or TargetProfile()
    root = Path(root)
    if root.exists() and not os.access(root, os.R_OK):
        raise ConfigurationError(f"KB root not readable: {root}")
    try:
        ensure_layout(root)
    except OSError as exc:
        raise ConfigurationError(f"cannot initialize KB root {root}: {exc}") from exc
    functions_dir, descriptors_dir, prompts_dir = _layout(root)

    functions: dict[str, FunctionRecord] = {}
    for path in sorted(functions_dir.glob(f"*{profile.source_extension}")):
        stat = path.stat()
        functions[path.stem] = FunctionRecord(
            name=path.stem,
            source_path=path,
            source_text=path.read_text(),
            created_at=datetime.fromtimestamp(stat.st_mtime, tz=timezone.utc).isoformat(),
        )

    descriptors: dict[str, ToolDescriptor] = {}
    invalid: list[InvalidDescriptor] = []
    for path in sorted(descriptors_dir.glob("*.json")):
        try:
            doc = json.loads(path.read_text())
            desc = ToolDescriptor.from_wire(doc, profile.source_extension)
        except (json.JSONDecodeError, ValueError, jsonschema.SchemaError) as exc:
            invalid.append(InvalidDescriptor(filename=path.name, reason=str(exc)))
            continue
        if not (root / desc.function_file).exists():
            invalid.append(
                InvalidDescriptor(filename=path.name, reason=f"missing {desc.function_file}")
            )
            continue
        if desc.name in descriptors:
            invalid.append(InvalidDescriptor(filename=path.name, reason="duplicate name"))
            continue
        descriptors[desc.name] = desc
        record = functions.get(Path(desc.function_file).stem)
        if record is not None and desc.provenance != record.provenance:
            functions[record.name] = replace(record, provenance=desc.provenance)

    prompts: dict[str, PromptRecord] = {}
    for role in COMPONENT_ROLES:
        path = prompts_dir / f"{role}.txt"
        if path.exists():
            prompts[role] = _parse_prompt_file(role, path.read_text())
        else:
            prompts[role] = PromptRecord(component_role=role, body=DEFAULT_PROMPTS[role])

    return RegistrySnapshot(
        descriptors=descriptors,
        functions=functions,
        prompts=prompts,
        version=1,
        invalid=tuple(invalid),
    )


def lookup_tool(snapshot: RegistrySnapshot, name: str) -> ToolDescriptor | None:
    """Descriptor for ``name`` iff registered and valid; absence is normal."""
    if not name:
        return None
    return snapshot.descriptors.get(name)


def _atomic_write(path: Path, content: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(content)
    os.replace(tmp, path)


def promote(
    root: Path,
    snapshot: RegistrySnapshot,
    function_name: str,
    source_text: str,
    descriptor: ToolDescriptor,
    routing_hint: str,
    fault_hook: Callable[[str], None] | None = None,
) -> RegistrySnapshot:
    """Atomically integrate an accepted function into the KB.

    Three writes are applied together: function file, descriptor file, and the
    dispatcher prompt gains ``routing_hint``. Any failure rolls back whatever
    was already written and leaves both disk and snapshot unchanged.

    ``fault_hook`` is called with "function" / "descriptor" / "prompt" before
    each write; tests raise from it to exercise the rollback paths.
    """
    if descriptor.name != function_name:
        raise PromotionError(f"descriptor name {descriptor.name!r} != {function_name!r}")
    if function_name in snapshot.descriptors:
        raise NameCollisionError(f"tool name already taken: {function_name}")

    root = Path(root)
    ensure_layout(root)
    function_path = root / descriptor.function_file
    descriptor_path = root / "descriptors" / f"{function_name}.json"
    prompt_path = root / "prompts" / "dispatcher.txt"
    if function_path.exists() or descriptor_path.exists():
        raise NameCollisionError(f"KB files already exist for: {function_name}")

    dispatcher = snapshot.prompts["dispatcher"]
    hint = routing_hint.strip()
    if hint and hint not in dispatcher.routing_hints:
        new_dispatcher = replace(dispatcher, routing_hints=dispatcher.routing_hints + (hint,))
    else:
        new_dispatcher = dispatcher

    prompt_backup = prompt_path.read_text() if prompt_path.exists() else None
    written: list[Path] = []
    try:
        if fault_hook:
            fault_hook("function")
        _atomic_write(function_path, source_text)
        written.append(function_path)
        if fault_hook:
            fault_hook("descriptor")
        _atomic_write(descriptor_path, json.dumps(descriptor.to_wire(), indent=2) + "\n")
        written.append(descriptor_path)
        if fault_hook:
            fault_hook("prompt")
        _atomic_write(prompt_path, new_dispatcher.render() + "\n")
    except Exception as exc:
        for path in written:
            path.unlink(missing_ok=True)
        if prompt_backup is not None:
            _atomic_write(prompt_path, prompt_backup)
        if isinstance(exc, KnowledgeBaseError):
            raise
        raise PromotionError(f"promotion of {function_name} failed: {exc}") from exc

    record = FunctionRecord(
        name=function_name,
        source_path=function_path,
        source_text=source_text,
        created_at=datetime.now(tz=timezone.utc).isoformat(),
        provenance="evolved",
    )
    return RegistrySnapshot(
        descriptors={**snapshot.descriptors, function_name: descriptor},
        functions={**snapshot.functions, function_name: record},
        prompts={**snapshot.prompts, "dispatcher": new_dispatcher},
        version=snapshot.version + 1,
        invalid=snapshot.invalid,
    )


class Registry:
    """In-memory registry over a KB root: many readers, one serialized writer.

    A promoted tool is visible to every subsequent ``lookup`` in the same
    process with no restart; ``load`` on a fresh process sees it on disk.
    """

    def __init__(self, root: Path, profile: TargetProfile | None = None):
        self.root = Path(root)
        self.profile = profile or TargetProfile()
        self._lock = threading.RLock()
        self._snapshot = load(self.root, self.profile)

    @property
    def snapshot(self) -> RegistrySnapshot:
        with self._lock:
            return self._snapshot

    def lookup(self, name: str) -> ToolDescriptor | None:
        return lookup_tool(self.snapshot, name)

    def promote(
        self,
        function_name: str,
        source_text: str,
        descriptor: ToolDescriptor,
        routing_hint: str,
        fault_hook: Callable[[str], None] | None = None,
    ) -> RegistrySnapshot:
        with self._lock:
            new = promote(
                self.root,
                self._snapshot,
                function_name,
                source_text,
                descriptor,
                routing_hint,
                fault_hook=fault_hook,
            )
            self._snapshot = new
            return new

    def refresh(self) -> RegistrySnapshot:
        """Re-read the KB from disk; version keeps increasing monotonically."""
        with self._lock:
            reloaded = load(self.root, self.profile)
            self._snapshot = replace(reloaded, version=self._snapshot.version + 1)
            return self._snapshot
