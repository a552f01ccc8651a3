"""Codebase context builder: scan existing code, extract signatures, resolve
imports, and render a deterministic resource inventory for generation prompts.

Signature extraction is deliberately line-pattern based (per target profile),
not a full parser; it only needs to tell the generator what exists and how to
call it. Scanning is read-only.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path

from .config import TargetProfile
from .errors import ResolutionError
from .kb import RegistrySnapshot

DATA_EXTENSIONS = {".json": "json", ".csv": "csv"}


@dataclass(frozen=True)
class Signature:
    file: str
    name: str
    parameters: str
    docstring: str = ""


@dataclass(frozen=True)
class DataFile:
    path: str
    format_tag: str
    record_count: int  # estimate: top-level array elements / data rows


@dataclass(frozen=True)
class ContextPackage:
    files: tuple[tuple[str, int], ...] = ()  # (relative path, line count)
    signatures: tuple[Signature, ...] = ()
    data_files: tuple[DataFile, ...] = ()
    skipped: tuple[str, ...] = ()

    @property
    def total_loc(self) -> int:
        return sum(count for _, count in self.files)


@dataclass(frozen=True)
class ImportPlan:
    statements: tuple[str, ...]
    referenced_functions: tuple[str, ...]


def _extract_docstring(lines: list[str], start: int) -> str:
    for line in lines[start : start + 3]:
        stripped = line.strip()
        for quote in ('"""', "'''"):
            if stripped.startswith(quote):
                body = stripped[len(quote) :]
                if body.endswith(quote) and len(stripped) > 2 * len(quote):
                    body = body[: -len(quote)]
                return body.strip()
        if stripped and not stripped.startswith("#"):
            return ""
    return ""


def _count_records(path: Path, tag: str) -> int:
    try:
        if tag == "json":
            doc = json.loads(path.read_text())
            if isinstance(doc, list):
                return len(doc)
            if isinstance(doc, dict):
                return len(doc)
            return 1
        with path.open(newline="") as fh:
            rows = sum(1 for _ in csv.reader(fh))
        return max(rows - 1, 0)
    except (OSError, json.JSONDecodeError, csv.Error, UnicodeDecodeError):
        return 0


def scan_codebase(root: Path, profile: TargetProfile | None = None) -> ContextPackage:
    """Enumerate source files, top-level callables, and data files under root."""
    profile = profile or TargetProfile()
    root = Path(root)
    sig_re = re.compile(profile.signature_pattern)
    files: list[tuple[str, int]] = []
    signatures: list[Signature] = []
    data_files: list[DataFile] = []
    skipped: list[str] = []

    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        rel = path.relative_to(root).as_posix()
        suffix = path.suffix.lower()
        if suffix == profile.source_extension:
            try:
                text = path.read_text()
            except (OSError, UnicodeDecodeError):
                skipped.append(rel)
                continue
            lines = text.splitlines()
            files.append((rel, len(lines)))
            for i, line in enumerate(lines):
                match = sig_re.match(line)  # top-level only: no leading indent
                if match:
                    signatures.append(
                        Signature(
                            file=rel,
                            name=match.group(1),
                            parameters=match.group(2),
                            docstring=_extract_docstring(lines, i + 1),
                        )
                    )
        elif suffix in DATA_EXTENSIONS:
            tag = DATA_EXTENSIONS[suffix]
            data_files.append(DataFile(path=rel, format_tag=tag, record_count=_count_records(path, tag)))

    return ContextPackage(
        files=tuple(files),
        signatures=tuple(signatures),
        data_files=tuple(data_files),
        skipped=tuple(skipped),
    )


def resolve_import(
    function_name: str, kb: RegistrySnapshot, profile: TargetProfile | None = None
) -> ImportPlan:
    """Import statements making a registered KB function callable from a
    generated file executed with the Functions repository on the module path."""
    profile = profile or TargetProfile()
    descriptor = kb.descriptors.get(function_name)
    if descriptor is None:
        raise ResolutionError(f"no registered function named {function_name!r}")
    module = Path(descriptor.function_file).stem
    statement = profile.import_template.format(module=module, name=descriptor.entrypoint)
    return ImportPlan(statements=(statement,), referenced_functions=(function_name,))


def build_generation_context(
    requirement,
    kb: RegistrySnapshot,
    package: ContextPackage | None = None,
    budget: int = 8000,
) -> str:
    """Deterministic inventory of reusable resources, truncated at ``budget``
    characters with stable priority: tools, then signatures, then data files."""
    lines: list[str] = []
    tools = sorted(kb.descriptors.values(), key=lambda d: d.name)
    lines.append("Available tools:" if tools else "Available tools: none")
    for desc in tools:
        lines.append(f"- {desc.name}: {desc.description}")

    if package and package.signatures:
        lines.append("Codebase callables:")
        for sig in package.signatures:
            doc = f" -- {sig.docstring}" if sig.docstring else ""
            lines.append(f"- {sig.file}: {sig.name}({sig.parameters}){doc}")
    else:
        lines.append("Codebase callables: none")

    if package and package.data_files:
        lines.append("Data files (record counts are estimates):")
        for df in package.data_files:
            lines.append(f"- {df.path} ({df.format_tag}, ~{df.record_count} records)")
    else:
        lines.append("Data files: none")

    out: list[str] = []
    used = 0
    for line in lines:
        cost = len(line) + 1
        if used + cost > budget:
            break
        out.append(line)
        used += cost
    return "\n".join(out)
