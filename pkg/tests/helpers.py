"""Shared fixtures: seeded KB content, canonical generated sources, and
replay-transcript builders for scripted pipeline runs."""

from __future__ import annotations

import json
from pathlib import Path

from toolforge.kb import ensure_layout
from toolforge.llm import ModelResponse, ToolCall, Transcript, TranscriptEntry

MATRIX_OPERATIONS_SRC = '''\
def matrix_operations(a, b):
    """Multiply two matrices given as nested lists."""
    rows, inner, cols = len(a), len(b), len(b[0])
    result = [[0.0] * cols for _ in range(rows)]
    for i in range(rows):
        for j in range(cols):
            total = 0.0
            for k in range(inner):
                total += a[i][k] * b[k][j]
            result[i][j] = total
    return result
'''

MATRIX_OPERATIONS_DESCRIPTOR = {
    "type": "function",
    "function": {
        "name": "matrix_operations",
        "description": "Multiply two matrices given as nested lists of numbers.",
        "parameters": {
            "type": "object",
            "properties": {"a": {"type": "array"}, "b": {"type": "array"}},
            "required": ["a", "b"],
        },
    },
}

EIGENVALUES_SRC = '''\
from matrix_operations import matrix_operations


def compute_eigenvalues(matrix):
    """Eigenvalues of a real 2x2 matrix via the characteristic polynomial."""
    squared = matrix_operations(matrix, matrix)
    trace = matrix[0][0] + matrix[1][1]
    determinant = (trace * trace - (squared[0][0] + squared[1][1])) / 2
    discriminant = trace * trace - 4 * determinant
    if discriminant < 0:
        raise ValueError("complex eigenvalues not supported")
    root = discriminant ** 0.5
    return sorted([(trace - root) / 2, (trace + root) / 2])
'''

EIGENVALUES_TDD_SCRIPT = """\
from compute_eigenvalues import compute_eigenvalues

assert compute_eigenvalues([[2, 0], [0, 3]]) == [2.0, 3.0]
assert compute_eigenvalues([[4, 1], [2, 3]]) == [2.0, 5.0]
print("ok")
"""

EIGENVALUES_UNIT_SCRIPT = """\
from compute_eigenvalues import compute_eigenvalues

assert compute_eigenvalues([[1, 0], [0, 1]]) == [1.0, 1.0]
try:
    compute_eigenvalues([[0, -1], [1, 0]])
except ValueError:
    pass
else:
    raise AssertionError("expected ValueError for complex spectrum")
print("ok")
"""

DOUBLE_TDD_SCRIPT = """\
from double_number import double_number

assert double_number(2) == 4
assert double_number(0) == 0
print("ok")
"""

DOUBLE_UNIT_SCRIPT = """\
from double_number import double_number

assert double_number(-3) == -6
assert double_number(10**6) == 2 * 10**6
print("ok")
"""

DOUBLE_SRC_OK = "def double_number(x):\n    return x + x\n"
DOUBLE_SRC_OFF_BY_ONE = "def double_number(x):\n    return x + x + 1\n"
DOUBLE_SRC_TRIPLES = "def double_number(x):\n    return x * 3\n"


def fenced(code: str) -> str:
    return f"```python\n{code}```"


def text_entry(role: str, text: str) -> TranscriptEntry:
    return TranscriptEntry(role, ModelResponse(kind="text", text=text))


def tool_entry(role: str, name: str, arguments: dict) -> TranscriptEntry:
    return TranscriptEntry(
        role, ModelResponse(kind="tool_call", tool_call=ToolCall(name, arguments))
    )


def propose_entry(function_name: str, requirement: str) -> TranscriptEntry:
    return tool_entry(
        "dispatcher",
        "propose_new_function",
        {"function_name": function_name, "requirement": requirement},
    )


def tdd_cycle(
    function_source: str,
    tdd_script: str = DOUBLE_TDD_SCRIPT,
    reject_feedback: str | None = None,
) -> list[TranscriptEntry]:
    """One test-first cycle: test generation, function generation, and the
    adjudicator feedback call iff the scripts will fail in the sandbox."""
    entries = [
        text_entry("tdd_generator", fenced(tdd_script)),
        text_entry("function_generator", fenced(function_source)),
    ]
    if reject_feedback is not None:
        entries.append(text_entry("intermediate_adjudicator", reject_feedback))
    return entries


def accepting_tail(
    unit_script: str = DOUBLE_UNIT_SCRIPT,
) -> list[TranscriptEntry]:
    """Entries for a cycle that passes both adjudications (no feedback calls)."""
    return [text_entry("unit_test_generator", fenced(unit_script))]


def double_number_success_entries(rejects: int = 2) -> list[TranscriptEntry]:
    """Evolve-only transcript: ``rejects`` failing cycles, then a passing one."""
    entries: list[TranscriptEntry] = []
    wrong = [DOUBLE_SRC_OFF_BY_ONE, DOUBLE_SRC_TRIPLES] * ((rejects + 1) // 2)
    for i in range(rejects):
        entries += tdd_cycle(
            wrong[i], reject_feedback=f"expected 4 but received wrong value (attempt {i + 1})"
        )
    entries += tdd_cycle(DOUBLE_SRC_OK)
    entries += accepting_tail()
    return entries


def double_number_always_reject_entries(cycles: int = 6) -> list[TranscriptEntry]:
    entries: list[TranscriptEntry] = []
    for i in range(cycles):
        entries += tdd_cycle(
            DOUBLE_SRC_OFF_BY_ONE,
            reject_feedback=f"expected 4 but received 5 (attempt {i + 1})",
        )
    return entries


def make_transcript(entries: list[TranscriptEntry]) -> Transcript:
    return Transcript(list(entries))


def seed_matrix_operations(kb_root: Path) -> None:
    ensure_layout(kb_root)
    (kb_root / "functions" / "matrix_operations.py").write_text(MATRIX_OPERATIONS_SRC)
    (kb_root / "descriptors" / "matrix_operations.json").write_text(
        json.dumps(MATRIX_OPERATIONS_DESCRIPTOR, indent=2)
    )
