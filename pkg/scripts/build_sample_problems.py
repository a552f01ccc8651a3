#!/usr/bin/env python3
"""Regenerate the offline sample problem dataset under problems/.

Each problem carries a manifest, a ground-truth test, a replay transcript,
and optionally seed functions and data files, so the evaluation harness can
run end to end without network access.
"""

import json
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from toolforge.llm import ModelResponse, ToolCall, Transcript, TranscriptEntry  # noqa: E402

PROBLEMS = REPO_ROOT / "problems"

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

EIGENVALUES_GROUND_TRUTH = """\
from compute_eigenvalues import compute_eigenvalues

assert compute_eigenvalues([[4, 1], [2, 3]]) == [2.0, 5.0]
assert compute_eigenvalues([[6, 0], [0, -1]]) == [-1.0, 6.0]
print("ok")
"""

SENSOR_SRC = '''\
import json


def average_sensor_readings(path):
    """Mean temperature per sensor id from a JSON list of readings."""
    with open(path) as handle:
        readings = json.load(handle)
    totals = {}
    for entry in readings:
        totals.setdefault(entry["sensor"], []).append(entry["temperature"])
    return {sensor: sum(values) / len(values) for sensor, values in totals.items()}
'''

SENSOR_TDD_SCRIPT = """\
import json

from average_sensor_readings import average_sensor_readings

sample = [
    {"sensor": "a", "temperature": 10.0},
    {"sensor": "a", "temperature": 14.0},
    {"sensor": "b", "temperature": 7.5},
]
with open("sample.json", "w") as handle:
    json.dump(sample, handle)
assert average_sensor_readings("sample.json") == {"a": 12.0, "b": 7.5}
print("ok")
"""

SENSOR_UNIT_SCRIPT = """\
import json

from average_sensor_readings import average_sensor_readings

with open("empty.json", "w") as handle:
    json.dump([], handle)
assert average_sensor_readings("empty.json") == {}

with open("single.json", "w") as handle:
    json.dump([{"sensor": "x", "temperature": 3.0}], handle)
assert average_sensor_readings("single.json") == {"x": 3.0}
print("ok")
"""

SENSOR_GROUND_TRUTH = """\
from average_sensor_readings import average_sensor_readings

result = average_sensor_readings("readings.json")
assert result == {"a": 21.0, "b": 18.5}, result
print("ok")
"""

SENSOR_READINGS = [
    {"sensor": "a", "temperature": 20.0},
    {"sensor": "a", "temperature": 22.0},
    {"sensor": "b", "temperature": 18.5},
]


def fenced(code):
    return f"```python\n{code}```"


def text(role, body):
    return TranscriptEntry(role, ModelResponse(kind="text", text=body))


def propose(name, requirement):
    call = ToolCall("propose_new_function", {"function_name": name, "requirement": requirement})
    return TranscriptEntry("dispatcher", ModelResponse(kind="tool_call", tool_call=call))


def write_problem(name, manifest, files, transcript_entries):
    root = PROBLEMS / name
    root.mkdir(parents=True, exist_ok=True)
    for rel, content in files.items():
        target = root / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content)
    Transcript(transcript_entries).save(root / "transcript.jsonl")
    (root / "problem.json").write_text(json.dumps(manifest, indent=2) + "\n")


def main():
    write_problem(
        "matrix_eigenvalue",
        {
            "id": "matrix_eigenvalue",
            "category": "compositional",
            "request": "compute the eigenvalues of the matrix [[4, 1], [2, 3]]",
            "seed_functions": [
                {
                    "function": "seeds/matrix_operations.py",
                    "descriptor": "seeds/matrix_operations.json",
                }
            ],
            "ground_truth_test": "ground_truth_test.py",
            "replay_transcript": "transcript.jsonl",
        },
        {
            "seeds/matrix_operations.py": MATRIX_OPERATIONS_SRC,
            "seeds/matrix_operations.json": json.dumps(MATRIX_OPERATIONS_DESCRIPTOR, indent=2),
            "ground_truth_test.py": EIGENVALUES_GROUND_TRUTH,
        },
        [
            propose("compute_eigenvalues", "compute eigenvalues for a given matrix input."),
            text("tdd_generator", fenced(EIGENVALUES_TDD_SCRIPT)),
            text("function_generator", fenced(EIGENVALUES_SRC)),
            text("unit_test_generator", fenced(EIGENVALUES_UNIT_SCRIPT)),
        ],
    )

    write_problem(
        "sensor_average",
        {
            "id": "sensor_average",
            "category": "data_processing",
            "request": "report the average temperature per sensor in readings.json",
            "data_files": ["data/readings.json"],
            "ground_truth_test": "ground_truth_test.py",
            "replay_transcript": "transcript.jsonl",
        },
        {
            "data/readings.json": json.dumps(SENSOR_READINGS, indent=2),
            "ground_truth_test.py": SENSOR_GROUND_TRUTH,
        },
        [
            propose(
                "average_sensor_readings",
                "average temperature per sensor from a readings file.",
            ),
            text("tdd_generator", fenced(SENSOR_TDD_SCRIPT)),
            text("function_generator", fenced(SENSOR_SRC)),
            text("unit_test_generator", fenced(SENSOR_UNIT_SCRIPT)),
        ],
    )
    print(f"wrote sample problems under {PROBLEMS}")


if __name__ == "__main__":
    main()
