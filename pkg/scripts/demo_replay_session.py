#!/usr/bin/env python3
"""Replay one sample problem end to end and print the event trace.

Everything is offline: the model responses come from the problem's recorded
transcript, and the generated tool runs in a real sandbox.
"""

import json
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from toolforge.evalharness import Problem, run_benchmark  # noqa: E402
from toolforge.pipeline import PipelineConfig  # noqa: E402


def main():
    problem_id = sys.argv[1] if len(sys.argv) > 1 else "matrix_eigenvalue"
    manifest = REPO_ROOT / "problems" / problem_id / "problem.json"
    if not manifest.exists():
        sys.exit(f"no such problem: {manifest}")
    problem = Problem.load(manifest)
    print(f"problem: {problem.id} ({problem.category})")
    print(f"request: {problem.request}\n")

    with tempfile.TemporaryDirectory() as tmp:
        trace_dir = Path(tmp) / "traces"
        outcomes = run_benchmark(
            [problem],
            k=1,
            config=PipelineConfig(timeout_seconds=15),
            work_root=Path(tmp) / "work",
            trace_dir=trace_dir,
        )
        outcome = outcomes[0]
        for line in outcome.trace_path.read_text().splitlines():
            event = json.loads(line)
            print(f"  [{event['sequence']}] {event['kind']}: {json.dumps(event['payload'])}")
        print(f"\nstatus={outcome.status} success={outcome.success} "
              f"iterations={outcome.iterations_used}")
        return 0 if outcome.success else 1


if __name__ == "__main__":
    sys.exit(main())
