#!/usr/bin/env python3
"""Print the aggregation table and framework comparisons for the recorded
evaluation campaign (11 problems, 5 runs each)."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from toolforge import reference_data  # noqa: E402
from toolforge.evalharness import (  # noqa: E402
    compare_frameworks,
    outcomes_from_counts,
    render_table,
    summarize,
)

BASELINES = ("agentcoder", "autogen", "metagpt")


def main():
    summary = summarize(
        outcomes_from_counts(
            reference_data.RECORDED_SUCCESSES["toolforge"],
            reference_data.PROBLEM_CATEGORIES,
            runs=reference_data.RUNS_PER_PROBLEM,
        )
    )
    print(render_table(summary))
    print()

    ours = reference_data.proportions("toolforge")
    print(f"{'Baseline':12s} {'W':>6s} {'n':>3s} {'p':>14s} {'p (Bonferroni x3)':>18s} {'r':>7s}")
    for baseline in BASELINES:
        result = compare_frameworks(
            ours, reference_data.proportions(baseline), comparisons=len(BASELINES)
        )
        r = f"{result.effect_size_r:.3f}" if result.effect_size_r is not None else "n/a"
        print(
            f"{baseline:12s} {result.W:6.1f} {result.n_effective:3d} "
            f"{result.p_two_sided:14.10f} {result.p_adjusted:18.10f} {r:>7s}"
        )


if __name__ == "__main__":
    main()
