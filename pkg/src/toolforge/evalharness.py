"""Evaluation harness: problem manifests, k-run execution with isolated KBs,
success aggregation, and the statistics front door.

A run is successful iff the problem's ground-truth test script, executed in a
sandbox with the promoted tool's Functions repository on the module path,
exits 0. Every run gets a fresh KB root (seed functions only), so runs never
share state.
"""

from __future__ import annotations

import json
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .config import TargetProfile
from .context import scan_codebase
from .errors import ConfigurationError
from .kb import Registry, ensure_layout
from .llm import Provider, ReplayProvider, Transcript
from .pipeline import EventLog, Pipeline, PipelineConfig
from .sandbox import SandboxSpec, run_script
from .stats import StatResult, bonferroni_adjust, wilcoxon_signed_rank

CATEGORIES = ("integration", "compositional", "data_processing")


@dataclass(frozen=True)
class Problem:
    id: str
    category: str
    request: str
    root: Path  # manifest directory; resource paths are relative to it
    ground_truth_test: Path
    codebase: Path | None = None
    data_files: tuple[Path, ...] = ()
    seed_functions: tuple[tuple[Path, Path], ...] = ()  # (function file, descriptor file)
    replay_transcript: Path | None = None

    @classmethod
    def load(cls, manifest: Path) -> "Problem":
        manifest = Path(manifest)
        root = manifest.parent
        doc = json.loads(manifest.read_text())
        if doc.get("category") not in CATEGORIES:
            raise ConfigurationError(f"{manifest}: unknown category {doc.get('category')!r}")
        seeds = tuple(
            (root / s["function"], root / s["descriptor"])
            for s in doc.get("seed_functions", [])
        )
        return cls(
            id=doc["id"],
            category=doc["category"],
            request=doc["request"],
            root=root,
            ground_truth_test=root / doc["ground_truth_test"],
            codebase=(root / doc["codebase"]) if doc.get("codebase") else None,
            data_files=tuple(root / p for p in doc.get("data_files", [])),
            seed_functions=seeds,
            replay_transcript=(
                root / doc["replay_transcript"] if doc.get("replay_transcript") else None
            ),
        )


def discover_problems(directory: Path) -> list[Problem]:
    manifests = sorted(Path(directory).glob("*/problem.json"))
    if not manifests:
        raise ConfigurationError(f"no problem manifests under {directory}")
    return [Problem.load(m) for m in manifests]


@dataclass(frozen=True)
class RunOutcome:
    problem_id: str
    category: str
    run_index: int
    success: bool
    iterations_used: int
    status: str
    trace_path: Path | None = None


def _seed_kb(root: Path, problem: Problem) -> None:
    ensure_layout(root)
    for function_file, descriptor_file in problem.seed_functions:
        shutil.copy2(function_file, root / "functions" / function_file.name)
        shutil.copy2(descriptor_file, root / "descriptors" / descriptor_file.name)


def _default_provider_factory(problem: Problem, run_index: int) -> Provider:
    if problem.replay_transcript is None:
        raise ConfigurationError(
            f"problem {problem.id} has no replay transcript; pass a provider factory "
            f"for live runs"
        )
    return ReplayProvider(Transcript.load(problem.replay_transcript))


def run_benchmark(
    problems: Sequence[Problem],
    k: int = 5,
    config: PipelineConfig | None = None,
    provider_factory: Callable[[Problem, int], Provider] | None = None,
    profile: TargetProfile | None = None,
    work_root: Path | None = None,
    trace_dir: Path | None = None,
) -> list[RunOutcome]:
    """Execute each problem k times against fresh KBs and score by the
    ground-truth exit-code rule."""
    config = config or PipelineConfig()
    profile = profile or TargetProfile()
    provider_factory = provider_factory or _default_provider_factory
    work_root = Path(work_root) if work_root else Path(tempfile.mkdtemp(prefix="toolforge-eval-"))
    outcomes: list[RunOutcome] = []

    for problem in problems:
        package = scan_codebase(problem.codebase, profile) if problem.codebase else None
        for run_index in range(1, k + 1):
            kb_root = work_root / problem.id / f"run{run_index}" / "kb"
            kb_root.mkdir(parents=True, exist_ok=True)
            _seed_kb(kb_root, problem)
            events = EventLog()
            status = "infrastructure_failure"
            iterations = 0
            success = False
            try:
                registry = Registry(kb_root, profile)
                pipeline = Pipeline(
                    registry,
                    provider_factory(problem, run_index),
                    profile=profile,
                    codebase_root=problem.codebase,
                    context_package=package,
                    events=events,
                )
                decision = pipeline.dispatch(problem.request)
                if decision.kind == "new_requirement":
                    outcome = pipeline.evolve(decision.requirement, config)
                    status = outcome.status
                    iterations = outcome.iterations_used
                    promoted = outcome.promoted_tool
                else:
                    # Request already satisfiable; score the existing tool.
                    status = "accepted"
                    promoted = decision.tool_call[0]
                if status == "accepted" and promoted:
                    success = _ground_truth_passes(problem, kb_root, config, profile)
            except Exception as exc:  # noqa: BLE001 - recorded, run continues
                events.emit("failed", reason=str(exc))
                status = "infrastructure_failure"

            trace_path = None
            if trace_dir is not None:
                trace_dir = Path(trace_dir)
                trace_dir.mkdir(parents=True, exist_ok=True)
                trace_path = trace_dir / f"{problem.id}-run{run_index}.jsonl"
                trace_path.write_text(
                    "\n".join(json.dumps(e.to_wire()) for e in events.events) + "\n"
                )
            outcomes.append(
                RunOutcome(
                    problem_id=problem.id,
                    category=problem.category,
                    run_index=run_index,
                    success=success,
                    iterations_used=iterations,
                    status=status,
                    trace_path=trace_path,
                )
            )
    return outcomes


def _ground_truth_passes(
    problem: Problem, kb_root: Path, config: PipelineConfig, profile: TargetProfile
) -> bool:
    entries: list[Path] = [kb_root / "functions"]
    if problem.codebase:
        entries.append(problem.codebase)
    mounts = tuple((p, p.name, True) for p in problem.data_files)
    spec = SandboxSpec(
        module_path_entries=tuple(entries),
        mounted_resources=mounts,
        timeout_seconds=config.timeout_seconds,
    )
    script = problem.ground_truth_test.read_text()
    report = run_script(spec, [("_ground_truth.py", script)], [*profile.interpreter, "_ground_truth.py"])
    return report.ok


@dataclass(frozen=True)
class GroupSummary:
    successes: int
    runs: int
    avg_iterations: float

    @property
    def proportion(self) -> float:
        return self.successes / self.runs if self.runs else 0.0


@dataclass(frozen=True)
class Summary:
    per_problem: dict[str, GroupSummary]
    per_category: dict[str, GroupSummary]
    overall: GroupSummary


def summarize(outcomes: Sequence[RunOutcome]) -> Summary:
    """Success proportions and average iteration counts at problem, category,
    and overall level. Category subtotals sum to the overall counts."""
    if not outcomes:
        raise ValueError("no outcomes to summarize")

    def group(items: Sequence[RunOutcome]) -> GroupSummary:
        return GroupSummary(
            successes=sum(o.success for o in items),
            runs=len(items),
            avg_iterations=sum(o.iterations_used for o in items) / len(items),
        )

    per_problem = {
        pid: group([o for o in outcomes if o.problem_id == pid])
        for pid in dict.fromkeys(o.problem_id for o in outcomes)
    }
    per_category = {
        cat: group([o for o in outcomes if o.category == cat])
        for cat in dict.fromkeys(o.category for o in outcomes)
    }
    return Summary(per_problem=per_problem, per_category=per_category, overall=group(outcomes))


def outcomes_from_counts(
    successes: dict[str, int],
    categories: dict[str, str],
    runs: int = 5,
    iterations: float = 0.0,
) -> list[RunOutcome]:
    """Expand a per-problem success-count matrix into synthetic RunOutcomes,
    for feeding recorded study data through ``summarize``."""
    outcomes = []
    for problem_id, count in successes.items():
        for run_index in range(1, runs + 1):
            outcomes.append(
                RunOutcome(
                    problem_id=problem_id,
                    category=categories[problem_id],
                    run_index=run_index,
                    success=run_index <= count,
                    iterations_used=int(iterations),
                    status="accepted" if run_index <= count else "budget_exhausted",
                )
            )
    return outcomes


def compare_frameworks(
    a_proportions: Sequence[float],
    b_proportions: Sequence[float],
    comparisons: int = 1,
) -> StatResult:
    """Problem-level paired signed-rank comparison with optional Bonferroni."""
    result = wilcoxon_signed_rank(list(zip(a_proportions, b_proportions)))
    adjusted = bonferroni_adjust(result.p_two_sided, comparisons)
    return StatResult(
        W=result.W,
        n_effective=result.n_effective,
        p_two_sided=result.p_two_sided,
        p_adjusted=adjusted,
        effect_size_r=result.effect_size_r,
        degenerate=result.degenerate,
        method=result.method,
    )


def render_table(summary: Summary) -> str:
    """Human-readable per-problem / per-category / overall table."""
    lines = [f"{'Problem':32s} {'Pass@1':>12s} {'Avg iter':>9s}"]
    for pid, g in summary.per_problem.items():
        lines.append(
            f"{pid:32s} {g.successes}/{g.runs} ({g.proportion:6.1%}) {g.avg_iterations:9.1f}"
        )
    lines.append("-" * 56)
    for cat, g in summary.per_category.items():
        lines.append(
            f"{cat:32s} {g.successes}/{g.runs} ({g.proportion:6.1%}) {g.avg_iterations:9.1f}"
        )
    g = summary.overall
    lines.append(
        f"{'overall':32s} {g.successes}/{g.runs} ({g.proportion:6.1%}) {g.avg_iterations:9.1f}"
    )
    return "\n".join(lines)


def report_to_json(summary: Summary, outcomes: Sequence[RunOutcome]) -> dict:
    def enc(g: GroupSummary) -> dict:
        return {
            "successes": g.successes,
            "runs": g.runs,
            "proportion": g.proportion,
            "avg_iterations": g.avg_iterations,
        }

    return {
        "per_problem": {k: enc(v) for k, v in summary.per_problem.items()},
        "per_category": {k: enc(v) for k, v in summary.per_category.items()},
        "overall": enc(summary.overall),
        "outcomes": [
            {
                "problem_id": o.problem_id,
                "category": o.category,
                "run_index": o.run_index,
                "success": o.success,
                "iterations_used": o.iterations_used,
                "status": o.status,
            }
            for o in outcomes
        ],
    }
