"""Adjudicators: accept/reject verdicts over execution reports plus feedback
aggregation.

The decision bit is a pure function of the execution report: exit code 0 and
no timeout means accept, anything else means reject. The model is consulted
only to phrase reject-path feedback; if that call fails, mechanical feedback
is synthesized from the raw report. The model can never turn a failing run
into an accept.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import GatewayError
from .kb import PromptRecord
from .llm import ModelRequest, Provider
from .sandbox import ExecutionReport

STAGES = ("intermediate", "final")
_STAGE_ROLE = {"intermediate": "intermediate_adjudicator", "final": "final_adjudicator"}

_TAIL_CHARS = 2000


@dataclass(frozen=True)
class Feedback:
    text: str
    iteration: int
    contributing_failures: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("feedback text must be non-empty")


@dataclass(frozen=True)
class Verdict:
    decision: str  # "accept" | "reject"
    feedback: Feedback | None
    stage: str

    def __post_init__(self):
        if self.decision == "reject" and self.feedback is None:
            raise ValueError("reject requires feedback")
        if self.decision == "accept" and self.feedback is not None:
            raise ValueError("accept carries no feedback")


def _mechanical_feedback(report: ExecutionReport) -> str:
    if report.timed_out:
        return (
            "Test run timed out and was killed; the implementation likely does "
            "not terminate on the tested inputs."
        )
    tail = report.stderr.strip()[-_TAIL_CHARS:]
    text = f"Tests failed with exit code {report.exit_code}."
    if tail:
        text += f" Captured stderr:\n{tail}"
    return text


def adjudicate(
    stage: str,
    report: ExecutionReport,
    suite_script: str,
    gateway: Provider,
    prompts: dict[str, PromptRecord],
    iteration: int,
) -> Verdict:
    """Deterministic verdict; model-phrased feedback on the reject path only."""
    if stage not in STAGES:
        raise ValueError(f"unknown adjudication stage: {stage}")
    if report.ok:
        return Verdict(decision="accept", feedback=None, stage=stage)

    role = _STAGE_ROLE[stage]
    summary = (
        f"exit code: {report.exit_code}\n"
        f"timed out: {report.timed_out}\n"
        f"stdout:\n{report.stdout.strip()[-_TAIL_CHARS:]}\n"
        f"stderr:\n{report.stderr.strip()[-_TAIL_CHARS:]}"
    )
    try:
        response = gateway.complete(
            ModelRequest(
                component_role=role,
                system_prompt=prompts[role].body,
                messages=(
                    ("user", f"Test script:\n{suite_script}\n\nExecution result:\n{summary}"),
                ),
            )
        )
        text = response.text if response.kind == "text" and response.text else ""
    except GatewayError:
        text = ""
    if not text.strip():
        text = _mechanical_feedback(report)

    feedback = Feedback(
        text=text,
        iteration=iteration,
        contributing_failures=(f"{stage}: exit {report.exit_code}, timed_out={report.timed_out}",),
    )
    return Verdict(decision="reject", feedback=feedback, stage=stage)


def aggregate_feedback(history: list[Feedback], new: Feedback) -> Feedback:
    """One message per iteration: all prior constraint lines, then the new
    ones, deduplicated by exact line match with first-seen order kept."""
    seen: set[str] = set()
    lines: list[str] = []
    for item in [*history, new]:
        for line in item.text.splitlines():
            if line and line not in seen:
                seen.add(line)
                lines.append(line)
    failures = tuple(f for item in [*history, new] for f in item.contributing_failures)
    return Feedback(
        text="\n".join(lines) if lines else new.text,
        iteration=new.iteration,
        contributing_failures=failures,
    )
