"""Adjudicators: deterministic decision bit, model-phrased feedback,
aggregation."""

import pytest
from hypothesis import given, strategies as st

from helpers import text_entry

from toolforge.adjudicate import Feedback, Verdict, adjudicate, aggregate_feedback
from toolforge.errors import GatewayError
from toolforge.kb import DEFAULT_PROMPTS, PromptRecord
from toolforge.llm import ReplayProvider, Transcript
from toolforge.sandbox import ExecutionReport

PROMPTS = {
    role: PromptRecord(component_role=role, body=body)
    for role, body in DEFAULT_PROMPTS.items()
}


class FailingGateway:
    def complete(self, request):
        raise GatewayError("model unavailable")


def report(exit_code=0, stdout="", stderr="", timed_out=False):
    return ExecutionReport(
        exit_code=exit_code,
        stdout=stdout,
        stderr=stderr,
        duration_seconds=0.1,
        timed_out=timed_out,
    )


def test_exit_zero_is_accept_without_model_call():
    # a gateway that would fail proves the model is not consulted on accept
    verdict = adjudicate("intermediate", report(0), "script", FailingGateway(), PROMPTS, 1)
    assert verdict.decision == "accept"
    assert verdict.feedback is None


def test_nonzero_exit_is_reject_with_model_feedback():
    gateway = ReplayProvider(
        Transcript(
            [text_entry("intermediate_adjudicator", "expected [2.0, 3.0] but received [1.7, 3.4]")]
        )
    )
    verdict = adjudicate(
        "intermediate",
        report(1, stderr="AssertionError: [1.7, 3.4] != [2.0, 3.0]"),
        "script",
        gateway,
        PROMPTS,
        1,
    )
    assert verdict.decision == "reject"
    assert "expected [2.0, 3.0] but received [1.7, 3.4]" == verdict.feedback.text


def test_timeout_is_reject_naming_non_termination():
    verdict = adjudicate(
        "final", report(124, timed_out=True), "script", FailingGateway(), PROMPTS, 2
    )
    assert verdict.decision == "reject"
    assert "timed out" in verdict.feedback.text


def test_model_failure_falls_back_to_mechanical_feedback_never_accept():
    verdict = adjudicate(
        "final",
        report(1, stderr="AssertionError: nope"),
        "script",
        FailingGateway(),
        PROMPTS,
        1,
    )
    assert verdict.decision == "reject"
    assert "exit code 1" in verdict.feedback.text
    assert "AssertionError: nope" in verdict.feedback.text


def test_stage_symmetry():
    for stage in ("intermediate", "final"):
        verdict = adjudicate(stage, report(0), "s", FailingGateway(), PROMPTS, 1)
        assert verdict.decision == "accept"
        assert verdict.stage == stage


def test_verdict_invariants():
    with pytest.raises(ValueError):
        Verdict(decision="reject", feedback=None, stage="final")
    with pytest.raises(ValueError):
        Verdict(decision="accept", feedback=Feedback(text="x", iteration=1), stage="final")


def test_aggregate_identity_on_empty_history():
    e1 = Feedback(text="fix the sign", iteration=1)
    assert aggregate_feedback([], e1).text == "fix the sign"


def test_aggregate_keeps_order_and_both_texts():
    e1 = Feedback(text="first constraint", iteration=1)
    e2 = Feedback(text="second constraint", iteration=2)
    merged = aggregate_feedback([e1], e2)
    assert "first constraint" in merged.text
    assert "second constraint" in merged.text
    assert merged.text.index("first constraint") < merged.text.index("second constraint")
    assert merged.iteration == 2


def test_aggregate_dedup_exact_lines():
    e1 = Feedback(text="same line", iteration=1)
    e2 = Feedback(text="same line", iteration=2)
    merged = aggregate_feedback([e1], e2)
    assert merged.text.count("same line") == 1


@given(st.lists(st.text(alphabet="abcxyz ", min_size=1).map(str.strip).filter(bool), min_size=1, max_size=8))
def test_aggregate_line_count_non_decreasing(texts):
    history = []
    previous_lines = 0
    merged = None
    for i, text in enumerate(texts, start=1):
        merged = aggregate_feedback(history, Feedback(text=text, iteration=i))
        lines = len(merged.text.splitlines())
        assert lines >= previous_lines
        previous_lines = lines
        history.append(Feedback(text=text, iteration=i))
