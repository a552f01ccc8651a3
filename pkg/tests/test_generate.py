"""Generators: extraction, entrypoint checks, feedback threading, and the
requirement-test / unit-test distinction."""

import pytest

from helpers import (
    DOUBLE_SRC_OK,
    DOUBLE_TDD_SCRIPT,
    DOUBLE_UNIT_SCRIPT,
    EIGENVALUES_SRC,
    fenced,
    text_entry,
)

from toolforge.adjudicate import Feedback
from toolforge.errors import CodeExtractionError, EntrypointError
from toolforge.generate import CodeGenerator, Requirement, TddSuite, extract_code
from toolforge.kb import DEFAULT_PROMPTS, PromptRecord, load
from toolforge.llm import ReplayProvider, SpyProvider, Transcript

PROMPTS = {
    role: PromptRecord(component_role=role, body=body)
    for role, body in DEFAULT_PROMPTS.items()
}

REQ = Requirement(
    function_name="double_number",
    requirement_text="double a number",
    origin_request="please double 21",
)


def make_generator(entries):
    spy = SpyProvider(ReplayProvider(Transcript(entries)))
    return CodeGenerator(spy, PROMPTS), spy


# -- extract_code ----------------------------------------------------------

def test_extract_single_fenced_block():
    assert extract_code("```python\nx = 1\n```") == "x = 1\n"


def test_extract_prose_then_fenced_block():
    text = "Here is the implementation you asked for:\n```python\nx = 2\n```\nEnjoy."
    assert extract_code(text) == "x = 2\n"


def test_extract_bare_parseable_text():
    assert extract_code("value = 40 + 2\n") == "value = 40 + 2\n"


def test_extract_pure_prose_fails():
    with pytest.raises(CodeExtractionError):
        extract_code("I am sorry, I cannot help with that.")


# -- requirement / types ---------------------------------------------------

def test_requirement_validation():
    with pytest.raises(ValueError):
        Requirement(function_name="not a name!", requirement_text="x")
    with pytest.raises(ValueError):
        Requirement(function_name="fine", requirement_text="   ")


# -- TDD generation --------------------------------------------------------

def test_generate_tdd_tests_builds_suite():
    generator, _ = make_generator([text_entry("tdd_generator", fenced(DOUBLE_TDD_SCRIPT))])
    suite = generator.generate_tdd_tests(REQ, None, "Available tools: none")
    assert suite.script == DOUBLE_TDD_SCRIPT
    assert len(suite.cases) == 2  # one per assert line


def test_feedback_text_threaded_verbatim_into_tdd_request():
    feedback = Feedback(text="expected [2.0, 3.0] but received [1.7, 3.4]", iteration=1)
    generator, spy = make_generator([text_entry("tdd_generator", fenced(DOUBLE_TDD_SCRIPT))])
    generator.generate_tdd_tests(REQ, feedback, "ctx")
    request_text = spy.requests[0].messages[0][1]
    assert "expected [2.0, 3.0] but received [1.7, 3.4]" in request_text


def test_tdd_request_never_contains_function_source():
    generator, spy = make_generator([text_entry("tdd_generator", fenced(DOUBLE_TDD_SCRIPT))])
    generator.generate_tdd_tests(REQ, None, "ctx")
    assert "return x + x" not in spy.requests[0].messages[0][1]


def test_replay_determinism_byte_for_byte():
    suites = []
    for _ in range(2):
        generator, _ = make_generator([text_entry("tdd_generator", fenced(DOUBLE_TDD_SCRIPT))])
        suites.append(generator.generate_tdd_tests(REQ, None, "ctx"))
    assert suites[0].script == suites[1].script


# -- function generation ---------------------------------------------------

def test_generate_function_verifies_entrypoint():
    generator, _ = make_generator([text_entry("function_generator", fenced(DOUBLE_SRC_OK))])
    tests = TddSuite(cases=("assert double_number(2) == 4",), script=DOUBLE_TDD_SCRIPT)
    function = generator.generate_function(REQ, tests, "ctx")
    assert function.name == "double_number"
    assert function.source == DOUBLE_SRC_OK


def test_generate_function_wrong_entrypoint_is_format_error():
    wrong = "def halve_number(x):\n    return x / 2\n"
    generator, _ = make_generator([text_entry("function_generator", fenced(wrong))])
    tests = TddSuite(cases=("c",), script=DOUBLE_TDD_SCRIPT)
    with pytest.raises(EntrypointError, match="entrypoint must be named double_number"):
        generator.generate_function(REQ, tests, "ctx")


def test_generate_function_attaches_import_plan_for_reused_tool(seeded_kb):
    snapshot = load(seeded_kb)
    req = Requirement(
        function_name="compute_eigenvalues",
        requirement_text="compute eigenvalues for a given matrix input.",
    )
    generator, _ = make_generator(
        [text_entry("function_generator", fenced(EIGENVALUES_SRC))]
    )
    function = generator.generate_function(req, None, "ctx", kb=snapshot)
    assert "from matrix_operations import matrix_operations" in function.source
    assert function.import_plan is not None
    assert function.import_plan.referenced_functions == ("matrix_operations",)


def test_generate_function_self_contained_when_nothing_reusable(kb_root):
    snapshot = load(kb_root)
    generator, _ = make_generator([text_entry("function_generator", fenced(DOUBLE_SRC_OK))])
    function = generator.generate_function(REQ, None, "ctx", kb=snapshot)
    assert function.import_plan is None


# -- unit test generation --------------------------------------------------

def test_generate_unit_tests_includes_source_in_request():
    generator, spy = make_generator(
        [
            text_entry("function_generator", fenced(DOUBLE_SRC_OK)),
            text_entry("unit_test_generator", fenced(DOUBLE_UNIT_SCRIPT)),
        ]
    )
    tests = TddSuite(cases=("c",), script=DOUBLE_TDD_SCRIPT)
    function = generator.generate_function(REQ, tests, "ctx")
    suite = generator.generate_unit_tests(function, REQ)
    assert suite.script == DOUBLE_UNIT_SCRIPT
    # implementation-aware: full source travels in the request
    assert DOUBLE_SRC_OK.rstrip() in spy.requests[1].messages[0][1]
    assert suite.script != DOUBLE_TDD_SCRIPT
