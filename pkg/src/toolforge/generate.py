"""Generators: requirement-derived test scripts, function implementations,
and implementation-aware unit tests.

All three are model calls through the gateway; prompts come from the KB's
Prompts repository. Test scripts are standalone executables whose only
contract is "exit code 0 = all cases pass". Requirement-derived tests never
see function source; unit tests always do.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .config import TargetProfile
from .context import ImportPlan
from .errors import CodeExtractionError, EntrypointError
from .kb import PromptRecord, RegistrySnapshot
from .llm import ModelRequest, Provider

FENCE_RE = re.compile(r"```[a-zA-Z0-9_+-]*\n(.*?)```", re.DOTALL)
IDENTIFIER_RE = re.compile(r"^[A-Za-z_]\w*$")


@dataclass(frozen=True)
class Requirement:
    function_name: str
    requirement_text: str
    origin_request: str = ""

    def __post_init__(self):
        if not IDENTIFIER_RE.match(self.function_name):
            raise ValueError(f"invalid function name: {self.function_name!r}")
        if not self.requirement_text.strip():
            raise ValueError("requirement text must be non-empty")


@dataclass(frozen=True)
class TddSuite:
    cases: tuple[str, ...]  # one line per asserted case
    script: str


@dataclass(frozen=True)
class GeneratedFunction:
    name: str
    source: str
    import_plan: ImportPlan | None
    iteration: int


@dataclass(frozen=True)
class UnitTestSuite:
    script: str
    focus_notes: str = ""


def extract_code(model_text: str, profile: TargetProfile | None = None) -> str:
    """Content of the first fenced code block; bare text is accepted only if
    it parses under the profile."""
    match = FENCE_RE.search(model_text)
    if match:
        return match.group(1).strip("\n") + "\n"
    profile = profile or TargetProfile()
    if profile.source_extension == ".py":
        try:
            compile(model_text, "<model-output>", "exec")
        except SyntaxError as exc:
            raise CodeExtractionError(f"no extractable code in model output: {exc}") from exc
        if not model_text.strip():
            raise CodeExtractionError("model output is empty")
        return model_text.strip("\n") + "\n"
    raise CodeExtractionError("no fenced code block in model output")


def _entrypoint_present(source: str, name: str, profile: TargetProfile) -> bool:
    if profile.source_extension == ".py":
        return re.search(rf"^(?:async\s+)?def\s+{re.escape(name)}\s*\(", source, re.M) is not None
    return name in source


def _extract_cases(script: str) -> tuple[str, ...]:
    cases = tuple(
        line.strip() for line in script.splitlines() if line.strip().startswith("assert")
    )
    return cases or ("script-level checks",)


class CodeGenerator:
    """Stateless over inputs; each call is a fresh gateway request."""

    def __init__(
        self,
        gateway: Provider,
        prompts: dict[str, PromptRecord],
        profile: TargetProfile | None = None,
    ):
        self._gateway = gateway
        self._prompts = prompts
        self._profile = profile or TargetProfile()

    def _complete(self, role: str, user_text: str) -> str:
        request = ModelRequest(
            component_role=role,
            system_prompt=self._prompts[role].body,
            messages=(("user", user_text),),
        )
        response = self._gateway.complete(request)
        if response.kind != "text":
            raise CodeExtractionError(f"{role} returned a tool call instead of code")
        return response.text

    def generate_tdd_tests(
        self, requirement: Requirement, feedback, context: str
    ) -> TddSuite:
        """Requirement-derived tests; prior feedback text is included verbatim.

        The function source is never part of this request: these tests precede
        the implementation by construction.
        """
        parts = [
            f"Function name: {requirement.function_name}",
            f"Requirement: {requirement.requirement_text}",
            "",
            context,
            "",
            f"The test script will run in a directory containing "
            f"{requirement.function_name}{self._profile.source_extension}; import the "
            f"function as `from {requirement.function_name} import "
            f"{requirement.function_name}`.",
        ]
        if feedback is not None and feedback.text:
            parts += ["", "Corrections from previous attempts:", feedback.text]
        text = self._complete("tdd_generator", "\n".join(parts))
        script = extract_code(text, self._profile)
        return TddSuite(cases=_extract_cases(script), script=script)

    def generate_function(
        self,
        requirement: Requirement,
        tests: TddSuite | None,
        context: str,
        kb: RegistrySnapshot | None = None,
        iteration: int = 1,
        feedback=None,
    ) -> GeneratedFunction:
        """Implementation satisfying the requirement (and test script, when in
        test-first mode). ``feedback`` is threaded here only when no test
        generation stage precedes this call."""
        parts = [
            f"Implement a function named exactly `{requirement.function_name}`.",
            f"Requirement: {requirement.requirement_text}",
            "",
            context,
        ]
        if tests is not None:
            parts += ["", "It must pass this test script:", "```", tests.script.rstrip(), "```"]
        if feedback is not None and feedback.text:
            parts += ["", "Corrections from previous attempts:", feedback.text]
        text = self._complete("function_generator", "\n".join(parts))
        source = extract_code(text, self._profile)
        if not _entrypoint_present(source, requirement.function_name, self._profile):
            raise EntrypointError(
                f"entrypoint must be named {requirement.function_name}"
            )
        plan = _infer_import_plan(source, requirement.function_name, kb, self._profile)
        return GeneratedFunction(
            name=requirement.function_name,
            source=source,
            import_plan=plan,
            iteration=iteration,
        )

    def generate_unit_tests(
        self, function: GeneratedFunction, requirement: Requirement
    ) -> UnitTestSuite:
        """Implementation-aware tests; the full source travels in the request."""
        parts = [
            f"Write unit tests for this implementation of "
            f"`{function.name}` (requirement: {requirement.requirement_text}).",
            "Target edge cases and error handling specific to the code below.",
            "```",
            function.source.rstrip(),
            "```",
            f"The script runs next to {function.name}{self._profile.source_extension}; "
            f"import via `from {function.name} import {function.name}`.",
        ]
        text = self._complete("unit_test_generator", "\n".join(parts))
        script = extract_code(text, self._profile)
        return UnitTestSuite(script=script, focus_notes="edge cases and error handling")


def _infer_import_plan(
    source: str, own_name: str, kb: RegistrySnapshot | None, profile: TargetProfile
) -> ImportPlan | None:
    if kb is None:
        return None
    referenced = [
        name
        for name in sorted(kb.descriptors)
        if name != own_name and re.search(rf"\b{re.escape(name)}\b", source)
    ]
    if not referenced:
        return None
    from .context import resolve_import

    statements: list[str] = []
    for name in referenced:
        statements.extend(resolve_import(name, kb, profile).statements)
    return ImportPlan(statements=tuple(statements), referenced_functions=tuple(referenced))
