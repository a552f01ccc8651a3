"""Executor layer: isolated subprocess runs with timeouts and output capture.

Each run gets a fresh working directory. Module-path entries (Functions
repository, codebase root) and mounted resources are *copied* into the
sandbox, so generated code can never modify the originals. The directory is
removed after the report is captured unless retain-on-failure is set.
"""

from __future__ import annotations

import json
import os
import shutil
import signal
import stat
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import jsonschema

from .errors import ArgumentValidationError, InterpreterNotFoundError, SandboxError
from .kb import ToolDescriptor

KILL_GRACE_SECONDS = 2.0


@dataclass(frozen=True)
class SandboxSpec:
    workdir: Path | None = None  # fresh temp dir created when None
    mounted_resources: tuple[tuple[Path, str, bool], ...] = ()  # (src, dest rel, read-only)
    module_path_entries: tuple[Path, ...] = ()
    timeout_seconds: int = 30
    env_policy: str = "inherit_minimal"
    retain_on_failure: bool = False
    network_deny_hint: bool = False

    def __post_init__(self):
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be > 0")


@dataclass(frozen=True)
class ExecutionReport:
    exit_code: int
    stdout: str
    stderr: str
    duration_seconds: float
    timed_out: bool

    @property
    def ok(self) -> bool:
        return self.exit_code == 0 and not self.timed_out

    def last_stdout_json(self):
        """Result contract for tool invocations: last stdout line is JSON."""
        lines = [line for line in self.stdout.splitlines() if line.strip()]
        if not lines:
            raise ValueError("no stdout to parse")
        return json.loads(lines[-1])


def _make_workdir(spec: SandboxSpec) -> Path:
    try:
        if spec.workdir is None:
            return Path(tempfile.mkdtemp(prefix="toolforge-sbx-"))
        workdir = Path(spec.workdir)
        workdir.mkdir(parents=True, exist_ok=False)
        return workdir
    except OSError as exc:
        raise SandboxError(f"cannot create sandbox workdir: {exc}") from exc


def _chmod_readonly(path: Path) -> None:
    for sub in [path, *path.rglob("*")] if path.is_dir() else [path]:
        if sub.is_file():
            sub.chmod(stat.S_IRUSR | stat.S_IRGRP | stat.S_IROTH)


def _force_rmtree(path: Path) -> None:
    def onerror(func, target, _exc):
        os.chmod(target, stat.S_IWUSR | stat.S_IRUSR)
        parent = os.path.dirname(target)
        os.chmod(parent, stat.S_IWUSR | stat.S_IRUSR | stat.S_IXUSR)
        func(target)

    shutil.rmtree(path, onerror=onerror)


def _populate(spec: SandboxSpec, workdir: Path) -> list[str]:
    """Copy mounted resources and module-path dirs into the sandbox; return
    the PYTHONPATH-style entries pointing at the copies."""
    for src, dest_rel, read_only in spec.mounted_resources:
        src = Path(src)
        dest = workdir / dest_rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        if src.is_dir():
            shutil.copytree(src, dest)
        else:
            shutil.copy2(src, dest)
        if read_only:
            _chmod_readonly(dest)

    path_entries: list[str] = []
    for i, entry in enumerate(spec.module_path_entries):
        entry = Path(entry)
        dest = workdir / f"_modpath{i}"
        if entry.is_dir():
            shutil.copytree(entry, dest)
        else:
            dest.mkdir()
            shutil.copy2(entry, dest / entry.name)
        path_entries.append(str(dest))
    return path_entries


def _environment(spec: SandboxSpec, path_entries: list[str], workdir: Path) -> dict[str, str]:
    env = {
        "PATH": os.environ.get("PATH", "/usr/bin:/bin"),
        "LANG": "C.UTF-8",
        "HOME": str(workdir),
        "PYTHONDONTWRITEBYTECODE": "1",
    }
    if path_entries:
        env["PYTHONPATH"] = os.pathsep.join(path_entries)
    if spec.network_deny_hint:
        # Advisory only: signals "no network" to cooperating code. The
        # implemented isolation level is subprocess + copied mounts, not a jail.
        env["NO_NETWORK"] = "1"
    return env


def run_script(
    spec: SandboxSpec,
    files: Sequence[tuple[str, str]],
    command: Sequence[str],
) -> ExecutionReport:
    """Run ``command`` with cwd inside a fresh sandbox holding ``files``.

    The process group is terminated at the timeout and hard-killed after a
    short grace period so captured output is not lost.
    """
    workdir = _make_workdir(spec)
    report: ExecutionReport | None = None
    try:
        path_entries = _populate(spec, workdir)
        for rel, content in files:
            target = workdir / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(content)
        env = _environment(spec, path_entries, workdir)

        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                list(command),
                cwd=workdir,
                env=env,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                start_new_session=True,
            )
        except FileNotFoundError as exc:
            raise InterpreterNotFoundError(f"interpreter not found: {command[0]}") from exc

        timed_out = False
        try:
            stdout, stderr = proc.communicate(timeout=spec.timeout_seconds)
        except subprocess.TimeoutExpired:
            timed_out = True
            _terminate_group(proc)
            try:
                stdout, stderr = proc.communicate(timeout=KILL_GRACE_SECONDS)
            except subprocess.TimeoutExpired:
                _kill_group(proc)
                stdout, stderr = proc.communicate()
        duration = time.monotonic() - start

        exit_code = proc.returncode
        if timed_out and exit_code == 0:
            exit_code = 124  # timeout invariant: timed_out implies nonzero exit
        report = ExecutionReport(
            exit_code=exit_code,
            stdout=stdout or "",
            stderr=stderr or "",
            duration_seconds=duration,
            timed_out=timed_out,
        )
        return report
    finally:
        failed = report is None or report.exit_code != 0
        if spec.retain_on_failure and failed:
            pass  # retained for post-mortem; caller owns cleanup
        else:
            _force_rmtree(workdir)


def _terminate_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGTERM)
    except (ProcessLookupError, PermissionError):
        pass


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


_SHIM_TEMPLATE = """\
import json
import sys

from {module} import {entrypoint} as _entrypoint

with open(sys.argv[1]) as fh:
    _arguments = json.load(fh)
_result = _entrypoint(**_arguments)
print(json.dumps(_result))
"""


def run_tool(
    spec: SandboxSpec,
    descriptor: ToolDescriptor,
    arguments: dict,
    interpreter: Sequence[str],
) -> ExecutionReport:
    """Invoke a registered tool through a generated shim.

    Arguments are schema-validated before any process is spawned; the result
    is printed as a single JSON document on the last stdout line.
    """
    try:
        jsonschema.validate(arguments, dict(descriptor.parameters_schema))
    except jsonschema.ValidationError as exc:
        raise ArgumentValidationError(
            f"arguments rejected for {descriptor.name}: {exc.message}"
        ) from exc

    module = Path(descriptor.function_file).stem
    shim = _SHIM_TEMPLATE.format(module=module, entrypoint=descriptor.entrypoint)
    files = [
        ("_arguments.json", json.dumps(arguments)),
        ("_invoke.py", shim),
    ]
    command = [*interpreter, "_invoke.py", "_arguments.json"]
    return run_script(spec, files, command)
