"""Patch validation in throwaway copies of the bug's workspace.

Commands run through the platform shell. Two placeholders are substituted:
``{test}`` becomes the test case's invocation and ``{python}`` the running
interpreter. A test command without ``{test}`` gets a non-empty invocation
appended; when every invocation is empty the command runs once and its
result stands for every declared test.
"""

from __future__ import annotations

import os
import shlex
import shutil
import signal
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .errors import IoFailure, RegionOutOfRange
from .model import BugSpec, Outcome, Patch, split_lines

OUTPUT_LIMIT = 8 * 1024
_NOT_FOUND = (126, 127)


@dataclass
class CommandRun:
    exit_code: int | None
    timed_out: bool
    output: str
    wall_time_ms: int

    @property
    def ok(self) -> bool:
        return not self.timed_out and self.exit_code == 0


@dataclass
class ValidationResult:
    compiled: bool
    outcomes: dict[str, str] = field(default_factory=dict)
    failure_text: dict[str, str] = field(default_factory=dict)
    wall_time_ms: int = 0
    compile_timed_out: bool = False
    compile_output: str = ""

    @property
    def plausible(self) -> bool:
        return self.compiled and bool(self.outcomes) and all(o == Outcome.PASS.value for o in self.outcomes.values())

    @property
    def passed(self) -> int:
        return sum(1 for o in self.outcomes.values() if o == Outcome.PASS.value)


Validator = Callable[[BugSpec, Patch], ValidationResult]


def _tail(data: bytes, limit: int = OUTPUT_LIMIT) -> str:
    return data[-limit:].decode("utf-8", errors="replace")


def _expand(command: str, test: str = "") -> str:
    return command.replace("{python}", shlex.quote(sys.executable)).replace("{test}", test)


def run_command(command: str, cwd: Path, timeout: float) -> CommandRun:
    """Run ``command`` in its own process group, killing the group on timeout."""
    env = dict(os.environ, PYTHONDONTWRITEBYTECODE="1")
    started = time.monotonic()
    try:
        proc = subprocess.Popen(
            command,
            shell=True,
            cwd=cwd,
            env=env,
            stdin=subprocess.DEVNULL,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            start_new_session=True,
        )
    except OSError as exc:
        raise IoFailure(f"cannot spawn {command!r}: {exc}") from exc
    try:
        out, _ = proc.communicate(timeout=timeout)
        timed_out = False
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, _ = proc.communicate()
        timed_out = True
    return CommandRun(
        exit_code=None if timed_out else proc.returncode,
        timed_out=timed_out,
        output=_tail(out or b""),
        wall_time_ms=int((time.monotonic() - started) * 1000),
    )


def apply_patch(bug: BugSpec, patch: Patch, sandbox_dir: str | Path) -> None:
    """Replace the buggy region of the sandbox copy with the patch text."""
    target = Path(sandbox_dir) / bug.buggy_file
    try:
        with open(target, encoding="utf-8", newline="") as fh:
            lines = split_lines(fh.read())
    except OSError as exc:
        raise IoFailure(f"cannot read {target}: {exc}") from exc
    start, end = bug.buggy_region
    if not 1 <= start <= end <= len(lines):
        raise RegionOutOfRange(f"region {start}-{end} outside {len(lines)}-line file {bug.buggy_file}")
    last = lines[end - 1]
    eol = last[len(last.rstrip("\r\n")):]
    replacement = patch.replacement_text + eol if patch.replacement_text else ""
    try:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write("".join(lines[: start - 1]) + replacement + "".join(lines[end:]))
    except OSError as exc:
        raise IoFailure(f"cannot write {target}: {exc}") from exc


def compile_workspace(bug: BugSpec, sandbox_dir: str | Path) -> CommandRun:
    return run_command(_expand(bug.build_command.command), Path(sandbox_dir), bug.build_command.timeout)


def _classify(run: CommandRun) -> str:
    if run.timed_out:
        return Outcome.TIMEOUT.value
    if run.exit_code == 0:
        return Outcome.PASS.value
    if run.exit_code in _NOT_FOUND:
        return Outcome.ERROR.value
    return Outcome.FAIL.value


def run_tests(bug: BugSpec, sandbox_dir: str | Path) -> ValidationResult:
    cwd = Path(sandbox_dir)
    template = bug.test_command.command
    timeout = bug.test_command.timeout
    result = ValidationResult(compiled=True)
    whole_suite = "{test}" not in template and not any(t.invocation for t in bug.test_cases)
    suite_run: CommandRun | None = None
    for case in bug.test_cases:
        if whole_suite:
            if suite_run is None:
                suite_run = run_command(_expand(template), cwd, timeout)
            run = suite_run
        elif "{test}" in template:
            run = run_command(_expand(template, case.invocation), cwd, timeout)
        else:
            command = _expand(template) + (" " + case.invocation if case.invocation else "")
            run = run_command(command, cwd, timeout)
        outcome = _classify(run)
        result.outcomes[case.test_id] = outcome
        if outcome != Outcome.PASS.value:
            text = run.output
            if run.timed_out:
                text = (text + "\n" if text else "") + f"timed out after {timeout}s"
            result.failure_text[case.test_id] = text[-OUTPUT_LIMIT:]
    return result


def _ignore(_dir: str, names: list[str]) -> list[str]:
    return [n for n in names if n in ("__pycache__", ".pytest_cache")]


def validate(bug: BugSpec, patch: Patch) -> ValidationResult:
    """Copy the workspace, apply the patch, build, and run every declared test."""
    started = time.monotonic()
    with tempfile.TemporaryDirectory(prefix=f"mcts-repair-{bug.bug_id}-") as tmp:
        sandbox = Path(tmp) / "ws"
        try:
            shutil.copytree(bug.workspace_root, sandbox, ignore=_ignore, symlinks=True)
        except OSError as exc:
            raise IoFailure(f"cannot copy workspace {bug.workspace_root}: {exc}") from exc
        apply_patch(bug, patch, sandbox)
        build = compile_workspace(bug, sandbox)
        if not build.ok:
            result = ValidationResult(
                compiled=False,
                compile_timed_out=build.timed_out,
                compile_output=build.output,
            )
        else:
            result = run_tests(bug, sandbox)
            result.compile_output = build.output
        # sandbox names are random; report paths against the real workspace so runs compare equal
        scrub = lambda text: text.replace(str(sandbox), str(bug.workspace_root))
        result.compile_output = scrub(result.compile_output)
        result.failure_text = {k: scrub(v) for k, v in result.failure_text.items()}
    result.wall_time_ms = int((time.monotonic() - started) * 1000)
    return result
