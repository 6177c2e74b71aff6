from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pytest

from mcts_repair.bench import load_corpus
from mcts_repair.model import BugSpec, Command, TestCase

TOY_SOURCE = """\
def add(a, b):
    return a - b


def double(x):
    return add(x, x)
"""

TOY_TESTS = """\
import sys

from toy import add, double

CASES = {
    "add": lambda: add(2, 3) == 5,
    "double": lambda: double(4) == 8,
    "zero": lambda: add(0, 0) == 0,
}

name = sys.argv[1]
if not CASES[name]():
    print(f"{name}: wrong result")
    sys.exit(1)
"""


def make_toy_bug(root: Path, **overrides) -> BugSpec:
    """A two-function module whose ``add`` subtracts; tests run one case per process."""
    ws = root / "ws"
    ws.mkdir(parents=True, exist_ok=True)
    (ws / "toy.py").write_text(TOY_SOURCE, encoding="utf-8")
    (ws / "tests.py").write_text(TOY_TESTS, encoding="utf-8")
    fields = dict(
        bug_id="toy",
        workspace_root=ws,
        buggy_file="toy.py",
        buggy_region=(2, 2),
        buggy_code="    return a - b",
        context_code=TOY_SOURCE,
        build_command=Command("{python} -S -m py_compile toy.py", 10),
        test_command=Command("{python} -S tests.py {test}", 10),
        test_cases=(TestCase("add", "add"), TestCase("double", "double"), TestCase("zero", "zero")),
        reference_patch="    return a + b",
    )
    fields.update(overrides)
    return BugSpec(**fields)


@pytest.fixture
def toy_bug(tmp_path) -> BugSpec:
    return make_toy_bug(tmp_path)


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


def masked(obj):
    """Copy of a JSON-like value with wall-clock fields zeroed."""
    if isinstance(obj, dict):
        return {k: (0 if k == "wall_time_ms" else masked(v)) for k, v in obj.items()}
    if isinstance(obj, list):
        return [masked(v) for v in obj]
    return obj


def canonical(report) -> str:
    return json.dumps(masked(report.to_dict()), sort_keys=True)


def tree_hash(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        h.update(str(p.relative_to(root)).encode())
        if p.is_file():
            h.update(p.read_bytes())
    return h.hexdigest()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
