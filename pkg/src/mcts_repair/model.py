"""Domain types shared by the tree, generator, judges and engine.

Every type round-trips through plain JSON via ``to_dict`` / ``from_dict``.
Field names are the stable on-disk schema.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any

from .errors import InvalidBugSpec

ROOT = "root"
PARTIAL = "partial"
PLAUSIBLE = "plausible"
COMPILE_FAILED = "compile_failed"
NODE_STATUSES = (ROOT, PARTIAL, PLAUSIBLE, COMPILE_FAILED)

LLM_JUDGE = "llm_judge"
TEST_JUDGE = "test_judge"

COMPILE_FAILURE = "compile_failure"
IDENTICAL_TO_PARENT = "identical_to_parent"


class Outcome(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    TIMEOUT = "timeout"
    ERROR = "error"


_BLANK_RUN = re.compile(r"\n{3,}")


def normalize_code(text: str) -> str:
    """Canonical form used for exact-match and identical-to-parent checks.

    Line endings become ``\\n``, trailing whitespace is dropped from every line,
    runs of blank lines collapse to a single blank line, and leading/trailing
    blank lines are removed.
    """
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    text = "\n".join(line.rstrip() for line in text.split("\n"))
    text = _BLANK_RUN.sub("\n\n", text)
    return text.strip("\n")


def split_lines(text: str) -> list[str]:
    """Split keeping line terminators; only ``\\n``, ``\\r\\n`` and ``\\r`` count."""
    return re.findall(r"[^\r\n]*(?:\r\n|\r|\n)|[^\r\n]+$", text)


def region_text(lines: list[str], start: int, end: int) -> str:
    """Text of 1-based inclusive ``start..end`` without the final terminator."""
    chunk = "".join(lines[start - 1:end])
    for eol in ("\r\n", "\n", "\r"):
        if chunk.endswith(eol):
            return chunk[: -len(eol)]
    return chunk


@dataclass(frozen=True)
class Command:
    command: str
    timeout: float

    def to_dict(self) -> dict[str, Any]:
        return {"command": self.command, "timeout": self.timeout}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Command:
        return cls(command=d["command"], timeout=d["timeout"])


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # keep pytest from collecting this

    test_id: str
    invocation: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"test_id": self.test_id, "invocation": self.invocation}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TestCase:
        return cls(test_id=d["test_id"], invocation=d.get("invocation", ""))


@dataclass(frozen=True)
class BugSpec:
    bug_id: str
    workspace_root: Path
    buggy_file: str
    buggy_region: tuple[int, int]
    buggy_code: str
    context_code: str
    build_command: Command
    test_command: Command
    test_cases: tuple[TestCase, ...]
    reference_patch: str | None = None

    @property
    def buggy_path(self) -> Path:
        return Path(self.workspace_root) / self.buggy_file

    def to_dict(self) -> dict[str, Any]:
        return {
            "bug_id": self.bug_id,
            "workspace_root": str(self.workspace_root),
            "buggy_file": self.buggy_file,
            "buggy_region": list(self.buggy_region),
            "buggy_code": self.buggy_code,
            "context_code": self.context_code,
            "build_command": self.build_command.to_dict(),
            "test_command": self.test_command.to_dict(),
            "test_cases": [t.to_dict() for t in self.test_cases],
            "reference_patch": self.reference_patch,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any], base_dir: Path | None = None) -> BugSpec:
        """Build from a JSON mapping.

        ``workspace_root`` is resolved against ``base_dir`` when relative.
        ``buggy_code`` and ``context_code`` are read from the workspace when
        absent. Invariants are checked with :func:`check_bugspec`.
        """
        try:
            root = Path(d["workspace_root"])
            if base_dir is not None and not root.is_absolute():
                root = (base_dir / root).resolve()
            start, end = d["buggy_region"]
            bug = cls(
                bug_id=d["bug_id"],
                workspace_root=root,
                buggy_file=d["buggy_file"],
                buggy_region=(int(start), int(end)),
                buggy_code=d.get("buggy_code"),
                context_code=d.get("context_code"),
                build_command=Command.from_dict(d["build_command"]),
                test_command=Command.from_dict(d["test_command"]),
                test_cases=tuple(TestCase.from_dict(t) for t in d["test_cases"]),
                reference_patch=d.get("reference_patch"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidBugSpec(f"malformed bug spec: {exc!r}") from exc
        if bug.buggy_code is None or bug.context_code is None:
            try:
                content = bug.buggy_path.read_text(encoding="utf-8")
            except OSError as exc:
                raise InvalidBugSpec(f"{bug.bug_id}: cannot read {bug.buggy_path}: {exc}") from exc
            lines = split_lines(content)
            if not 1 <= start <= end <= len(lines):
                raise InvalidBugSpec(
                    f"{bug.bug_id}: region {start}-{end} outside {len(lines)}-line file"
                )
            bug = replace(
                bug,
                buggy_code=bug.buggy_code if bug.buggy_code is not None else region_text(lines, start, end),
                context_code=bug.context_code if bug.context_code is not None else content,
            )
        check_bugspec(bug)
        return bug


def check_bugspec(bug: BugSpec) -> None:
    """Raise InvalidBugSpec unless every BugSpec invariant holds."""
    start, end = bug.buggy_region
    if start < 1 or end < start:
        raise InvalidBugSpec(f"{bug.bug_id}: empty or inverted region {start}-{end}")
    try:
        content = bug.buggy_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidBugSpec(f"{bug.bug_id}: cannot read {bug.buggy_path}: {exc}") from exc
    lines = split_lines(content)
    if end > len(lines):
        raise InvalidBugSpec(f"{bug.bug_id}: region {start}-{end} outside {len(lines)}-line file")
    if region_text(lines, start, end) != bug.buggy_code:
        raise InvalidBugSpec(f"{bug.bug_id}: buggy_code does not match {bug.buggy_file}:{start}-{end}")
    if not bug.test_cases:
        raise InvalidBugSpec(f"{bug.bug_id}: no test cases")
    ids = [t.test_id for t in bug.test_cases]
    if len(set(ids)) != len(ids):
        raise InvalidBugSpec(f"{bug.bug_id}: duplicate test ids")
    if bug.build_command.timeout <= 0 or bug.test_command.timeout <= 0:
        raise InvalidBugSpec(f"{bug.bug_id}: timeouts must be positive")


def load_bugspec(path: str | Path) -> BugSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidBugSpec(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidBugSpec(f"{path}:{exc.lineno}: {exc.msg}") from exc
    return BugSpec.from_dict(data, base_dir=path.parent)


@dataclass(frozen=True)
class Patch:
    patch_id: str
    replacement_text: str
    origin: str = "generated"

    def to_dict(self) -> dict[str, Any]:
        return {"patch_id": self.patch_id, "replacement_text": self.replacement_text, "origin": self.origin}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Patch:
        return cls(**d)


@dataclass
class GenerationRecord:
    cot_trace: str = ""
    draft_patch: str = ""
    reflection: str = ""
    final_patch: str = ""
    prompt_tokens: int = 0
    completion_tokens: int = 0
    wall_time_ms: int = 0
    parseable: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> GenerationRecord:
        return cls(**d)


@dataclass
class EvaluationRecord:
    strategy: str
    raw_scores: list[float] = field(default_factory=list)
    per_sample_rewards: list[float] = field(default_factory=list)
    adjustments: set[str] = field(default_factory=set)
    expected_reward: float = 0.0
    test_outcomes: dict[str, str] = field(default_factory=dict)
    failure_text: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategy": self.strategy,
            "raw_scores": list(self.raw_scores),
            "per_sample_rewards": list(self.per_sample_rewards),
            "adjustments": sorted(self.adjustments),
            "expected_reward": self.expected_reward,
            "test_outcomes": dict(self.test_outcomes),
            "failure_text": dict(self.failure_text),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> EvaluationRecord:
        d = dict(d)
        d["adjustments"] = set(d.get("adjustments", ()))
        return cls(**d)


def status_from_evaluation(ev: EvaluationRecord) -> str:
    if COMPILE_FAILURE in ev.adjustments:
        return COMPILE_FAILED
    if ev.test_outcomes and all(o == Outcome.PASS.value for o in ev.test_outcomes.values()):
        return PLAUSIBLE
    return PARTIAL


@dataclass
class PatchNode:
    node_id: int
    patch: Patch
    parent: int | None = None
    children: list[int] = field(default_factory=list)
    reward_R: float = 0.0
    quality_Q: float = 0.0
    visits_N: int = 1
    expansions: int = 0
    status: str = PARTIAL
    iteration: int = 0
    generation: GenerationRecord | None = None
    evaluation: EvaluationRecord | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "patch": self.patch.to_dict(),
            "parent": self.parent,
            "children": list(self.children),
            "reward_R": self.reward_R,
            "quality_Q": self.quality_Q,
            "visits_N": self.visits_N,
            "expansions": self.expansions,
            "status": self.status,
            "iteration": self.iteration,
            "generation": self.generation.to_dict() if self.generation else None,
            "evaluation": self.evaluation.to_dict() if self.evaluation else None,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PatchNode:
        d = dict(d)
        d["patch"] = Patch.from_dict(d["patch"])
        d["children"] = list(d.get("children", []))
        if d.get("generation") is not None:
            d["generation"] = GenerationRecord.from_dict(d["generation"])
        if d.get("evaluation") is not None:
            d["evaluation"] = EvaluationRecord.from_dict(d["evaluation"])
        return cls(**d)


@dataclass(frozen=True)
class SearchConfig:
    exploration_C: float = 0.7
    beta: float = 0.8
    n_judge_samples: int = 5
    branch: int = 1
    max_expansion: int = 3
    patch_budget: int = 16
    temperature: float = 0.9
    max_tokens: int = 8000
    test_sufficiency_threshold: int = 10
    early_stop_on_plausible: bool = False
    rng_seed: int = 0
    price_per_1k_tokens: float = 0.0015
    # None picks the judge from the test count; "llm_judge"/"test_judge" forces one.
    judge_strategy: str | None = None

    def __post_init__(self) -> None:
        problems = []
        if self.exploration_C < 0:
            problems.append("exploration_C must be >= 0")
        if not 0.0 <= self.beta <= 1.0:
            problems.append("beta must lie in [0, 1]")
        if self.n_judge_samples < 1:
            problems.append("n_judge_samples must be >= 1")
        if self.branch < 1:
            problems.append("branch must be >= 1")
        if self.max_expansion < 1:
            problems.append("max_expansion must be >= 1")
        if self.patch_budget < 0:
            problems.append("patch_budget must be >= 0")
        if self.temperature < 0:
            problems.append("temperature must be >= 0")
        if self.max_tokens < 1:
            problems.append("max_tokens must be >= 1")
        if self.test_sufficiency_threshold < 0:
            problems.append("test_sufficiency_threshold must be >= 0")
        if self.price_per_1k_tokens < 0:
            problems.append("price_per_1k_tokens must be >= 0")
        if self.judge_strategy not in (None, LLM_JUDGE, TEST_JUDGE):
            problems.append(f"unknown judge_strategy {self.judge_strategy!r}")
        if problems:
            raise ValueError("; ".join(problems))

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SearchConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class PlausiblePatch:
    node_id: int
    replacement_text: str
    exact_match: bool

    def to_dict(self) -> dict[str, Any]:
        return {"node_id": self.node_id, "replacement_text": self.replacement_text, "exact_match": self.exact_match}


@dataclass
class LogEntry:
    iteration: int
    selected: int
    generated: int
    reward: float
    status: str

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class RepairReport:
    bug_id: str
    plausible_patches: list[PlausiblePatch] = field(default_factory=list)
    total_patches_generated: int = 0
    iterations: int = 0
    tokens_total: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    wall_time_ms: int = 0
    estimated_cost: float = 0.0
    tree_snapshot: dict[str, Any] = field(default_factory=dict)
    per_iteration_log: list[LogEntry] = field(default_factory=list)
    termination: str = "budget"
    aborted: bool = False
    error: str | None = None

    @property
    def exact_match(self) -> bool:
        return any(p.exact_match for p in self.plausible_patches)

    def to_dict(self) -> dict[str, Any]:
        return {
            "bug_id": self.bug_id,
            "plausible_patches": [p.to_dict() for p in self.plausible_patches],
            "exact_match": self.exact_match,
            "total_patches_generated": self.total_patches_generated,
            "iterations": self.iterations,
            "tokens_total": self.tokens_total,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "wall_time_ms": self.wall_time_ms,
            "estimated_cost": self.estimated_cost,
            "tree_snapshot": self.tree_snapshot,
            "per_iteration_log": [e.to_dict() for e in self.per_iteration_log],
            "termination": self.termination,
            "aborted": self.aborted,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RepairReport:
        d = dict(d)
        d.pop("exact_match", None)
        d["plausible_patches"] = [PlausiblePatch(**p) for p in d.get("plausible_patches", [])]
        d["per_iteration_log"] = [LogEntry(**e) for e in d.get("per_iteration_log", [])]
        return cls(**d)
