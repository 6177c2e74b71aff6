"""Desk-scale harness: the bundled toy-bug corpus and synthetic search landscapes.

Corpus layout, one directory per entry::

    <entry>/bugspec.json     BugSpec; workspace_root relative to this file
    <entry>/workspace/...    the buggy program and its tests
    <entry>/fixture.json     scripted backend answers (see mcts_repair.backend)
    <entry>/expected.json    {"plausible_within": int | null, "exact_match": bool}

``plausible_within`` is the smallest patch budget at which the scripted
search must find a plausible patch; null marks an entry that stays unfixed.
"""

from __future__ import annotations

import json
import random
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .backend import CallTag, ScriptedBackend, fenced
from .engine import repair
from .errors import InvalidBugSpec, MalformedEntry
from .llm import Usage, estimate_tokens
from .model import LLM_JUDGE, PLAUSIBLE, BugSpec, Command, Outcome, Patch, RepairReport, SearchConfig, TestCase, load_bugspec
from .validation import ValidationResult, validate


def bundled_corpus_dir() -> Path:
    return Path(str(resources.files("mcts_repair").joinpath("corpus")))


@dataclass
class CorpusEntry:
    name: str
    path: Path
    bug: BugSpec
    fixture: dict
    plausible_within: int | None
    exact_match: bool

    def backend(self) -> ScriptedBackend:
        return ScriptedBackend.from_dict(self.fixture)


def _read_json(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedEntry(f"{path}: cannot read: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedEntry(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise MalformedEntry(f"{path}:1: expected a JSON object")
    return data


def load_entry(entry_dir: str | Path, check_root: bool = True) -> CorpusEntry:
    entry_dir = Path(entry_dir)
    spec_path = entry_dir / "bugspec.json"
    raw = _read_json(spec_path)
    for key in ("bug_id", "workspace_root", "buggy_file", "buggy_region", "build_command", "test_command", "test_cases"):
        if key not in raw:
            raise MalformedEntry(f"{spec_path}: missing required field {key!r}")
    try:
        bug = load_bugspec(spec_path)
    except InvalidBugSpec as exc:
        raise MalformedEntry(f"{spec_path}: {exc}") from exc
    fixture = _read_json(entry_dir / "fixture.json")
    expected = _read_json(entry_dir / "expected.json")
    within = expected.get("plausible_within")
    if within is not None and (not isinstance(within, int) or within < 0):
        raise MalformedEntry(f"{entry_dir / 'expected.json'}: plausible_within must be a non-negative integer or null")
    if check_root and validate(bug, Patch("p0", bug.buggy_code, "root")).plausible:
        raise MalformedEntry(f"{spec_path}: the unpatched program already passes every test")
    return CorpusEntry(
        name=entry_dir.name,
        path=entry_dir,
        bug=bug,
        fixture=fixture,
        plausible_within=within,
        exact_match=bool(expected.get("exact_match", False)),
    )


def load_corpus(directory: str | Path | None = None, check_root: bool = True) -> list[CorpusEntry]:
    directory = Path(directory) if directory is not None else bundled_corpus_dir()
    dirs = [d for d in sorted(directory.iterdir()) if (d / "bugspec.json").is_file()]
    with ThreadPoolExecutor(max_workers=4) as pool:
        entries = list(pool.map(lambda d: load_entry(d, check_root), dirs))
    if not entries:
        raise MalformedEntry(f"{directory}: no entries found")
    return entries


def run_corpus(
    entries: list[CorpusEntry],
    config: SearchConfig,
    parallel: int = 4,
) -> dict[str, RepairReport]:
    """Repair every entry with its own scripted backend; reports keyed by entry name."""

    def one(entry: CorpusEntry) -> tuple[str, RepairReport]:
        return entry.name, repair(entry.bug, entry.backend(), config)

    with ThreadPoolExecutor(max_workers=max(1, parallel)) as pool:
        return dict(pool.map(one, entries))


# synthetic landscapes


@dataclass
class LandscapeNode:
    score: int
    children: list[str] = field(default_factory=list)
    compiles: bool = True


@dataclass
class SyntheticLandscape:
    """Abstract patches with scripted judge scores.

    Expanding a node for the k-th time yields its k-th child; expansions past
    the last child yield output without a code block, i.e. a dead end.
    """

    name: str
    nodes: dict[str, LandscapeNode]
    goals: frozenset[str]
    root: str = "root"
    jitter: int = 5

    def __post_init__(self) -> None:
        if self.root not in self.nodes:
            raise ValueError(f"root {self.root!r} missing")
        for name, node in self.nodes.items():
            if not 0 <= node.score <= 100:
                raise ValueError(f"{name}: score {node.score} outside [0, 100]")
            for c in node.children:
                if c not in self.nodes:
                    raise ValueError(f"{name}: unknown child {c!r}")
        if self.goals and not self.goals & self.reachable():
            raise ValueError("no goal is reachable from the root")

    def reachable(self) -> set[str]:
        seen, stack = set(), [self.root]
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            stack.extend(self.nodes[n].children)
        return seen


class LandscapeBackend:
    """Generator and judge answering from a landscape; judge scores get seeded jitter."""

    def __init__(self, landscape: SyntheticLandscape, seed: int):
        self.landscape = landscape
        self.seed = seed
        self.calls: list[CallTag] = []

    def complete(self, messages, tag):
        self.calls.append(tag)
        land = self.landscape
        if tag.kind == "generate":
            node = land.nodes.get(tag.parent_text)
            if node is None or tag.expansion_index >= len(node.children):
                text = "I cannot find another way to change this code."
            else:
                text = f"Trying the next variant.\n\n{fenced(node.children[tag.expansion_index])}"
        elif tag.kind == "reflect":
            text = "The patch looks consistent with the failing test."
        else:
            node = land.nodes.get(tag.candidate_text)
            base = node.score if node is not None else 0
            rng = random.Random(f"{self.seed}:{tag.candidate_text}:{tag.sample_index}:{tag.attempt}")
            text = f"Score follows.\n{base + rng.randint(-land.jitter, land.jitter)}"
        p = estimate_tokens("\n".join(m["content"] for m in messages))
        c = estimate_tokens(text)
        return text, Usage(p, c, p + c, estimated=True)


def landscape_validator(landscape: SyntheticLandscape):
    def check(bug: BugSpec, patch: Patch) -> ValidationResult:
        node = landscape.nodes.get(patch.replacement_text)
        if node is None or not node.compiles:
            return ValidationResult(compiled=False, compile_output="unknown or broken variant")
        if patch.replacement_text in landscape.goals:
            return ValidationResult(compiled=True, outcomes={"goal": Outcome.PASS.value})
        return ValidationResult(
            compiled=True,
            outcomes={"goal": Outcome.FAIL.value},
            failure_text={"goal": f"variant {patch.replacement_text} is not a fix"},
        )

    return check


@dataclass
class LandscapeTrace:
    reached_goal: bool
    expansions: int
    expansions_to_goal: int | None
    selections: list[int]
    report: RepairReport


def run_landscape(landscape: SyntheticLandscape, config: SearchConfig, policy: str = "mcts") -> LandscapeTrace:
    """Search the landscape through the production engine with a scripted judge."""
    config = replace(config, judge_strategy=LLM_JUDGE, early_stop_on_plausible=True)
    with tempfile.TemporaryDirectory(prefix=f"landscape-{landscape.name}-") as tmp:
        (Path(tmp) / "variant.txt").write_text(landscape.root + "\n", encoding="utf-8")
        bug = BugSpec(
            bug_id=f"landscape-{landscape.name}",
            workspace_root=Path(tmp),
            buggy_file="variant.txt",
            buggy_region=(1, 1),
            buggy_code=landscape.root,
            context_code=landscape.root + "\n",
            build_command=Command("true", 1),
            test_command=Command("true", 1),
            test_cases=(TestCase("goal"),),
        )
        report = repair(
            bug,
            LandscapeBackend(landscape, config.rng_seed),
            config,
            validator=landscape_validator(landscape),
            policy=policy,
        )
    first_goal = next((e for e in report.per_iteration_log if e.status == PLAUSIBLE), None)
    expansions_to_goal = None
    if first_goal is not None:
        expansions_to_goal = 1 + next(i for i, e in enumerate(report.per_iteration_log) if e is first_goal)
    return LandscapeTrace(
        reached_goal=first_goal is not None,
        expansions=report.total_patches_generated,
        expansions_to_goal=expansions_to_goal,
        selections=[e.selected for e in report.per_iteration_log],
        report=report,
    )


def single_edge() -> SyntheticLandscape:
    return SyntheticLandscape(
        name="single-edge",
        nodes={"root": LandscapeNode(0, ["fix"]), "fix": LandscapeNode(100)},
        goals=frozenset({"fix"}),
    )


def goal_free(depth: int = 4, width: int = 3) -> SyntheticLandscape:
    """A full tree of mediocre variants without any fix."""
    nodes: dict[str, LandscapeNode] = {}

    def build(name: str, level: int) -> None:
        kids = [f"{name}.{i}" for i in range(width)] if level < depth else []
        nodes[name] = LandscapeNode(30, kids)
        for k in kids:
            build(k, level + 1)

    build("root", 0)
    return SyntheticLandscape(name="goal-free", nodes=nodes, goals=frozenset())


def deceptive_corridor() -> SyntheticLandscape:
    """High-scoring variants that never lead to a fix, next to a modest true path.

    The root's first child opens a ternary corridor scored around 90 whose
    nodes at depth 3 have no successors. The root's second child scores 40
    and its first child is the fix.
    """
    nodes: dict[str, LandscapeNode] = {}

    def corridor(name: str, depth: int) -> None:
        kids = [f"{name}.{i}" for i in range(3)] if depth < 3 else []
        nodes[name] = LandscapeNode(90 - 2 * depth, kids)
        for k in kids:
            corridor(k, depth + 1)

    corridor("lure", 1)
    nodes["root"] = LandscapeNode(0, ["lure", "true-path"])
    nodes["true-path"] = LandscapeNode(40, ["fix"])
    nodes["fix"] = LandscapeNode(45)
    return SyntheticLandscape(name="deceptive-corridor", nodes=nodes, goals=frozenset({"fix"}))
