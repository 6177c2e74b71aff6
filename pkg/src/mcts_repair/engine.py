"""The repair loop: select, generate, evaluate, update, until the patch budget is spent."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any

from .backend import Backend, MeteredBackend
from .errors import BackendUnavailable, MalformedResponse, NoEligibleNode
from .evaluation import JudgeContext, evaluate
from .generation import GenerationContext, format_feedback, generate_candidates
from .llm import cost
from .model import (
    PLAUSIBLE,
    BugSpec,
    LogEntry,
    Patch,
    PlausiblePatch,
    RepairReport,
    SearchConfig,
    check_bugspec,
    normalize_code,
)
from .tree import SELECTORS, PatchTree, Selector, eligible, mcts_select, replay, verify_tree
from .validation import ValidationResult, Validator, validate

log = logging.getLogger(__name__)


def is_exact_match(candidate: str, reference: str | None) -> bool:
    return reference is not None and normalize_code(candidate) == normalize_code(reference)


@dataclass
class SearchState:
    bug: BugSpec
    config: SearchConfig
    tree: PatchTree
    root_feedback: str
    generated: int = 0
    iterations: int = 0
    plausible: list[PlausiblePatch] = field(default_factory=list)
    log: list[LogEntry] = field(default_factory=list)

    @property
    def remaining(self) -> int:
        return self.config.patch_budget - self.generated


def _feedback_for(state: SearchState, node_id: int) -> str:
    node = state.tree.nodes[node_id]
    if node.evaluation is None:
        return state.root_feedback
    return format_feedback(node.evaluation.test_outcomes, node.evaluation.failure_text)


def iteration(
    state: SearchState,
    backend: Backend,
    *,
    validator: Validator = validate,
    selector: Selector = mcts_select,
    judge_backend: Backend | None = None,
) -> list[LogEntry]:
    """One select/generate/evaluate/update cycle; returns its log entries."""
    config, tree, bug = state.config, state.tree, state.bug
    if state.remaining <= 0:
        return []
    selected_id = selector(tree, config)
    selected = tree.nodes[selected_id]
    count = min(config.branch, config.max_expansion - selected.expansions, state.remaining)
    ctx = GenerationContext(bug, selected, _feedback_for(state, selected_id), config)
    records = generate_candidates(backend, ctx, count)
    state.iterations += 1
    entries = []
    for k, gen in enumerate(records):
        expansion_index = selected.expansions
        patch = Patch(patch_id=f"p{tree.next_id}", replacement_text=gen.final_patch)
        if gen.final_patch:
            validation = validator(bug, patch)
        else:
            validation = ValidationResult(compiled=False, compile_output="model output had no code block")
        judge_ctx = JudgeContext(
            bug=bug,
            candidate=patch,
            parent=selected.patch,
            generation=gen,
            validation=validation,
            parent_id=selected_id,
            expansion_index=expansion_index,
        )
        evaluation = evaluate(judge_backend or backend, judge_ctx, config)
        node_id = tree.add_child(selected_id, patch, gen, evaluation, config, iteration=state.iterations)
        tree.backpropagate(node_id, config.beta)
        state.generated += 1
        node = tree.nodes[node_id]
        if node.status == PLAUSIBLE:
            state.plausible.append(
                PlausiblePatch(node_id, patch.replacement_text, is_exact_match(patch.replacement_text, bug.reference_patch))
            )
        entry = LogEntry(state.iterations, selected_id, node_id, node.reward_R, node.status)
        log.debug("bug %s iteration %d: %s", bug.bug_id, state.iterations, entry)
        entries.append(entry)
    state.log.extend(entries)
    return entries


def snapshot(tree: PatchTree, config: SearchConfig, policy: str = "mcts") -> dict[str, Any]:
    return {"policy": policy, "config": config.to_dict(), "tree": tree.to_dict()}


def verify_snapshot(snap: dict[str, Any]) -> list[str]:
    """Invariant and replay check of a snapshot produced by :func:`snapshot`."""
    try:
        config = SearchConfig.from_dict(snap["config"])
        tree = PatchTree.from_dict(snap["tree"])
        selector = SELECTORS[snap.get("policy", "mcts")]
    except (KeyError, TypeError, ValueError) as exc:
        return [f"malformed snapshot: {exc!r}"]
    problems = verify_tree(tree, config)
    if not problems:
        problems = replay(tree, config, selector)
    return problems


def repair(
    bug: BugSpec,
    backend: Backend,
    config: SearchConfig,
    *,
    validator: Validator = validate,
    policy: str = "mcts",
    judge_backend: Backend | None = None,
) -> RepairReport:
    """Search for plausible patches of ``bug`` within ``config.patch_budget`` candidates."""
    check_bugspec(bug)
    selector = SELECTORS[policy]
    started = time.monotonic()
    metered = MeteredBackend(backend)
    metered_judge = MeteredBackend(judge_backend) if judge_backend is not None else None
    tree = PatchTree.with_root(bug.buggy_code)
    report = RepairReport(bug_id=bug.bug_id)
    root_feedback = ""
    if config.patch_budget > 0:
        baseline = validator(bug, tree.root.patch)
        if baseline.compiled:
            root_feedback = format_feedback(baseline.outcomes, baseline.failure_text)
        else:
            root_feedback = "the original code does not build:\n" + baseline.compile_output
    state = SearchState(bug, config, tree, root_feedback)
    try:
        while state.remaining > 0:
            if config.early_stop_on_plausible and state.plausible:
                report.termination = "early_stop"
                break
            iteration(state, metered, validator=validator, selector=selector, judge_backend=metered_judge)
        else:
            report.termination = "budget"
    except NoEligibleNode:
        report.termination = "exhausted"
    except (BackendUnavailable, MalformedResponse) as exc:
        log.error("bug %s aborted: %s", bug.bug_id, exc)
        report.termination = "aborted"
        report.aborted = True
        report.error = str(exc)

    usage = metered.ledger.snapshot()
    if metered_judge is not None:
        usage = usage + metered_judge.ledger.snapshot()
    report.plausible_patches = state.plausible
    report.total_patches_generated = state.generated
    report.iterations = state.iterations
    report.prompt_tokens = usage.prompt_tokens
    report.completion_tokens = usage.completion_tokens
    report.tokens_total = usage.prompt_tokens + usage.completion_tokens
    report.estimated_cost = cost(report.tokens_total, config.price_per_1k_tokens)
    report.tree_snapshot = snapshot(tree, config, policy)
    report.per_iteration_log = state.log
    report.wall_time_ms = int((time.monotonic() - started) * 1000)
    return report


def summary(report: RepairReport) -> str:
    lines = [
        f"bug {report.bug_id}: {len(report.plausible_patches)} plausible patch(es), "
        f"{'exact match found' if report.exact_match else 'no exact match'}",
        f"  candidates generated: {report.total_patches_generated} in {report.iterations} iteration(s), "
        f"stopped by {report.termination}",
        f"  tokens: {report.tokens_total} (prompt {report.prompt_tokens}, completion {report.completion_tokens}), "
        f"cost {report.estimated_cost:.4f}, wall time {report.wall_time_ms / 1000:.1f}s",
    ]
    if report.error:
        lines.append(f"  error: {report.error}")
    for p in report.plausible_patches:
        lines.append(f"  node {p.node_id}{' [EM]' if p.exact_match else ''}:")
        lines.extend("    " + ln for ln in p.replacement_text.splitlines())
    return "\n".join(lines) + "\n"


__all__ = ["SearchState", "eligible", "is_exact_match", "iteration", "repair", "snapshot", "summary", "verify_snapshot"]
