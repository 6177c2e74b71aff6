"""Candidate generation: reason-then-patch prompting followed by one reflection round."""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from string import Template

from .backend import Backend, CallTag
from .llm import Usage
from .model import BugSpec, GenerationRecord, Outcome, PatchNode, SearchConfig

PROMPT_VERSION = "v1"
FAILURE_TEXT_LIMIT = 8 * 1024


@lru_cache(maxsize=None)
def load_template(name: str) -> Template:
    text = resources.files("mcts_repair.prompts").joinpath(f"{name}_{PROMPT_VERSION}.txt").read_text(encoding="utf-8")
    return Template(text)


@dataclass
class GenerationContext:
    bug: BugSpec
    selected_node: PatchNode
    failure_feedback: str
    config: SearchConfig


def format_feedback(outcomes: dict[str, str], failure_text: dict[str, str]) -> str:
    """Render non-passing tests and their captured output for a prompt."""
    parts = []
    for test_id, outcome in outcomes.items():
        if outcome == Outcome.PASS.value:
            continue
        detail = failure_text.get(test_id, "").strip()
        parts.append(f"- {test_id}: {outcome}" + (f"\n{detail}" if detail else ""))
    return "\n".join(parts) if parts else "(no failing test output captured)"


def extract_patch(model_text: str) -> str | None:
    """Content of the last fenced code block, or None when there is none.

    The fence's language tag is ignored. An unterminated final fence runs to
    the end of the text.
    """
    blocks: list[str] = []
    current: list[str] | None = None
    for line in model_text.splitlines():
        if line.strip().startswith("```"):
            if current is None:
                current = []
            else:
                blocks.append("\n".join(current))
                current = None
        elif current is not None:
            current.append(line)
    if current is not None:
        blocks.append("\n".join(current))
    return blocks[-1] if blocks else None


def _reasoning_part(model_text: str) -> str:
    """Text before the first fence: the step-by-step analysis."""
    idx = model_text.find("```")
    return (model_text if idx < 0 else model_text[:idx]).strip()


def build_repair_prompt(ctx: GenerationContext) -> list[dict[str, str]]:
    bug, node = ctx.bug, ctx.selected_node
    start, end = bug.buggy_region
    partial = ""
    if node.patch.replacement_text != bug.buggy_code:
        partial = load_template("partial").substitute(partial_patch=node.patch.replacement_text)
    user = load_template("repair_user").substitute(
        bug_id=bug.bug_id,
        buggy_file=bug.buggy_file,
        context_code=bug.context_code.rstrip("\n"),
        region_start=start,
        region_end=end,
        buggy_code=bug.buggy_code,
        partial_section=partial,
        failure_feedback=ctx.failure_feedback[-FAILURE_TEXT_LIMIT:],
    )
    return [
        {"role": "system", "content": load_template("repair_system").template.strip()},
        {"role": "user", "content": user},
    ]


def _tag(ctx: GenerationContext, kind: str, expansion_index: int) -> CallTag:
    return CallTag(
        kind=kind,
        bug_id=ctx.bug.bug_id,
        parent_id=ctx.selected_node.node_id,
        expansion_index=expansion_index,
        parent_text=ctx.selected_node.patch.replacement_text,
    )


def reflect(
    backend: Backend,
    ctx: GenerationContext,
    draft: str,
    *,
    history: list[dict[str, str]] | None = None,
    expansion_index: int | None = None,
) -> tuple[str, str, Usage]:
    """Ask the model to critique ``draft`` and return (reflection, revised, usage).

    ``revised`` falls back to ``draft`` when the critique carries no code block.
    """
    if not draft:
        raise ValueError("reflection needs a non-empty draft")
    start, end = ctx.bug.buggy_region
    if history is None:
        history = build_repair_prompt(ctx) + [{"role": "assistant", "content": f"```\n{draft}\n```"}]
    ask = load_template("reflect").substitute(draft_patch=draft, region_start=start, region_end=end)
    messages = history + [{"role": "user", "content": ask}]
    if expansion_index is None:
        expansion_index = ctx.selected_node.expansions
    text, usage = backend.complete(messages, _tag(ctx, "reflect", expansion_index))
    revised = extract_patch(text)
    return text, (revised if revised else draft), usage


def generate_candidates(backend: Backend, ctx: GenerationContext, count: int | None = None) -> list[GenerationRecord]:
    """Produce ``count`` (default: branch) candidate patches from the selected node."""
    count = ctx.config.branch if count is None else count
    if count < 1:
        raise ValueError("branch must be >= 1")
    prompt = build_repair_prompt(ctx)
    records = []
    for i in range(count):
        expansion_index = ctx.selected_node.expansions + i
        started = time.monotonic()
        text, usage = backend.complete(prompt, _tag(ctx, "generate", expansion_index))
        record = GenerationRecord(
            cot_trace=_reasoning_part(text),
            prompt_tokens=usage.prompt_tokens,
            completion_tokens=usage.completion_tokens,
        )
        draft = extract_patch(text)
        if not draft:
            record.parseable = False
        else:
            record.draft_patch = draft
            history = prompt + [{"role": "assistant", "content": text}]
            reflection, revised, r_usage = reflect(
                backend, ctx, draft, history=history, expansion_index=expansion_index
            )
            record.reflection = reflection
            record.final_patch = revised
            record.prompt_tokens += r_usage.prompt_tokens
            record.completion_tokens += r_usage.completion_tokens
        record.wall_time_ms = int((time.monotonic() - started) * 1000)
        records.append(record)
    return records
