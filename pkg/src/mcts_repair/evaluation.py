"""Reward computation for freshly generated candidates.

Two judges exist. The test judge scores the pass rate. The model judge asks
the backend for a 0-100 score several times, maps each score onto [0, 1]
and averages. Candidates that do not build get -1 without consulting
either judge, and candidates equal to their parent have their reward halved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .backend import Backend, CallTag
from .generation import FAILURE_TEXT_LIMIT, format_feedback, load_template
from .model import (
    COMPILE_FAILURE,
    IDENTICAL_TO_PARENT,
    LLM_JUDGE,
    TEST_JUDGE,
    BugSpec,
    EvaluationRecord,
    GenerationRecord,
    Outcome,
    Patch,
    SearchConfig,
    normalize_code,
)
from .validation import ValidationResult

IDENTICAL_PENALTY = 0.5
COMPILE_FAILURE_REWARD = -1.0

_SCORE_LINE = re.compile(r"(?:score\s*[:=]?\s*)?\**\s*([-+]?\d+(?:\.\d+)?)\s*\**\s*(?:/\s*100)?\.?", re.I)


@dataclass
class JudgeContext:
    bug: BugSpec
    candidate: Patch
    parent: Patch
    generation: GenerationRecord
    validation: ValidationResult
    parent_id: int = 0
    expansion_index: int = 0


def choose_strategy(bug: BugSpec, config: SearchConfig) -> str:
    if config.judge_strategy is not None:
        return config.judge_strategy
    return TEST_JUDGE if len(bug.test_cases) >= config.test_sufficiency_threshold else LLM_JUDGE


def clamp_score(score: float) -> float:
    if score <= 0:
        return 0.0
    if score >= 100:
        return 1.0
    return score / 100


def parse_score(text: str) -> float | None:
    """Score from the last non-empty line, or None if it is not a bare number."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        return None
    m = _SCORE_LINE.fullmatch(lines[-1])
    return float(m.group(1)) if m else None


def build_judge_prompt(ctx: JudgeContext) -> list[dict[str, str]]:
    bug, v = ctx.bug, ctx.validation
    start, end = bug.buggy_region
    if not v.compiled:
        results = "the candidate does not build"
    else:
        lines = [f"{sum(1 for o in v.outcomes.values() if o == Outcome.PASS.value)}/{len(v.outcomes)} tests pass"]
        failing = format_feedback(v.outcomes, v.failure_text)
        if v.passed < len(v.outcomes):
            lines.append(failing)
        results = "\n".join(lines)
    user = load_template("judge_user").substitute(
        bug_id=bug.bug_id,
        buggy_file=bug.buggy_file,
        region_start=start,
        region_end=end,
        context_code=bug.context_code.rstrip("\n"),
        buggy_code=bug.buggy_code,
        candidate=ctx.candidate.replacement_text,
        test_ids=", ".join(t.test_id for t in bug.test_cases),
        test_results=results[-FAILURE_TEXT_LIMIT:],
        cot_trace=ctx.generation.cot_trace or "(none)",
        reflection=ctx.generation.reflection or "(none)",
    )
    return [
        {"role": "system", "content": load_template("judge_system").template.strip()},
        {"role": "user", "content": user},
    ]


def _outcome_record(strategy: str, validation: ValidationResult) -> EvaluationRecord:
    return EvaluationRecord(
        strategy=strategy,
        test_outcomes=dict(validation.outcomes),
        failure_text=dict(validation.failure_text),
    )


def llm_judge(backend: Backend, ctx: JudgeContext, config: SearchConfig) -> EvaluationRecord:
    messages = build_judge_prompt(ctx)
    record = _outcome_record(LLM_JUDGE, ctx.validation)
    for i in range(config.n_judge_samples):
        score = None
        for attempt in range(2):
            tag = CallTag(
                kind="judge",
                bug_id=ctx.bug.bug_id,
                parent_id=ctx.parent_id,
                expansion_index=ctx.expansion_index,
                parent_text=ctx.parent.replacement_text,
                candidate_text=ctx.candidate.replacement_text,
                sample_index=i,
                attempt=attempt,
            )
            text, _ = backend.complete(messages, tag)
            score = parse_score(text)
            if score is not None:
                break
        if score is None:
            score = 0.0
        record.raw_scores.append(score)
        record.per_sample_rewards.append(clamp_score(score))
    record.expected_reward = sum(record.per_sample_rewards) / len(record.per_sample_rewards)
    return record


def test_judge(ctx: JudgeContext) -> EvaluationRecord:
    outcomes = ctx.validation.outcomes
    total = len(ctx.bug.test_cases)
    passed = sum(1 for t in ctx.bug.test_cases if outcomes.get(t.test_id) == Outcome.PASS.value)
    record = _outcome_record(TEST_JUDGE, ctx.validation)
    reward = passed / total
    record.per_sample_rewards = [reward]
    record.expected_reward = reward
    return record


test_judge.__test__ = False  # type: ignore[attr-defined]


def evaluate(backend: Backend, ctx: JudgeContext, config: SearchConfig) -> EvaluationRecord:
    strategy = choose_strategy(ctx.bug, config)
    if not ctx.validation.compiled or not ctx.candidate.replacement_text:
        record = _outcome_record(strategy, ctx.validation)
        record.adjustments.add(COMPILE_FAILURE)
        record.expected_reward = COMPILE_FAILURE_REWARD
        if ctx.validation.compile_output:
            record.failure_text["<build>"] = ctx.validation.compile_output
        return record
    record = test_judge(ctx) if strategy == TEST_JUDGE else llm_judge(backend, ctx, config)
    if normalize_code(ctx.candidate.replacement_text) == normalize_code(ctx.parent.replacement_text):
        record.adjustments.add(IDENTICAL_TO_PARENT)
        record.expected_reward *= IDENTICAL_PENALTY
    return record


def expected_reward_of(record: EvaluationRecord) -> float:
    """Recompute the reward from the record's own fields."""
    if COMPILE_FAILURE in record.adjustments:
        return COMPILE_FAILURE_REWARD
    reward = sum(record.per_sample_rewards) / len(record.per_sample_rewards)
    if IDENTICAL_TO_PARENT in record.adjustments:
        reward *= IDENTICAL_PENALTY
    return reward
