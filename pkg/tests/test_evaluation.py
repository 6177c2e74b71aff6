from __future__ import annotations

import tempfile
from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcts_repair.backend import ScriptedBackend
from mcts_repair.evaluation import (
    JudgeContext,
    build_judge_prompt,
    choose_strategy,
    clamp_score,
    evaluate,
    expected_reward_of,
    llm_judge,
    parse_score,
    test_judge,
)
from mcts_repair.model import (
    COMPILE_FAILURE,
    IDENTICAL_TO_PARENT,
    LLM_JUDGE,
    TEST_JUDGE,
    GenerationRecord,
    Patch,
    SearchConfig,
    TestCase,
    status_from_evaluation,
)
from mcts_repair.validation import ValidationResult

from conftest import make_toy_bug

CANDIDATE = Patch("p1", "    return a + b")
ROOT = Patch("p0", "    return a - b", "root")
CONFIG = SearchConfig()


def jctx(bug, validation, candidate=CANDIDATE, parent=ROOT):
    return JudgeContext(bug, candidate, parent, GenerationRecord(cot_trace="why", reflection="check"), validation)


def passing(bug, n_pass=None):
    ids = [t.test_id for t in bug.test_cases]
    n_pass = len(ids) if n_pass is None else n_pass
    return ValidationResult(True, {t: ("pass" if i < n_pass else "fail") for i, t in enumerate(ids)})


def judge(scores):
    return ScriptedBackend.from_dict({"judge": {CANDIDATE.replacement_text: scores}})


def many_tests(bug, n):
    return replace(bug, test_cases=tuple(TestCase(f"t{i}", f"t{i}") for i in range(n)))


@pytest.mark.parametrize("n, strategy", [(12, TEST_JUDGE), (1, LLM_JUDGE), (10, TEST_JUDGE), (9, LLM_JUDGE)])
def test_choose_strategy(toy_bug, n, strategy):
    assert choose_strategy(many_tests(toy_bug, n), CONFIG) == strategy


def test_strategy_override(toy_bug):
    assert choose_strategy(many_tests(toy_bug, 20), SearchConfig(judge_strategy=LLM_JUDGE)) == LLM_JUDGE


@pytest.mark.parametrize("score, reward", [(-20, 0.0), (0, 0.0), (73, 0.73), (100, 1.0), (150, 1.0)])
def test_clamp_examples(score, reward):
    assert clamp_score(score) == reward


@pytest.mark.parametrize(
    "text, score",
    [
        ("looks good\n85", 85.0),
        ("Score: 70", 70.0),
        ("**90**", 90.0),
        ("42/100", 42.0),
        ("-5", -5.0),
        ("reasoning\n\n  73.5  \n", 73.5),
        ("I would say 80 overall", None),
        ("", None),
        ("85\nbut actually unsure", None),
    ],
)
def test_parse_score(text, score):
    assert parse_score(text) == score


@pytest.mark.parametrize(
    "scores, rewards, expected",
    [
        ([50] * 5, [0.5] * 5, 0.5),
        ([40, 60, 50, 50, 50], [0.4, 0.6, 0.5, 0.5, 0.5], 0.5),
        ([-10, 120, 30, 30, 30], [0.0, 1.0, 0.3, 0.3, 0.3], 0.38),
    ],
)
def test_llm_judge_examples(toy_bug, scores, rewards, expected):
    backend = judge(scores)
    record = llm_judge(backend, jctx(toy_bug, passing(toy_bug, 1)), CONFIG)
    assert record.strategy == LLM_JUDGE
    assert record.raw_scores == [float(s) for s in scores]
    assert record.per_sample_rewards == rewards
    assert abs(record.expected_reward - expected) <= 1e-12
    assert len(backend.calls) == 5


def test_llm_judge_reasks_once_then_zero(toy_bug):
    backend = judge([["no idea", 70], ["still no", "nope"], 60, 60, 60])
    record = llm_judge(backend, jctx(toy_bug, passing(toy_bug, 1)), CONFIG)
    assert record.raw_scores == [70.0, 0.0, 60.0, 60.0, 60.0]
    assert len(backend.calls) == 7


@given(st.integers(1, 20).flatmap(lambda total: st.tuples(st.integers(0, total), st.just(total))))
def test_test_judge_is_pass_fraction(bug_counts):
    passed, total = bug_counts
    with tempfile.TemporaryDirectory() as tmp:
        bug = many_tests(make_toy_bug(Path(tmp)), total)
        ids = [t.test_id for t in bug.test_cases]
        outcomes = {t: ("pass" if i < passed else "timeout") for i, t in enumerate(ids)}
        record = test_judge(jctx(bug, ValidationResult(True, outcomes)))
    assert record.expected_reward == passed / total
    assert record.per_sample_rewards == [passed / total]
    assert record.raw_scores == []


def test_test_judge_examples(toy_bug):
    bug10 = many_tests(toy_bug, 10)
    assert test_judge(jctx(bug10, passing(bug10, 7))).expected_reward == 0.7
    bug12 = many_tests(toy_bug, 12)
    assert test_judge(jctx(bug12, passing(bug12, 0))).expected_reward == 0
    full = test_judge(jctx(bug10, passing(bug10)))
    assert full.expected_reward == 1 and status_from_evaluation(full) == "plausible"


def test_compile_failure_short_circuits(toy_bug):
    backend = judge([90] * 5)
    v = ValidationResult(False, compile_output="SyntaxError: invalid syntax")
    record = evaluate(backend, jctx(toy_bug, v), CONFIG)
    assert record.expected_reward == -1
    assert record.adjustments == {COMPILE_FAILURE}
    assert backend.calls == []
    assert "SyntaxError" in record.failure_text["<build>"]


def test_empty_patch_is_compile_failure(toy_bug):
    backend = judge([90] * 5)
    record = evaluate(backend, jctx(toy_bug, passing(toy_bug), candidate=Patch("p1", "")), CONFIG)
    assert record.expected_reward == -1 and backend.calls == []


def test_identical_to_parent_halved_once(toy_bug):
    same = Patch("p1", ROOT.replacement_text + "   \n")
    backend = ScriptedBackend.from_dict({"judge": {same.replacement_text: [80] * 5}})
    record = evaluate(backend, jctx(toy_bug, passing(toy_bug, 1), candidate=same), CONFIG)
    assert record.adjustments == {IDENTICAL_TO_PARENT}
    assert abs(record.expected_reward - 0.4) <= 1e-12
    assert expected_reward_of(record) == record.expected_reward


def test_plausible_under_llm_judge(toy_bug):
    record = evaluate(judge([95] * 5), jctx(toy_bug, passing(toy_bug)), CONFIG)
    assert record.strategy == LLM_JUDGE
    assert abs(record.expected_reward - 0.95) <= 1e-12
    assert status_from_evaluation(record) == "plausible"


@given(st.lists(st.integers(-200, 300), min_size=5, max_size=5), st.booleans(), st.booleans())
def test_reward_range_and_rederivation(scores, compiled, identical):
    with tempfile.TemporaryDirectory() as tmp:
        bug = make_toy_bug(Path(tmp))
        cand = ROOT if identical else CANDIDATE
        backend = ScriptedBackend.from_dict({"judge": {cand.replacement_text: scores}})
        v = passing(bug, 1) if compiled else ValidationResult(False)
        record = evaluate(backend, jctx(bug, v, candidate=cand), CONFIG)
    if compiled:
        assert 0 <= record.expected_reward <= 1
    else:
        assert record.expected_reward == -1
    assert expected_reward_of(record) == record.expected_reward


def test_judge_prompt_contents(toy_bug):
    messages = build_judge_prompt(jctx(toy_bug, passing(toy_bug, 1)))
    user = messages[1]["content"]
    for needle in ("    return a - b", "    return a + b", "1/3 tests pass", "why", "check"):
        assert needle in user
    assert "from 0 (useless) to 100" in user
    assert "bare integer" in user
