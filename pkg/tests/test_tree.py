from __future__ import annotations

import copy
import math
import random
from decimal import Decimal, getcontext

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mcts_repair.errors import IneligibleParent, NoEligibleNode, UnknownParent
from mcts_repair.model import (
    COMPILE_FAILED,
    COMPILE_FAILURE,
    LLM_JUDGE,
    PARTIAL,
    PLAUSIBLE,
    EvaluationRecord,
    Patch,
    PatchNode,
    SearchConfig,
)
from mcts_repair.tree import PatchTree, chain_select, eligible, replay, uct, verify_tree

CONFIG = SearchConfig()


def decimal_uct(q: float, n: int, parent: int, c: float) -> Decimal:
    """UCT computed in 40-digit decimal arithmetic."""
    getcontext().prec = 40
    return Decimal(q) + Decimal(c) * (Decimal(2) * Decimal(parent).ln() / Decimal(n)).sqrt()


def ev(reward: float, status: str = PARTIAL) -> EvaluationRecord:
    record = EvaluationRecord(LLM_JUDGE, expected_reward=reward)
    if status == COMPILE_FAILED:
        record.adjustments.add(COMPILE_FAILURE)
    return record


def grow(tree: PatchTree, parent: int, reward: float, status: str = PARTIAL, beta: float = 0.8, config=CONFIG) -> int:
    nid = tree.add_child(parent, Patch(f"p{tree.next_id}", f"v{tree.next_id}"), None, ev(reward, status), config, status)
    tree.backpropagate(nid, beta)
    return nid


def test_uct_examples():
    assert uct(0.5, 2, 4, 0.7) == pytest.approx(1.32419, abs=1e-5)
    assert abs(Decimal(uct(0.5, 2, 4, 0.7)) - decimal_uct(0.5, 2, 4, 0.7)) < Decimal("1e-15")
    assert uct(0.3, 5, 9, 0.0) == 0.3
    assert uct(0.9, 0, 7, 0.7) == math.inf
    assert uct(-1.0, 3, 0, 0.7) == math.inf


@given(
    st.floats(-1, 1),
    st.floats(-1, 1),
    st.integers(1, 50),
    st.integers(2, 500),
    st.floats(0.01, 3),
)
def test_uct_monotone_in_q(q1, q2, n, extra, c):
    parent = n + extra
    lo, hi = sorted((q1, q2))
    assert uct(lo, n, parent, c) <= uct(hi, n, parent, c)


@given(st.floats(-1, 1), st.integers(1, 50), st.integers(1, 50), st.integers(0, 500), st.floats(0.01, 3))
def test_uct_decreasing_in_visits(q, n1, n2, extra, c):
    assume(n1 != n2)
    small, big = sorted((n1, n2))
    parent = big + extra + 2
    assert uct(q, big, parent, c) < uct(q, small, parent, c)


def test_eligible():
    node = PatchNode(1, Patch("p1", "x"), parent=0, expansions=2)
    assert eligible(node, CONFIG)
    node.expansions = 3
    assert not eligible(node, CONFIG)
    node.expansions, node.status = 0, PLAUSIBLE
    assert not eligible(node, CONFIG)


def random_tree(rng: random.Random, size: int, config: SearchConfig = CONFIG) -> PatchTree:
    """Random shape with randomized Q and N, in the spirit of a snapshot under test."""
    tree = PatchTree.with_root("root")
    for i in range(1, size):
        open_nodes = [n.node_id for n in tree.nodes if eligible(n, config)]
        if not open_nodes:
            break
        parent = rng.choice(open_nodes)
        status = rng.choice([PARTIAL, PARTIAL, PARTIAL, PLAUSIBLE, COMPILE_FAILED])
        reward = -1.0 if status == COMPILE_FAILED else rng.random()
        tree.add_child(parent, Patch(f"p{i}", f"v{i}"), None, ev(reward, status), config, status)
    for n in tree.nodes:
        n.quality_Q = rng.uniform(-1, 1)
        n.visits_N = rng.randint(1, 40)
    # round some values so exact ties happen
    for n in rng.sample(tree.nodes, k=min(3, len(tree.nodes))):
        n.quality_Q, n.visits_N = 0.5, 4
    return tree


def oracle_select(tree: PatchTree, config: SearchConfig) -> int | None:
    scored = []
    for n in tree.nodes:
        if n.status not in ("root", "partial") or n.expansions >= config.max_expansion:
            continue
        parent_n = n.visits_N if n.parent is None else tree.nodes[n.parent].visits_N
        if n.visits_N == 0 or parent_n == 0:
            score = math.inf
        else:
            score = n.quality_Q + config.exploration_C * math.sqrt(2 * math.log(parent_n) / n.visits_N)
        scored.append((-score, n.node_id))
    return min(scored)[1] if scored else None


def test_select_matches_argmax_oracle():
    rng = random.Random(7)
    for trial in range(100):
        tree = random_tree(rng, rng.randint(1, 50))
        expected = oracle_select(tree, CONFIG)
        if expected is None:
            with pytest.raises(NoEligibleNode):
                tree.select(CONFIG)
        else:
            assert tree.select(CONFIG) == expected, f"trial {trial}"


def test_select_root_only_and_exhausted():
    tree = PatchTree.with_root("x")
    assert tree.select(CONFIG) == 0
    for _ in range(3):
        grow(tree, 0, -1.0, COMPILE_FAILED)
    with pytest.raises(NoEligibleNode):
        tree.select(CONFIG)


def test_select_tie_prefers_oldest():
    tree = PatchTree.with_root("x")
    a = tree.add_child(0, Patch("p1", "a"), None, ev(0.5), CONFIG)
    b = tree.add_child(0, Patch("p2", "b"), None, ev(0.5), CONFIG)
    tree.nodes[0].visits_N = 3
    tree.nodes[0].quality_Q = -1.0
    assert uct(0.5, 1, 3, 0.7) == tree.uct_of(tree.nodes[b], CONFIG)
    assert tree.select(CONFIG) == a


def test_add_child():
    tree = PatchTree.with_root("x")
    nid = tree.add_child(0, Patch("p1", "y"), None, ev(0.73), CONFIG)
    n = tree.nodes[nid]
    assert (n.quality_Q, n.visits_N, n.expansions, n.status) == (0.73, 1, 0, PARTIAL)
    assert tree.root.expansions == 1 and tree.root.children == [nid]
    bad = tree.add_child(0, Patch("p2", "z"), None, ev(-1.0, COMPILE_FAILED), CONFIG)
    assert (tree.nodes[bad].reward_R, tree.nodes[bad].quality_Q, tree.nodes[bad].status) == (-1.0, -1.0, COMPILE_FAILED)
    good = tree.add_child(0, Patch("p3", "w"), None, ev(1.0, PLAUSIBLE), CONFIG, PLAUSIBLE)
    with pytest.raises(IneligibleParent):
        tree.add_child(good, Patch("p4", "v"), None, ev(0.1), CONFIG)
    with pytest.raises(IneligibleParent):
        tree.add_child(0, Patch("p4", "v"), None, ev(0.1), CONFIG)
    with pytest.raises(UnknownParent):
        tree.add_child(99, Patch("p4", "v"), None, ev(0.1), CONFIG)


def test_backprop_hand_cases():
    tree = PatchTree.with_root("x")
    grow(tree, 0, 1.0, PLAUSIBLE)
    assert abs(tree.root.quality_Q - 0.8) <= 1e-12

    tree = PatchTree.with_root("x")
    tree.root.quality_Q = 0.2
    a = tree.add_child(0, Patch("p1", "a"), None, ev(0.4), CONFIG)
    b = tree.add_child(0, Patch("p2", "b"), None, ev(0.8), CONFIG)
    tree.nodes[b].visits_N = 3
    tree.backpropagate(b, 0.8)
    assert abs(tree.root.quality_Q - 0.60) <= 1e-12
    assert tree.nodes[a].quality_Q == 0.4


def test_compile_failure_drags_parent_down():
    tree = PatchTree.with_root("x")
    p = grow(tree, 0, 0.5)
    before = tree.nodes[p].quality_Q
    grow(tree, p, -1.0, COMPILE_FAILED)
    assert tree.nodes[p].quality_Q < before


def oracle_backprop(tree: PatchTree, from_id: int, beta: float) -> dict[int, tuple[float, int]]:
    """Independent restatement of the update on a plain dict view of the tree."""
    q = {n.node_id: n.quality_Q for n in tree.nodes}
    nv = {n.node_id: n.visits_N for n in tree.nodes}
    kids = {n.node_id: list(n.children) for n in tree.nodes}
    parent = {n.node_id: n.parent for n in tree.nodes}
    path = []
    a = parent[from_id]
    while a is not None:
        path.append(a)
        a = parent[a]
    for a in path:
        mean = sum(q[j] * nv[j] for j in kids[a]) / sum(nv[j] for j in kids[a])
        q[a] = min(1.0, max(-1.0, beta * mean + (1 - beta) * q[a]))
    for a in path:
        nv[a] += 1
    return {i: (q[i], nv[i]) for i in q}


ops = st.lists(
    st.tuples(st.integers(0, 10_000), st.sampled_from([PARTIAL, PARTIAL, PLAUSIBLE, COMPILE_FAILED]), st.floats(0, 1)),
    min_size=1,
    max_size=40,
)


def build(ops_list, beta, config=CONFIG, check=None):
    tree = PatchTree.with_root("root")
    for pick, status, reward in ops_list:
        open_nodes = [n.node_id for n in tree.nodes if eligible(n, config)]
        if not open_nodes:
            break
        parent = open_nodes[pick % len(open_nodes)]
        r = -1.0 if status == COMPILE_FAILED else reward
        nid = tree.add_child(parent, Patch(f"p{tree.next_id}", "v"), None, ev(r, status), config, status)
        if check is not None:
            check(tree, nid, beta)
        tree.backpropagate(nid, beta)
    return tree


@settings(max_examples=150)
@given(ops, st.floats(0, 1))
def test_backprop_matches_oracle_and_leaves_others(ops_list, beta):
    def check(tree, nid, beta):
        expected = oracle_backprop(tree, nid, beta)
        before = copy.deepcopy(tree.nodes)
        ancestors = set(tree.ancestors(nid))
        tree.backpropagate(nid, beta)
        for n in tree.nodes:
            assert abs(n.quality_Q - expected[n.node_id][0]) <= 1e-12
            assert n.visits_N == expected[n.node_id][1]
            assert -1.0 <= n.quality_Q <= 1.0
            if n.node_id not in ancestors:
                assert n.quality_Q == before[n.node_id].quality_Q
                assert n.visits_N == before[n.node_id].visits_N
        tree.nodes[:] = before  # undo so build() applies the real update once

    tree = build(ops_list, beta, check=check)
    assert verify_tree(tree, CONFIG) == []
    assert tree.root.visits_N == len(tree.nodes)


@settings(max_examples=100)
@given(ops)
def test_beta_zero_is_identity(ops_list):
    tree = build(ops_list, 0.0)
    for n in tree.nodes:
        assert n.quality_Q == (0.0 if n.parent is None else max(-1.0, min(1.0, n.reward_R)))


@settings(max_examples=100)
@given(ops)
def test_beta_one_is_child_weighted_mean(ops_list):
    # Q is refreshed before the visit pass, so each ancestor averages its
    # children with the visit counts they had when the new node arrived.
    def check(tree, nid, beta):
        path = set(tree.ancestors(nid))
        before = copy.deepcopy(tree.nodes)
        tree.backpropagate(nid, beta)
        for a in path:
            kids = [tree.nodes[c] for c in tree.nodes[a].children]
            weights = [c.visits_N - (1 if c.node_id in path else 0) for c in kids]
            mean = sum(c.quality_Q * w for c, w in zip(kids, weights)) / sum(weights)
            assert abs(tree.nodes[a].quality_Q - mean) <= 1e-12
        tree.nodes[:] = before

    build(ops_list, 1.0, check=check)


@settings(max_examples=100)
@given(ops, st.floats(0, 1))
def test_tree_json_roundtrip_and_replay(ops_list, beta):
    config = SearchConfig(beta=beta)
    tree = build(ops_list, beta, config)
    for i, n in enumerate(tree.nodes):
        n.iteration = i
    again = PatchTree.from_dict(tree.to_dict())
    assert again == tree
    assert replay(again, config, select_recorded(tree)) == []


def select_recorded(tree):
    """Selector that returns the recorded parent, so replay checks only Q/N arithmetic."""
    order = iter(n.parent for n in tree.nodes[1:])
    return lambda _tree, _config: next(order)


def test_verify_tree_reports_corruption():
    tree = build([(0, PARTIAL, 0.5), (1, PARTIAL, 0.3)], 0.8)
    assert verify_tree(tree, CONFIG) == []
    tree.nodes[1].visits_N = 7
    problems = verify_tree(tree, CONFIG)
    assert problems and all("node" in p for p in problems)
    assert any(p.startswith("node 1:") for p in problems)


def test_chain_select_prefers_newest_open_node():
    tree = PatchTree.with_root("x")
    a = grow(tree, 0, 0.9)
    grow(tree, a, -1.0, COMPILE_FAILED)
    assert chain_select(tree, CONFIG) == a
    grow(tree, a, -1.0, COMPILE_FAILED)
    grow(tree, a, -1.0, COMPILE_FAILED)
    assert chain_select(tree, CONFIG) == 0


def test_dot_export_has_every_node():
    tree = build([(0, PARTIAL, 0.5), (0, COMPILE_FAILED, 0), (1, PLAUSIBLE, 1)], 0.8)
    dot = tree.to_dot()
    assert dot.startswith("digraph")
    for n in tree.nodes:
        assert f"  n{n.node_id} [label=" in dot
    assert dot.count("->") == len(tree.nodes) - 1
