"""Monte-Carlo patch tree: UCT selection, child insertion, back-propagation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import IneligibleParent, NoEligibleNode, UnknownNode, UnknownParent
from .model import (
    COMPILE_FAILED,
    PARTIAL,
    PLAUSIBLE,
    ROOT,
    EvaluationRecord,
    GenerationRecord,
    Patch,
    PatchNode,
    SearchConfig,
    status_from_evaluation,
)


def uct(quality_Q: float, visits_N: int, parent_visits: int, C: float) -> float:
    if visits_N == 0 or parent_visits == 0:
        return math.inf
    return quality_Q + C * math.sqrt(2.0 * math.log(parent_visits) / visits_N)


def eligible(node: PatchNode, config: SearchConfig) -> bool:
    return node.status in (ROOT, PARTIAL) and node.expansions < config.max_expansion


def _clamp(x: float) -> float:
    return max(-1.0, min(1.0, x))


@dataclass
class PatchTree:
    nodes: list[PatchNode] = field(default_factory=list)

    @classmethod
    def with_root(cls, buggy_code: str) -> PatchTree:
        root = PatchNode(
            node_id=0,
            patch=Patch(patch_id="p0", replacement_text=buggy_code, origin="root"),
            reward_R=0.0,
            quality_Q=0.0,
            visits_N=1,
            status=ROOT,
        )
        return cls(nodes=[root])

    @property
    def root(self) -> PatchNode:
        return self.nodes[0]

    @property
    def next_id(self) -> int:
        return len(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> PatchNode:
        if not 0 <= node_id < len(self.nodes):
            raise UnknownNode(f"no node {node_id}")
        return self.nodes[node_id]

    def ancestors(self, node_id: int) -> list[int]:
        """Ids from the parent of ``node_id`` up to the root."""
        out = []
        parent = self.node(node_id).parent
        while parent is not None:
            out.append(parent)
            parent = self.nodes[parent].parent
        return out

    def uct_of(self, node: PatchNode, config: SearchConfig) -> float:
        parent_visits = node.visits_N if node.parent is None else self.nodes[node.parent].visits_N
        return uct(node.quality_Q, node.visits_N, parent_visits, config.exploration_C)

    def select(self, config: SearchConfig) -> int:
        best_id, best_score = None, -math.inf
        for node in self.nodes:
            if not eligible(node, config):
                continue
            score = self.uct_of(node, config)
            # strict ">" keeps the smallest node_id on ties
            if best_id is None or score > best_score:
                best_id, best_score = node.node_id, score
        if best_id is None:
            raise NoEligibleNode("every node is terminal or expansion-capped")
        return best_id

    def add_child(
        self,
        parent_id: int,
        patch: Patch,
        gen: GenerationRecord | None,
        evaluation: EvaluationRecord,
        config: SearchConfig,
        status: str | None = None,
        iteration: int = 0,
    ) -> int:
        if not 0 <= parent_id < len(self.nodes):
            raise UnknownParent(f"no node {parent_id}")
        parent = self.nodes[parent_id]
        if not eligible(parent, config):
            raise IneligibleParent(f"node {parent_id} ({parent.status}, {parent.expansions} expansions) is closed")
        if status is None:
            status = status_from_evaluation(evaluation)
        if status not in (PARTIAL, PLAUSIBLE, COMPILE_FAILED):
            raise ValueError(f"bad child status {status!r}")
        reward = evaluation.expected_reward
        node = PatchNode(
            node_id=self.next_id,
            patch=patch,
            parent=parent_id,
            reward_R=reward,
            quality_Q=_clamp(reward),
            visits_N=1,
            expansions=0,
            status=status,
            iteration=iteration,
            generation=gen,
            evaluation=evaluation,
        )
        self.nodes.append(node)
        parent.children.append(node.node_id)
        parent.expansions += 1
        return node.node_id

    def backpropagate(self, from_id: int, beta: float) -> None:
        """Refresh ancestor Q from their children, then count one visit per ancestor.

        The new node already carries its own visit from insertion.
        """
        chain = self.ancestors(from_id)
        for a in chain:
            node = self.nodes[a]
            total_n = 0
            weighted = 0.0
            for c in node.children:
                child = self.nodes[c]
                weighted += child.quality_Q * child.visits_N
                total_n += child.visits_N
            if total_n == 0:
                continue
            node.quality_Q = _clamp(beta * (weighted / total_n) + (1.0 - beta) * node.quality_Q)
        for a in chain:
            self.nodes[a].visits_N += 1

    def to_dict(self) -> dict[str, Any]:
        return {"nodes": [n.to_dict() for n in self.nodes]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PatchTree:
        return cls(nodes=[PatchNode.from_dict(n) for n in d["nodes"]])

    def to_dot(self) -> str:
        lines = ["digraph patch_tree {", "  node [shape=box];"]
        for n in self.nodes:
            label = f"{n.node_id}\\n{n.status}\\nQ={n.quality_Q:.3f} N={n.visits_N}"
            lines.append(f'  n{n.node_id} [label="{label}"];')
        for n in self.nodes:
            for c in n.children:
                lines.append(f"  n{n.node_id} -> n{c};")
        lines.append("}")
        return "\n".join(lines) + "\n"


Selector = Callable[[PatchTree, SearchConfig], int]


def mcts_select(tree: PatchTree, config: SearchConfig) -> int:
    return tree.select(config)


def chain_select(tree: PatchTree, config: SearchConfig) -> int:
    """Serial trial-and-error: always extend the newest expandable candidate."""
    for node in reversed(tree.nodes):
        if eligible(node, config):
            return node.node_id
    raise NoEligibleNode("every node is terminal or expansion-capped")


SELECTORS: dict[str, Selector] = {"mcts": mcts_select, "chain": chain_select}


def verify_tree(tree: PatchTree, config: SearchConfig) -> list[str]:
    """Structural invariant check; returns one message per violation."""
    problems: list[str] = []
    nodes = tree.nodes
    if not nodes:
        return ["tree has no nodes"]
    for i, n in enumerate(nodes):
        if n.node_id != i:
            problems.append(f"node at index {i} has node_id {n.node_id}")
    root = nodes[0]
    if root.status != ROOT or root.parent is not None:
        problems.append("node 0: root must have status 'root' and no parent")
    child_of: dict[int, int] = {}
    for n in nodes:
        for c in n.children:
            if not 0 <= c < len(nodes):
                problems.append(f"node {n.node_id}: child {c} does not exist")
            elif c in child_of:
                problems.append(f"node {c}: listed as child of both {child_of[c]} and {n.node_id}")
            else:
                child_of[c] = n.node_id
    for n in nodes[1:]:
        if n.parent is None:
            problems.append(f"node {n.node_id}: non-root node without parent")
        elif n.parent >= n.node_id:
            problems.append(f"node {n.node_id}: parent {n.parent} is not older than the node")
        elif child_of.get(n.node_id) != n.parent:
            problems.append(f"node {n.node_id}: parent {n.parent} does not list it as a child")
        if n.status == ROOT:
            problems.append(f"node {n.node_id}: only node 0 may be the root")
    for n in nodes:
        if not -1.0 <= n.reward_R <= 1.0:
            problems.append(f"node {n.node_id}: reward_R {n.reward_R} outside [-1, 1]")
        if not -1.0 <= n.quality_Q <= 1.0:
            problems.append(f"node {n.node_id}: quality_Q {n.quality_Q} outside [-1, 1]")
        if n.visits_N < 0 or n.expansions < 0:
            problems.append(f"node {n.node_id}: negative visits_N or expansions")
        if n.expansions > config.max_expansion:
            problems.append(f"node {n.node_id}: expansions {n.expansions} exceed max_expansion {config.max_expansion}")
        if n.expansions != len(n.children):
            problems.append(f"node {n.node_id}: expansions {n.expansions} != {len(n.children)} children")
        if n.status in (PLAUSIBLE, COMPILE_FAILED) and n.expansions != 0:
            problems.append(f"node {n.node_id}: terminal {n.status} node was expanded")
        if (n.reward_R == -1.0) != (n.status == COMPILE_FAILED):
            problems.append(f"node {n.node_id}: reward_R is -1 iff status is compile_failed (got {n.reward_R}, {n.status})")
        child_visits = sum(nodes[c].visits_N for c in n.children if 0 <= c < len(nodes))
        if n.visits_N < child_visits:
            problems.append(f"node {n.node_id}: visits_N {n.visits_N} < children total {child_visits}")
        expected_visits = 1 + _descendant_count(tree, n.node_id)
        if n.visits_N != expected_visits:
            problems.append(f"node {n.node_id}: visits_N {n.visits_N} != 1 + descendants ({expected_visits})")
    return problems


def _descendant_count(tree: PatchTree, node_id: int) -> int:
    stack = list(tree.nodes[node_id].children)
    count = 0
    while stack:
        c = stack.pop()
        if not 0 <= c < len(tree.nodes):
            continue
        count += 1
        stack.extend(tree.nodes[c].children)
    return count


def replay(tree: PatchTree, config: SearchConfig, selector: Selector = mcts_select) -> list[str]:
    """Rebuild the tree from node rewards in insertion order and compare.

    Each iteration's recorded parent must equal what ``selector`` picks on the
    rebuilt tree at that point, and the rebuilt Q/N must equal the snapshot
    bit for bit.
    """
    problems: list[str] = []
    if not tree.nodes:
        return ["tree has no nodes"]
    rebuilt = PatchTree.with_root(tree.root.patch.replacement_text)
    rebuilt.root.patch = tree.root.patch
    current_iteration = None
    for n in tree.nodes[1:]:
        if n.parent is None or not 0 <= n.parent < len(rebuilt.nodes):
            problems.append(f"node {n.node_id}: cannot replay, bad parent {n.parent}")
            return problems
        if n.iteration != current_iteration:
            current_iteration = n.iteration
            try:
                picked = selector(rebuilt, config)
            except NoEligibleNode:
                picked = None
            if picked != n.parent:
                problems.append(
                    f"iteration {n.iteration}: replayed selection {picked} != recorded parent {n.parent} of node {n.node_id}"
                )
                return problems
        evaluation = n.evaluation or EvaluationRecord(strategy="", expected_reward=n.reward_R)
        if evaluation.expected_reward != n.reward_R:
            problems.append(f"node {n.node_id}: evaluation reward differs from reward_R")
        try:
            rebuilt.add_child(n.parent, n.patch, n.generation, evaluation, config, n.status, n.iteration)
        except Exception as exc:  # noqa: BLE001 - any failure is a replay violation
            problems.append(f"node {n.node_id}: replay insertion failed: {exc}")
            return problems
        rebuilt.backpropagate(n.node_id, config.beta)
    for orig, again in zip(tree.nodes, rebuilt.nodes):
        if orig.quality_Q != again.quality_Q:
            problems.append(f"node {orig.node_id}: quality_Q {orig.quality_Q!r} != replayed {again.quality_Q!r}")
        if orig.visits_N != again.visits_N:
            problems.append(f"node {orig.node_id}: visits_N {orig.visits_N} != replayed {again.visits_N}")
    return problems
