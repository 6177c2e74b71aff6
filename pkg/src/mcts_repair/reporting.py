"""Aggregate statistics over a batch of repair reports."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

from .llm import cost
from .model import RepairReport


@dataclass
class BatchSummary:
    bugs: int
    plausible: int
    exact_match: int
    patches_per_bug: float
    tokens_per_bug: float
    money_per_bug: float
    aborted: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def aggregate(reports: list[RepairReport], price_per_1k: float | None = None) -> BatchSummary:
    """PF and EM counts plus per-bug means; ``price_per_1k`` reprices every report."""
    n = len(reports)
    if n == 0:
        return BatchSummary(0, 0, 0, 0.0, 0.0, 0.0, 0)
    costs = [r.estimated_cost if price_per_1k is None else cost(r.tokens_total, price_per_1k) for r in reports]
    return BatchSummary(
        bugs=n,
        plausible=sum(1 for r in reports if r.plausible_patches),
        exact_match=sum(1 for r in reports if r.exact_match),
        patches_per_bug=sum(r.total_patches_generated for r in reports) / n,
        tokens_per_bug=sum(r.tokens_total for r in reports) / n,
        money_per_bug=sum(costs) / n,
        aborted=sum(1 for r in reports if r.aborted),
    )


def format_table(reports: list[RepairReport], summary: BatchSummary, price_per_1k: float | None = None) -> str:
    header = f"{'bug':<28} {'PF':>3} {'EM':>3} {'patches':>8} {'tokens':>10} {'cost':>10}"
    lines = [header, "-" * len(header)]
    for r in reports:
        c = r.estimated_cost if price_per_1k is None else cost(r.tokens_total, price_per_1k)
        lines.append(
            f"{r.bug_id:<28} {'y' if r.plausible_patches else '-':>3} {'y' if r.exact_match else '-':>3} "
            f"{r.total_patches_generated:>8} {r.tokens_total:>10} {c:>10.4f}"
        )
    lines.append("-" * len(header))
    lines.append(
        f"{summary.bugs} bug(s): PF {summary.plausible}, EM {summary.exact_match}, "
        f"Patch/Bug {summary.patches_per_bug:.2f}, Token/Bug {summary.tokens_per_bug:.1f}, "
        f"Money/Bug {summary.money_per_bug:.4f}"
    )
    return "\n".join(lines) + "\n"
