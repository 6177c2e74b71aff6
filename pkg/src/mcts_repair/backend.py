"""Model backends used for patch generation and judging.

A backend answers one chat completion at a time. Every call carries a
:class:`CallTag` saying what the call is for; the live backend ignores it, the
scripted backend uses it to look up a canned answer.

Scripted fixture format (JSON)::

    {
      "generations": {
        "<bug_id>/<parent_node_id>/<expansion_index>": {
          "cot": "...", "draft": "...", "reflection": "...", "final": "..."
        },
        "<bug_id>/*": {...},          # optional fallback for this bug
        "*": {...}                    # optional global fallback
      },
      "by_parent": {"<parent patch text>": [{...}, {...}, {...}]},
      "judge": {"<candidate text>": [score, score, ...]},
      "default_judge": 0,
      "usage": {"prompt_tokens": 1000, "completion_tokens": 250}
    }

Lookup order for a generation call: the exact id key, then ``by_parent``
indexed by expansion, then the wildcards. ``by_parent`` keys on patch text so
a fixture can describe a search landscape independent of node numbering.
``draft`` or ``final`` set to null means the corresponding answer carries no
fenced code block. A judge score may itself be a list, indexed by retry
attempt, e.g. ``["no idea", 70]``. Without ``usage`` token counts are
estimated from text length.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

from .llm import ChatRequest, LLMClient, Usage, UsageLedger, estimate_tokens
from .model import SearchConfig


@dataclass(frozen=True)
class CallTag:
    kind: str  # "generate" | "reflect" | "judge"
    bug_id: str
    parent_id: int = 0
    expansion_index: int = 0
    parent_text: str = ""
    candidate_text: str = ""
    sample_index: int = 0
    attempt: int = 0


class Backend(Protocol):
    def complete(self, messages: list[dict[str, str]], tag: CallTag) -> tuple[str, Usage]: ...


class LiveBackend:
    """Routes every call to an OpenAI-compatible endpoint."""

    def __init__(self, client: LLMClient, config: SearchConfig):
        self.client = client
        self.config = config

    @property
    def ledger(self) -> UsageLedger:
        return self.client.ledger

    def complete(self, messages, tag):
        request = ChatRequest(
            model=self.client.model,
            messages=messages,
            temperature=self.config.temperature,
            max_tokens=self.config.max_tokens,
            seed=self.config.rng_seed,
        )
        return self.client.chat(request)


def fenced(text: str, lang: str = "") -> str:
    return f"```{lang}\n{text}\n```"


@dataclass
class ScriptedBackend:
    generations: dict[str, dict[str, Any]] = field(default_factory=dict)
    by_parent: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    judge: dict[str, Any] = field(default_factory=dict)
    default_judge: Any = 0
    usage: dict[str, int] | None = None
    ledger: UsageLedger = field(default_factory=UsageLedger)
    calls: list[CallTag] = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ScriptedBackend:
        return cls(
            generations=dict(d.get("generations", {})),
            by_parent=dict(d.get("by_parent", {})),
            judge=dict(d.get("judge", {})),
            default_judge=d.get("default_judge", 0),
            usage=d.get("usage"),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedBackend:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def generation_entry(self, tag: CallTag) -> dict[str, Any] | None:
        exact = f"{tag.bug_id}/{tag.parent_id}/{tag.expansion_index}"
        if exact in self.generations:
            return self.generations[exact]
        options = self.by_parent.get(tag.parent_text)
        if options is not None and tag.expansion_index < len(options):
            return options[tag.expansion_index]
        for key in (f"{tag.bug_id}/*", "*"):
            if key in self.generations:
                return self.generations[key]
        return None

    def judge_score(self, tag: CallTag) -> Any:
        gen_key = f"{tag.bug_id}/{tag.parent_id}/{tag.expansion_index}"
        if tag.candidate_text in self.judge:
            scores = self.judge[tag.candidate_text]
        elif gen_key in self.judge:
            scores = self.judge[gen_key]
        else:
            scores = self.default_judge
        if isinstance(scores, list):
            scores = scores[tag.sample_index % len(scores)] if scores else self.default_judge
        if isinstance(scores, list):
            scores = scores[min(tag.attempt, len(scores) - 1)]
        return scores

    def respond(self, tag: CallTag) -> str:
        if tag.kind == "judge":
            return f"Assessment of the candidate patch.\n{self.judge_score(tag)}"
        entry = self.generation_entry(tag)
        if entry is None:
            return "No scripted answer for this request."
        if tag.kind == "generate":
            if "raw" in entry:
                return entry["raw"]
            cot = entry.get("cot", "")
            draft = entry.get("draft")
            return cot if draft is None else f"{cot}\n\n{fenced(draft)}"
        if tag.kind == "reflect":
            if "raw_reflection" in entry:
                return entry["raw_reflection"]
            reflection = entry.get("reflection", "")
            final = entry.get("final")
            return reflection if final is None else f"{reflection}\n\n{fenced(final)}"
        raise ValueError(f"unknown call kind {tag.kind!r}")

    def complete(self, messages, tag):
        text = self.respond(tag)
        if self.usage is not None:
            p = int(self.usage.get("prompt_tokens", 0))
            c = int(self.usage.get("completion_tokens", 0))
            usage = Usage(p, c, p + c)
        else:
            p = estimate_tokens("\n".join(m["content"] for m in messages))
            c = estimate_tokens(text)
            usage = Usage(p, c, p + c, estimated=True)
        with self._lock:
            self.calls.append(tag)
        self.ledger.add(usage)
        return text, usage


class MeteredBackend:
    """Counts the usage of one run while delegating to a possibly shared backend."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.ledger = UsageLedger()

    def complete(self, messages, tag):
        text, usage = self.inner.complete(messages, tag)
        self.ledger.add(usage)
        return text, usage
