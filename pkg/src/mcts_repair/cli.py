"""Command-line front end: ``mcts-repair repair | report | tree``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any

from .backend import Backend, LiveBackend, ScriptedBackend
from .engine import repair, summary, verify_snapshot
from .errors import RepairError
from .llm import LLMClient
from .model import BugSpec, RepairReport, SearchConfig, load_bugspec
from .reporting import aggregate, format_table
from .tree import PatchTree

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_BACKEND = 3

class InputError(Exception):
    """Bad command-line input; reported with exit status 2."""


def _load_json(path: str | Path, what: str) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON in {what}: {exc.msg}") from exc


def load_config(path: str | None) -> tuple[SearchConfig, dict[str, Any]]:
    """Search settings and the optional ``llm`` section of a config file."""
    if path is None:
        return SearchConfig(), {}
    raw = _load_json(path, "config")
    if not isinstance(raw, dict):
        raise InputError(f"{path}: config must be a JSON object")
    raw = dict(raw)
    llm = raw.pop("llm", {})
    try:
        return SearchConfig.from_dict(raw), llm
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def make_backend(choice: str, config: SearchConfig, llm: dict[str, Any]) -> Backend:
    if choice == "live":
        try:
            client = LLMClient.from_config(llm)
        except ValueError as exc:
            raise InputError(f"live backend: {exc}") from exc
        return LiveBackend(client, config)
    if choice.startswith("scripted:"):
        fixture = _load_json(choice.split(":", 1)[1], "fixture")
        if not isinstance(fixture, dict):
            raise InputError(f"{choice}: fixture must be a JSON object")
        return ScriptedBackend.from_dict(fixture)
    raise InputError(f"unknown backend {choice!r}; use 'live' or 'scripted:<fixture.json>'")


def write_outputs(report: RepairReport, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / f"{report.bug_id}.report.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tree_path = out_dir / f"{report.bug_id}.tree.json"
    tree_path.write_text(json.dumps(report.tree_snapshot, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out_dir / f"{report.bug_id}.summary.txt").write_text(summary(report), encoding="utf-8")
    return report_path


def cmd_repair(args: argparse.Namespace) -> int:
    config, llm = load_config(args.config)
    if args.budget is not None:
        try:
            config = replace(config, patch_budget=args.budget)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    bugs: list[BugSpec] = []
    for path in args.bug:
        try:
            bugs.append(load_bugspec(path))
        except RepairError as exc:
            raise InputError(f"{path}: {exc}") from exc
    backend = make_backend(args.backend, config, llm)
    out_dir = Path(args.out)

    def run(bug: BugSpec) -> RepairReport:
        return repair(bug, backend, config, policy=args.policy)

    with ThreadPoolExecutor(max_workers=max(1, args.parallel)) as pool:
        reports = list(pool.map(run, bugs))
    status = EXIT_OK
    for report in reports:
        path = write_outputs(report, out_dir)
        sys.stdout.write(summary(report))
        print(f"  report: {path}")
        if report.aborted:
            print(f"error: bug {report.bug_id}: backend failure: {report.error}", file=sys.stderr)
            status = EXIT_BACKEND
    return status


def _read_report(path: str) -> RepairReport:
    raw = _load_json(path, "report")
    try:
        return RepairReport.from_dict(raw)
    except (TypeError, KeyError, AttributeError) as exc:
        raise InputError(f"{path}: malformed report: {exc}") from exc


def cmd_report(args: argparse.Namespace) -> int:
    reports = [_read_report(p) for p in args.reports]
    totals = aggregate(reports, args.price)
    sys.stdout.write(format_table(reports, totals, args.price))
    if args.json:
        Path(args.json).write_text(json.dumps(totals.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        print(json.dumps(totals.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_tree(args: argparse.Namespace) -> int:
    raw = _load_json(args.snapshot, "snapshot")
    if isinstance(raw, dict) and "tree_snapshot" in raw:
        raw = raw["tree_snapshot"]
    if not isinstance(raw, dict) or "tree" not in raw:
        raise InputError(f"{args.snapshot}: not a tree snapshot")
    if args.verify:
        problems = verify_snapshot(raw)
        for p in problems:
            print(p)
        if problems:
            print(f"{len(problems)} violation(s)", file=sys.stderr)
            return EXIT_VIOLATION
        print("ok: all tree invariants hold and replay matches")
        return EXIT_OK
    try:
        tree = PatchTree.from_dict(raw["tree"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.snapshot}: malformed tree: {exc!r}") from exc
    sys.stdout.write(tree.to_dot())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcts-repair", description="Tree-search program repair.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("repair", help="repair one or more bugs")
    p.add_argument("--bug", action="append", required=True, help="bug spec JSON; repeatable")
    p.add_argument("--config", help="JSON config: search settings plus an optional 'llm' section")
    p.add_argument("--backend", default="live", help="'live' or 'scripted:<fixture.json>'")
    p.add_argument("--budget", type=int, help="override patch_budget")
    p.add_argument("--out", default="mcts-repair-out", help="output directory")
    p.add_argument("--parallel", type=int, default=1, help="bugs repaired concurrently")
    p.add_argument("--policy", choices=["mcts", "chain"], default="mcts", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("report", help="aggregate repair reports")
    p.add_argument("reports", nargs="*", help="report JSON files")
    p.add_argument("--price", type=float, help="price per 1k tokens, overrides the recorded cost")
    p.add_argument("--json", help="write the aggregate JSON here instead of stdout")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("tree", help="inspect a tree snapshot or report")
    p.add_argument("snapshot")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--dot", action="store_true", help="emit Graphviz dot")
    mode.add_argument("--verify", action="store_true", help="check invariants and replay")
    p.set_defaults(func=cmd_tree)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, RepairError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
