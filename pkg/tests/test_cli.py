from __future__ import annotations

import json
import subprocess
import sys

import pytest

from mcts_repair.backend import ScriptedBackend
from mcts_repair.bench import bundled_corpus_dir
from mcts_repair.cli import main
from mcts_repair.engine import repair
from mcts_repair.model import RepairReport, SearchConfig, load_bugspec
from mcts_repair.reporting import aggregate

from conftest import masked

GCD = bundled_corpus_dir() / "quix-gcd"


def run_cli(*argv):
    return main([str(a) for a in argv])


def gcd_args(out, *extra):
    return ["repair", "--bug", GCD / "bugspec.json", "--backend", f"scripted:{GCD / 'fixture.json'}", "--out", out, *extra]


def test_repair_writes_report_summary_and_tree(tmp_path, capsys):
    assert run_cli(*gcd_args(tmp_path, "--budget", 16)) == 0
    report = json.loads((tmp_path / "quix-gcd.report.json").read_text())
    assert report["plausible_patches"]
    assert (tmp_path / "quix-gcd.tree.json").is_file()
    assert "quix-gcd" in (tmp_path / "quix-gcd.summary.txt").read_text()
    assert "plausible patch" in capsys.readouterr().out


def test_cli_matches_library(tmp_path):
    """Golden parity: the CLI report equals a direct library call."""
    assert run_cli(*gcd_args(tmp_path, "--budget", 16)) == 0
    from_cli = json.loads((tmp_path / "quix-gcd.report.json").read_text())
    bug = load_bugspec(GCD / "bugspec.json")
    direct = repair(bug, ScriptedBackend.from_file(GCD / "fixture.json"), SearchConfig(patch_budget=16))
    assert masked(from_cli) == masked(json.loads(json.dumps(direct.to_dict())))


def test_missing_config_exit_2(tmp_path, capsys):
    assert run_cli(*gcd_args(tmp_path, "--config", tmp_path / "nope.json")) == 2
    assert "nope.json" in capsys.readouterr().err


@pytest.mark.parametrize(
    "content",
    ["{not json", json.dumps({"beta": 2.0}), json.dumps({"alpha": 0.8}), "[]"],
)
def test_malformed_config_exit_2(tmp_path, content):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    assert run_cli(*gcd_args(tmp_path, "--config", cfg)) == 2


def test_config_file_applies(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"patch_budget": 1, "llm": {"base_url": "http://x", "model": "m"}}))
    assert run_cli(*gcd_args(tmp_path, "--config", cfg)) == 0
    report = json.loads((tmp_path / "quix-gcd.report.json").read_text())
    assert report["total_patches_generated"] == 1


def test_bad_bugspec_and_backend_exit_2(tmp_path):
    bad = tmp_path / "bug.json"
    bad.write_text("{}")
    assert run_cli("repair", "--bug", bad, "--backend", f"scripted:{GCD / 'fixture.json'}", "--out", tmp_path) == 2
    assert run_cli(*gcd_args(tmp_path)[:3], "--backend", "carrier-pigeon", "--out", tmp_path) == 2
    assert run_cli(*gcd_args(tmp_path)[:3], "--backend", "live", "--out", tmp_path) == 2


def test_budget_zero(tmp_path):
    assert run_cli(*gcd_args(tmp_path, "--budget", 0)) == 0
    report = json.loads((tmp_path / "quix-gcd.report.json").read_text())
    assert report["plausible_patches"] == [] and report["iterations"] == 0


def test_unfixed_bug_still_exit_0(tmp_path):
    factors = bundled_corpus_dir() / "quix-get-factors"
    code = run_cli(
        "repair", "--bug", factors / "bugspec.json", "--backend", f"scripted:{factors / 'fixture.json'}",
        "--budget", 4, "--out", tmp_path,
    )
    assert code == 0
    assert json.loads((tmp_path / "quix-get-factors.report.json").read_text())["plausible_patches"] == []


def test_backend_failure_exit_3(tmp_path, monkeypatch):
    from mcts_repair import cli
    from mcts_repair.llm import LLMClient, StubTransport

    def fake_from_config(cfg, **kw):
        return LLMClient("http://stub", "m", api_key="k", transport=StubTransport([(503, None)]), sleep=lambda s: None)

    monkeypatch.setattr(cli.LLMClient, "from_config", staticmethod(fake_from_config))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"llm": {"base_url": "http://stub", "model": "m"}}))
    code = run_cli("repair", "--bug", GCD / "bugspec.json", "--config", cfg, "--backend", "live", "--out", tmp_path)
    assert code == 3
    assert json.loads((tmp_path / "quix-gcd.report.json").read_text())["aborted"] is True


def test_parallel_many_bugs(tmp_path):
    names = ["quix-gcd", "quix-paren", "quix-to-base"]
    args = ["repair", "--budget", 16, "--parallel", 3, "--out", tmp_path, "--backend"]
    # one scripted fixture serves all bugs: merge them
    merged = {"generations": {}, "judge": {}, "by_parent": {}}
    for n in names:
        fx = json.loads((bundled_corpus_dir() / n / "fixture.json").read_text())
        for k in merged:
            merged[k].update(fx.get(k, {}))
    fixture = tmp_path / "merged.json"
    fixture.write_text(json.dumps(merged))
    args.append(f"scripted:{fixture}")
    for n in names:
        args += ["--bug", bundled_corpus_dir() / n / "bugspec.json"]
    assert run_cli(*args) == 0
    for n in names:
        assert json.loads((tmp_path / f"{n}.report.json").read_text())["plausible_patches"]


def write_report(path, tokens, em=False):
    r = RepairReport(bug_id=path.stem, tokens_total=tokens, total_patches_generated=16)
    if em:
        from mcts_repair.model import PlausiblePatch

        r.plausible_patches = [PlausiblePatch(1, "x", True)]
    path.write_text(json.dumps(r.to_dict()))
    return path


def test_report_money_per_bug(tmp_path, capsys):
    a = write_report(tmp_path / "a.json", 40_000)
    b = write_report(tmp_path / "b.json", 40_000, em=True)
    out = tmp_path / "agg.json"
    assert run_cli("report", a, b, "--price", 0.0015, "--json", out) == 0
    agg = json.loads(out.read_text())
    assert agg["money_per_bug"] == 0.06
    assert agg["exact_match"] == 1 and agg["plausible"] == 1 and agg["bugs"] == 2
    assert agg["tokens_per_bug"] == 40_000 and agg["patches_per_bug"] == 16
    assert "Money/Bug 0.0600" in capsys.readouterr().out
    reports = [RepairReport.from_dict(json.loads(p.read_text())) for p in (a, b)]
    assert aggregate(reports, 0.0015).to_dict() == agg


def test_report_zero_reports(capsys):
    assert run_cli("report") == 0
    out = capsys.readouterr().out
    assert "0 bug(s)" in out


def test_report_malformed_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bug_id": "x", "surprise": 1}))
    assert run_cli("report", bad) == 2
    bad.write_text("nope")
    assert run_cli("report", bad) == 2


def test_tree_verify_and_dot(tmp_path, capsys):
    assert run_cli(*gcd_args(tmp_path, "--budget", 4)) == 0
    tree_file = tmp_path / "quix-gcd.tree.json"
    capsys.readouterr()
    assert run_cli("tree", tree_file, "--verify") == 0
    assert run_cli("tree", tmp_path / "quix-gcd.report.json", "--verify") == 0
    capsys.readouterr()
    assert run_cli("tree", tree_file, "--dot") == 0
    dot = capsys.readouterr().out
    nodes = json.loads(tree_file.read_text())["tree"]["nodes"]
    assert dot.startswith("digraph") and dot.rstrip().endswith("}")
    assert sum(1 for line in dot.splitlines() if "[label=" in line) == len(nodes)


def test_tree_verify_flags_corruption(tmp_path, capsys):
    assert run_cli(*gcd_args(tmp_path, "--budget", 4)) == 0
    tree_file = tmp_path / "quix-gcd.tree.json"
    snap = json.loads(tree_file.read_text())
    snap["tree"]["nodes"][1]["visits_N"] = 5
    tree_file.write_text(json.dumps(snap))
    capsys.readouterr()
    assert run_cli("tree", tree_file, "--verify") == 1
    assert "node 1" in capsys.readouterr().out


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "mcts_repair.cli", "tree", tmp_path / "missing.json", "--dot"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "missing.json" in proc.stderr
