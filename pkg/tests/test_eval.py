from __future__ import annotations

import io
import math
import random
import tokenize
from fractions import Fraction

import pytest
import torch

from bugdetect.eval import (
    CandidateMismatchError,
    EvalRecord,
    evaluate_records,
    generate_random_bugs,
    pr_auc,
    pr_curve,
    report,
    scan_files,
)
from bugdetect.eval.metrics import KIND_ROWS, Counts, kind_row, rates
from bugdetect.eval.scan import repair_diff
from bugdetect.eval.synthetic import random_function_source
from bugdetect.graph import NOBUG
from bugdetect.graph.samples import corpus_functions
from bugdetect.lang import parse, parse_function, to_source
from bugdetect.model import BugModel, ModelConfig, Vocabulary
from bugdetect.rewrite import apply, enumerate_rewrites
from bugdetect.selftest import random_counts

LOC_A, LOC_B = (3, 1), (3, 2)
TRUTH = (LOC_A, "VarMisuse", "x")


def rec(truth=TRUTH, pred=None, rewrite=None, repair=None, conf=0.5, warn_rewrite=None, n_locs=3):
    """A record; ``pred`` is the predicted location (None for NoBug)."""
    if rewrite is None and pred is not None:
        rewrite = truth if truth is not None and pred == truth[0] else (pred, "VarMisuse", "z")
    return EvalRecord(
        truth=truth, predicted_loc=pred, predicted_rewrite=rewrite, repair_at_truth=repair,
        warning_loc=pred, warning_rewrite=warn_rewrite if warn_rewrite is not None else rewrite,
        confidence=conf, bug_kind="NoBug" if truth is None else kind_row(truth[1], truth[2]),
        num_locations=n_locs,
    )


def test_fdr_example():
    records = [rec(pred=LOC_A) for _ in range(8)] + [rec(truth=None, pred=LOC_B) for _ in range(2)]
    r = report(records)
    assert (r.DTW, r.DFW) == (8, 2)
    assert math.isclose(r.FDR, 0.2) and math.isclose(r.DPr, 0.8)


def test_repair_accuracy_example():
    records = [rec(repair=TRUTH if i < 5 else (LOC_A, "VarMisuse", "w")) for i in range(10)]
    assert report(records).RAcc == 0.5


def test_true_and_false_warnings():
    records = [
        rec(pred=LOC_A),  # right place, right repair
        rec(pred=LOC_A, rewrite=(LOC_A, "VarMisuse", "w")),  # right place, wrong repair
        rec(pred=LOC_B),  # wrong place
        rec(pred=None),  # missed
        rec(truth=None, pred=None),  # clean, quiet
    ]
    r = report(records)
    assert (r.DTW, r.DFW, r.TW, r.FW) == (2, 1, 1, 2)
    assert math.isclose(r.Pr, 1 / 3) and math.isclose(r.Re, 1 / 4)
    assert math.isclose(r.loc, 3 / 5) and math.isclose(r.joint, 2 / 5)


def test_perfect_predictor_pr_auc():
    records = [rec(pred=LOC_A, conf=0.9) for _ in range(5)] + [rec(truth=None, pred=None, conf=0.1) for _ in range(5)]
    assert report(records).pr_auc == 1.0


def test_pr_curve_shape():
    rng = random.Random(0)
    records = []
    for _ in range(200):
        buggy = rng.random() < 0.5
        hit = rng.random() < 0.6
        truth = TRUTH if buggy else None
        records.append(rec(truth=truth, pred=LOC_A if hit else LOC_B, conf=round(rng.random(), 2)))
    pts = pr_curve(records)
    assert pts[0] == (float("inf"), 0.0, 1.0)
    thresholds = [t for t, _, _ in pts]
    assert thresholds == sorted(thresholds, reverse=True) and len(set(thresholds)) == len(thresholds)
    # raising the threshold never increases recall
    recalls = [r for _, r, _ in pts]
    assert recalls == sorted(recalls)
    assert all(0 <= p <= 1 for _, _, p in pts)
    assert 0 <= pr_auc(pts) <= 1


def test_metric_identities_on_random_counts():
    rng = random.Random(1)
    for _ in range(1000):
        c = random_counts(rng)
        r = rates(c)
        if c.dfw + c.dtw:
            assert r["FDR"] == Fraction(c.dfw, c.dfw + c.dtw)
        assert r["DPr"] == 1 - r["FDR"]
        if c.tw + c.fw:
            assert r["Pr"] == Fraction(c.tw, c.tw + c.fw)
        assert all(0 <= v <= 1 for v in r.values())


def test_empty_conventions():
    r = rates(Counts())
    assert r["FDR"] == 0 and r["Pr"] == 1 and r["Re"] == 0


def test_kind_rows():
    assert kind_row("UnaryNegToggle", "not") == "Wrong Boolean Op"
    assert kind_row("UnaryNegToggle", "-") == "Wrong Binary Op"
    r = report([rec(), rec(truth=None)])
    assert set(r.per_kind) == set(KIND_ROWS)
    assert r.per_kind["Variable Misuse"]["n"] == 1 and r.per_kind["NoBug"]["repair"] is None
    assert "Variable Misuse" in r.table()
    assert r.to_json()["pr_points"][0][0] is None


def _units(n, seed):
    rng = random.Random(seed)
    return [parse(random_function_source(rng)) for _ in range(n)]


def test_generate_random_bugs():
    units = _units(30, 2)
    fns = corpus_functions(units)
    graphs = generate_random_bugs(units, 9, seed=0)
    expect = sum(10 if cf.candidates else 1 for cf in fns)
    assert len(graphs) == expect
    assert generate_random_bugs(units, 9, seed=0) == graphs
    assert generate_random_bugs(units, 9, seed=1) != graphs
    plain = generate_random_bugs(units, 0, seed=0)
    assert len(plain) == len(fns) and all(g.target == NOBUG for g in plain)
    for g in graphs:
        g.target_index()


def _untrained(units, hidden=8):
    graphs = generate_random_bugs(units, 3, seed=0)
    vocab = Vocabulary.build(n.label for g in graphs for n in g.nodes)
    torch.manual_seed(0)
    return graphs, vocab, BugModel(ModelConfig(vocab_size=len(vocab), hidden=hidden))


def test_joint_implies_location():
    graphs, vocab, model = _untrained(_units(40, 3))
    with torch.no_grad():
        model.nobug.mul_(0)  # bring NoBug into contention
    records = evaluate_records(model, vocab, graphs)
    assert len(records) == len(graphs)
    for r in records:
        assert not r.joint_correct or r.loc_correct
        assert 0 <= r.confidence <= 1
    rep = report(records)
    assert rep.joint <= rep.loc


def test_mismatched_vocabulary_rejected():
    graphs, vocab, _ = _untrained(_units(5, 4))
    other = BugModel(ModelConfig(vocab_size=len(vocab) + 3, hidden=8))
    with pytest.raises(CandidateMismatchError):
        evaluate_records(other, vocab, graphs)


def test_repair_diff_var_misuse_single_token():
    fn = parse_function("def f(a, b):\n  total = a\n  return total + b\n")
    pr = next(c for c in enumerate_rewrites(fn) if c.kind.value == "VarMisuse")
    diff = repair_diff(fn, pr, "f").splitlines()
    minus = [l[1:] for l in diff if l.startswith("-") and not l.startswith("---")]
    plus = [l[1:] for l in diff if l.startswith("+") and not l.startswith("+++")]
    assert len(minus) == len(plus) == 1

    def toks(s):
        return [t.string for t in tokenize.generate_tokens(io.StringIO(s.strip()).readline) if t.string.strip()]

    a, b = toks(minus[0]), toks(plus[0])
    assert len(a) == len(b) and sum(x != y for x, y in zip(a, b)) == 1


def test_scan_threshold_and_positions(tmp_path):
    src = "class Box:\n  def get(self, a, b):\n    if a < b:\n      return a\n    return b\n"
    path = tmp_path / "m.py"
    path.write_text(src)
    bad = tmp_path / "bad.py"
    bad.write_text("def f(:\n")
    units = [parse("def get(self, a, b):\n  if a < b:\n    return a\n  return b\n")]
    _, vocab, model = _untrained(units)
    warnings, skipped = scan_files(model, vocab, [str(path), str(bad)], top_n=3, threshold=0.0)
    assert len(warnings) == 3
    assert [s.file for s in skipped] == [str(bad)]
    lines = src.splitlines()
    for w in warnings:
        assert w.function == "get" and w.file == str(path)
        assert 1 <= w.line <= len(lines) and lines[w.line - 1][w.col:].strip()
    assert [w.probability for w in warnings] == sorted((w.probability for w in warnings), reverse=True)
    none, _ = scan_files(model, vocab, [str(path)], threshold=1.0)
    assert none == []


def _planted(corpus):
    """First held-out function with a '<' comparison, with '<' turned into '<='."""
    for cf in corpus.holdout:
        for c in cf.candidates:
            if c.kind.value == "WrongComparisonOp" and c.rule.original == "<" and c.payload == "<=":
                return cf, c
    raise AssertionError("no held-out function compares with '<'")


@pytest.mark.slow
def test_scan_finds_planted_bug(desk_run, tmp_path):
    corpus, result, _ = desk_run
    cf, pr = _planted(corpus)
    text = to_source(cf.unit.replace_function(cf.index, apply(cf.fn, pr)))
    path = tmp_path / "planted.py"
    path.write_text(text)
    warnings, skipped = scan_files(result.detector, result.vocab, [str(path)], top_n=3)
    assert skipped == []
    mine = [w for w in warnings if w.function == cf.name]
    assert 0 < len(mine) <= 3
    lines = text.splitlines()

    def repairs_planted(w):
        added = [l for l in w.repair_diff.splitlines() if l.startswith("+") and not l.startswith("+++")]
        return (w.kind == "WrongComparisonOp" and lines[w.line - 1][w.col:w.col + 2] == "<="
                and len(added) == 1 and added[0][1:] == lines[w.line - 1][:w.col] + "<" + lines[w.line - 1][w.col + 2:])

    assert any(repairs_planted(w) for w in mine), [(w.line, w.col, w.kind, w.probability) for w in mine]
