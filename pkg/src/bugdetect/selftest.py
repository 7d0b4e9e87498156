"""Built-in consistency checks: rewrite enumeration, metric formulas, gradients."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import torch

from .eval.metrics import Counts, rates
from .graph.samples import CorpusFunction
from .lang.parser import parse, parse_function
from .model.batch import collate, encode_graph
from .model.gradcheck import detector_objective, directional_check, selector_objective
from .model.network import BugModel, ModelConfig
from .model.vocab import Vocabulary
from .rewrite.engine import apply, enumerate_rewrites, invert

REFERENCE_SNIPPET = '''def foo(a, b, c=0):
  if a in b:
    c += bar(b, c)
  c_is_neg = c < 0
  if c_is_neg or a is int:
    return True, c
  return c > 1, c
'''

# location -> payloads of every candidate rewrite there
REFERENCE_CANDIDATES: dict[tuple[int, ...], set[str]] = {
    (5, 1, 1, 1): {"b", "c"},
    (5, 1, 1, 2): {"not in"},
    (5, 1, 1, 3): {"a", "c"},
    (5, 1, 2, 1, 1): {"a", "b"},
    (5, 1, 2, 1, 2): {"%=", "*=", "-=", "//=", "/=", "="},
    (5, 1, 2, 1, 3): {"1,2"},
    (5, 1, 2, 1, 3, 2): {"a", "c"},
    (5, 1, 2, 1, 3, 3): {"a", "b"},
    (5, 2, 2): {"%=", "*=", "+=", "-=", "//=", "/="},
    (5, 2, 3, 1): {"a", "b"},
    (5, 2, 3, 2): {"!=", "<=", "==", ">", ">="},
    (5, 2, 3, 3): {"-1", "-2", "1", "2"},
    (5, 3, 1, 1): {"a", "b", "c", "not"},
    (5, 3, 1, 2): {"and"},
    (5, 3, 1, 3, 1): {"b", "c", "c_is_neg"},
    (5, 3, 1, 3, 2): {"is not"},
    (5, 3, 2, 1, 1): {"False"},
    (5, 3, 2, 1, 2): {"a", "b", "c_is_neg"},
    (5, 4, 1, 1): {"a", "b", "c_is_neg"},
    (5, 4, 1, 2): {"!=", "<", "<=", "==", ">="},
    (5, 4, 1, 3): {"-1", "-2", "0", "2"},
    (5, 4, 2): {"a", "b", "c_is_neg"},
}
REFERENCE_COUNT = 63


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def check_reference_enumeration() -> CheckResult:
    fn = parse_function(REFERENCE_SNIPPET)
    cands = enumerate_rewrites(fn)
    got: dict[tuple[int, ...], set[str]] = {}
    for c in cands:
        got.setdefault(c.location, set()).add(c.payload)
    problems = []
    if len(cands) != REFERENCE_COUNT:
        problems.append(f"{len(cands)} candidates, expected {REFERENCE_COUNT}")
    if got != REFERENCE_CANDIDATES:
        problems.append("per-location payload sets differ")
    for c in cands:
        after = apply(fn, c)
        if apply(after, invert(c, after)) != fn:
            problems.append(f"{c.describe()} does not invert")
            break
    return CheckResult("reference enumeration", not problems, "; ".join(problems) or f"{len(cands)} candidates")


def random_counts(rng: random.Random) -> Counts:
    """A consistent confusion-count vector."""
    buggy = rng.randrange(0, 50)
    clean = rng.randrange(0, 50)
    dtw = rng.randint(0, buggy)
    tw = rng.randint(0, dtw)
    # false detections come from clean samples or misplaced buggy ones
    dfw = rng.randint(0, clean + buggy - dtw)
    # wrong repairs at the right location add to FW on top of DFW
    fw = dfw + (dtw - tw)
    return Counts(samples=buggy + clean, buggy=buggy, dfw=dfw, dtw=dtw, tw=tw, fw=fw,
                  correct_repairs=rng.randint(tw, buggy), joint_correct=0, loc_correct=0)


def check_metric_identities(n: int = 1000, seed: int = 0) -> CheckResult:
    rng = random.Random(seed)
    for i in range(n):
        c = random_counts(rng)
        r = rates(c)
        fdr = Fraction(c.dfw, c.dfw + c.dtw) if c.dfw + c.dtw else Fraction(0)
        expect = {
            "FDR": fdr,
            "DPr": 1 - fdr,
            "DRe": Fraction(c.dtw, c.buggy) if c.buggy else Fraction(0),
            "RAcc": Fraction(c.correct_repairs, c.buggy) if c.buggy else Fraction(0),
            "Pr": Fraction(c.tw, c.tw + c.fw) if c.tw + c.fw else Fraction(1),
            "Re": Fraction(c.tw, c.buggy) if c.buggy else Fraction(0),
        }
        for key, val in expect.items():
            if r[key] != val or not 0 <= r[key] <= 1:
                return CheckResult("metric identities", False, f"vector {i}: {key} = {r[key]}, expected {val}")
    return CheckResult("metric identities", True, f"{n} count vectors")


def check_gradients(tol: float = 1e-4, seed: int = 0) -> CheckResult:
    torch.manual_seed(seed)
    unit = parse(
        "def helper(x, y):\n  return x - y\n\n"
        "def caller(a, b):\n  total = 0\n  while a < b:\n    total += helper(a, b) * 2\n    a += 1\n"
        "  if total > 1 and not a:\n    return total\n  return -1\n"
    )
    cf = CorpusFunction(unit, 1)
    by_kind = {}
    for c in cf.candidates:
        by_kind.setdefault(c.kind, c)
    graphs = [cf.clean_graph] + [cf.variant(c) for c in by_kind.values()]
    vocab = Vocabulary.build([n.label for g in graphs for n in g.nodes])
    model = BugModel(ModelConfig(vocab_size=len(vocab), hidden=8)).double().eval()
    b = collate([encode_graph(g, vocab) for g in graphs])
    worst = 0.0
    for objective in (detector_objective(b), selector_objective(b, torch.Generator().manual_seed(seed))):
        for r in directional_check(model, objective):
            worst = max(worst, r.rel_error)
    return CheckResult("gradients", worst < tol, f"worst relative error {worst:.2e} over {len(graphs)} graphs")


def run_all() -> list[CheckResult]:
    return [check_reference_enumeration(), check_metric_identities(), check_gradients()]
