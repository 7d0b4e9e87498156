"""Detection/repair metrics, per-kind breakdown and precision-recall sweeps."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ..graph.extract import NOBUG, CodeGraph
from ..lang.tree import Location
from ..model.ops import GraphPrediction
from ..rewrite.rules import RuleKind

Key = tuple[Location, str, str]

KIND_ROWS = (
    "Argument Swapping",
    "Wrong Assign Op",
    "Wrong Binary Op",
    "Wrong Boolean Op",
    "Wrong Comparison Op",
    "Wrong Literal",
    "Variable Misuse",
    "NoBug",
)


def kind_row(kind: str, payload: str) -> str:
    if kind == RuleKind.ARG_SWAP.value:
        return "Argument Swapping"
    if kind == RuleKind.WRONG_ASSIGN_OP.value:
        return "Wrong Assign Op"
    if kind == RuleKind.WRONG_BINARY_OP.value:
        return "Wrong Binary Op"
    if kind == RuleKind.WRONG_BOOLEAN_OP.value:
        return "Wrong Boolean Op"
    if kind == RuleKind.WRONG_COMPARISON_OP.value:
        return "Wrong Comparison Op"
    if kind == RuleKind.WRONG_LITERAL.value:
        return "Wrong Literal"
    if kind == RuleKind.VAR_MISUSE.value:
        return "Variable Misuse"
    if kind == RuleKind.UNARY_NEG_TOGGLE.value:
        return "Wrong Boolean Op" if payload == "not" else "Wrong Binary Op"
    raise ValueError(f"unknown rule kind {kind!r}")


@dataclass(frozen=True)
class EvalRecord:
    """One evaluated sample. Locations are ``None`` for NoBug."""

    truth: Key | None
    predicted_loc: Location | None
    predicted_rewrite: Key | None
    repair_at_truth: Key | None
    warning_loc: Location | None
    warning_rewrite: Key | None
    confidence: float
    bug_kind: str
    num_locations: int

    @property
    def truth_loc(self) -> Location | None:
        return None if self.truth is None else self.truth[0]

    @property
    def loc_correct(self) -> bool:
        return self.predicted_loc == self.truth_loc

    @property
    def joint_correct(self) -> bool:
        if self.truth is None:
            return self.predicted_loc is None
        return self.predicted_rewrite == self.truth

    @property
    def repair_correct(self) -> bool:
        return self.truth is not None and self.repair_at_truth == self.truth


def make_record(g: CodeGraph, p: GraphPrediction) -> EvalRecord:
    keys = [c.key() for c in g.candidates]
    locs = [c.location for c in g.candidates]
    # per-location probability and best rewrite at each location
    loc_prob: dict[Location, float] = {}
    best: dict[Location, tuple[float, int]] = {}
    for i, loc in enumerate(locs):
        loc_prob[loc] = float(p.loc_prob[i])
        r = float(p.rew_prob[i])
        if loc not in best or r > best[loc][0]:
            best[loc] = (r, i)
    order = list(dict.fromkeys(locs))
    warning_loc = max(order, key=lambda l: loc_prob[l]) if order else None
    if warning_loc is not None and loc_prob[warning_loc] > p.nobug:
        predicted_loc: Location | None = warning_loc
    else:
        predicted_loc = None
    truth = None if g.target == NOBUG else g.target
    return EvalRecord(
        truth=truth,
        predicted_loc=predicted_loc,
        predicted_rewrite=keys[best[predicted_loc][1]] if predicted_loc is not None else None,
        repair_at_truth=keys[best[truth[0]][1]] if truth is not None else None,
        warning_loc=warning_loc,
        warning_rewrite=keys[best[warning_loc][1]] if warning_loc is not None else None,
        confidence=min(1.0, max(0.0, p.confidence)),
        bug_kind="NoBug" if truth is None else kind_row(truth[1], truth[2]),
        num_locations=len(order),
    )


@dataclass
class Counts:
    samples: int = 0
    buggy: int = 0
    dfw: int = 0
    dtw: int = 0
    tw: int = 0
    fw: int = 0
    correct_repairs: int = 0
    joint_correct: int = 0
    loc_correct: int = 0

    def add(self, r: EvalRecord) -> None:
        self.samples += 1
        buggy = r.truth is not None
        self.buggy += buggy
        warn = r.predicted_loc is not None
        dfw = warn and r.predicted_loc != r.truth_loc
        dtw = buggy and r.predicted_loc == r.truth_loc
        rewrite_ok = buggy and r.predicted_rewrite == r.truth
        self.dfw += dfw
        self.dtw += dtw
        self.tw += dtw and rewrite_ok
        self.fw += dfw or (warn and not rewrite_ok)
        self.correct_repairs += r.repair_correct
        self.joint_correct += r.joint_correct
        self.loc_correct += r.loc_correct


def _ratio(num: int, den: int, empty: Fraction) -> Fraction:
    return Fraction(num, den) if den else empty


def rates(c: Counts) -> dict[str, Fraction]:
    """Exact rates from counts. With no warnings raised, FDR is 0 and the
    repair precision 1; with no buggy samples, recalls are 0."""
    fdr = _ratio(c.dfw, c.dfw + c.dtw, Fraction(0))
    return {
        "FDR": fdr,
        "DPr": 1 - fdr,
        "DRe": _ratio(c.dtw, c.buggy, Fraction(0)),
        "RAcc": _ratio(c.correct_repairs, c.buggy, Fraction(0)),
        "Pr": _ratio(c.tw, c.tw + c.fw, Fraction(1)),
        "Re": _ratio(c.tw, c.buggy, Fraction(0)),
        "joint": _ratio(c.joint_correct, c.samples, Fraction(0)),
        "loc": _ratio(c.loc_correct, c.samples, Fraction(0)),
        "repair": _ratio(c.correct_repairs, c.buggy, Fraction(0)),
    }


def pr_curve(records: Sequence[EvalRecord]) -> list[tuple[float, float, float]]:
    """(threshold, recall, precision) points for descending thresholds.

    A record raises a warning when its confidence reaches the threshold; the
    warning is its most probable non-NoBug location and rewrite, and it is true
    when both match a buggy truth. The curve starts at recall 0, precision 1.
    """
    n_buggy = sum(r.truth is not None for r in records)
    points = [(float("inf"), 0.0, 1.0)]
    if not records:
        return points
    ordered = sorted(records, key=lambda r: -r.confidence)
    tp = raised = 0
    i = 0
    while i < len(ordered):
        t = ordered[i].confidence
        while i < len(ordered) and ordered[i].confidence == t:
            r = ordered[i]
            raised += 1
            tp += r.truth is not None and r.warning_rewrite == r.truth
            i += 1
        points.append((t, tp / n_buggy if n_buggy else 0.0, tp / raised))
    return points


def pr_auc(points: Sequence[tuple[float, float, float]]) -> float:
    """Trapezoid-rule area under precision as a function of recall."""
    area = 0.0
    for (_, r0, p0), (_, r1, p1) in zip(points, points[1:]):
        area += (r1 - r0) * (p0 + p1) / 2.0
    return area


@dataclass
class MetricReport:
    counts: Counts
    DFW: int
    DTW: int
    TW: int
    FW: int
    FDR: float
    DPr: float
    DRe: float
    RAcc: float
    Pr: float
    Re: float
    joint: float
    loc: float
    repair: float
    per_kind: dict[str, dict[str, float | int | None]] = field(default_factory=dict)
    pr_points: list[tuple[float, float, float]] = field(default_factory=list)
    pr_auc: float = 0.0
    loc_baseline: float = 0.0
    loc_buggy: float = 0.0

    def to_json(self) -> dict:
        d = asdict(self)
        d["pr_points"] = [[t if np.isfinite(t) else None, r, p] for t, r, p in self.pr_points]
        return d

    def table(self) -> str:
        lines = [
            f"samples {self.counts.samples}  buggy {self.counts.buggy}",
            f"joint {self.joint:.3f}  loc {self.loc:.3f}  repair {self.repair:.3f}  (loc baseline {self.loc_baseline:.3f})",
            f"DFW {self.DFW}  DTW {self.DTW}  FDR {self.FDR:.3f}  DPr {self.DPr:.3f}  DRe {self.DRe:.3f}  RAcc {self.RAcc:.3f}",
            f"TW {self.TW}  FW {self.FW}  Pr {self.Pr:.3f}  Re {self.Re:.3f}  PR-AUC {self.pr_auc:.3f}",
            "",
            f"{'bug kind':<22}{'n':>6}{'loc':>8}{'repair':>8}",
        ]
        for kind in KIND_ROWS:
            row = self.per_kind.get(kind)
            if not row or not row["n"]:
                continue
            rep = "---" if row["repair"] is None else f"{row['repair']:.3f}"
            lines.append(f"{kind:<22}{row['n']:>6}{row['loc']:>8.3f}{rep:>8}")
        return "\n".join(lines)


def report(records: Iterable[EvalRecord]) -> MetricReport:
    records = list(records)
    c = Counts()
    kinds: dict[str, Counts] = {k: Counts() for k in KIND_ROWS}
    for r in records:
        c.add(r)
        kinds[r.bug_kind].add(r)
    rt = {k: float(v) for k, v in rates(c).items()}
    per_kind = {}
    for k, kc in kinds.items():
        per_kind[k] = {
            "n": kc.samples,
            "loc": kc.loc_correct / kc.samples if kc.samples else 0.0,
            "repair": (kc.correct_repairs / kc.buggy if kc.buggy else 0.0) if k != "NoBug" else None,
        }
    points = pr_curve(records)
    baseline = float(np.mean([1.0 / (r.num_locations + 1) for r in records])) if records else 0.0
    buggy = [r for r in records if r.truth is not None]
    return MetricReport(
        counts=c, DFW=c.dfw, DTW=c.dtw, TW=c.tw, FW=c.fw,
        FDR=rt["FDR"], DPr=rt["DPr"], DRe=rt["DRe"], RAcc=rt["RAcc"], Pr=rt["Pr"], Re=rt["Re"],
        joint=rt["joint"], loc=rt["loc"], repair=rt["repair"],
        per_kind=per_kind, pr_points=points, pr_auc=pr_auc(points), loc_baseline=baseline,
        loc_buggy=sum(r.loc_correct for r in buggy) / len(buggy) if buggy else 0.0,
    )
