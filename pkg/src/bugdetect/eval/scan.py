"""Run a trained detector over source files and report ranked warnings."""
from __future__ import annotations

import ast
import bisect
import difflib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..graph.extract import extract_graph
from ..lang.parser import ParseError, parse
from ..lang.printer import to_source
from ..lang.symbols import resolve_function
from ..lang.tree import Node, SourceUnit, node_at
from ..model.batch import encode_graph
from ..model.network import BugModel
from ..model.ops import predict_graphs
from ..model.vocab import Vocabulary
from ..rewrite.engine import apply, enumerate_rewrites
from ..rewrite.rules import PotentialRewrite
from .evaluate import check_compatible


@dataclass
class Warning:
    file: str
    line: int  # 1-based
    col: int  # 0-based
    kind: str
    repair_diff: str
    confidence: float
    function: str
    probability: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)


@dataclass
class Skipped:
    file: str
    line: int
    reason: str


@dataclass
class _Target:
    """One function to scan and how to map its spans back to the file."""

    unit: SourceUnit
    index: int
    text: str
    line0: int  # file line of the first line of ``text``, 1-based
    indent: int


def _line_col(text: str, offset: int) -> tuple[int, int]:
    starts = [0] + [i + 1 for i, ch in enumerate(text) if ch == "\n"]
    row = bisect.bisect_right(starts, offset) - 1
    return row + 1, offset - starts[row]


def _segment(lines: list[str], start: int, end: int) -> tuple[str, int] | None:
    """Lines ``start..end`` (1-based, inclusive) with the def line's indent removed."""
    seg = lines[start - 1:end]
    indent = len(seg[0]) - len(seg[0].lstrip(" \t"))
    prefix = seg[0][:indent]
    out = []
    for ln in seg:
        if ln.strip() == "":
            out.append("\n")
        elif ln.startswith(prefix):
            out.append(ln[indent:])
        else:
            return None
    text = "".join(out)
    return (text if text.endswith("\n") else text + "\n"), indent


def _targets(path: str, text: str, skipped: list[Skipped]) -> list[_Target]:
    try:
        unit = parse(text)
        return [_Target(unit, i, text, 1, 0) for i in range(len(unit.functions))]
    except ParseError:
        pass
    try:
        tree = ast.parse(text)
    except SyntaxError as exc:
        skipped.append(Skipped(path, exc.lineno or 0, f"syntax error: {exc.msg}"))
        return []
    defs = []
    for top in tree.body:
        if isinstance(top, (ast.FunctionDef, ast.AsyncFunctionDef)):
            defs.append(top)
        elif isinstance(top, ast.ClassDef):
            defs += [n for n in top.body if isinstance(n, (ast.FunctionDef, ast.AsyncFunctionDef))]
    lines = text.splitlines(keepends=True)
    out = []
    for d in defs:
        seg = _segment(lines, d.lineno, d.end_lineno or d.lineno)
        if seg is None:
            skipped.append(Skipped(path, d.lineno, "inconsistent indentation"))
            continue
        try:
            unit = parse(seg[0])
        except ParseError as exc:
            skipped.append(Skipped(path, d.lineno, f"unsupported: {exc}"))
            continue
        if len(unit.functions) != 1:
            skipped.append(Skipped(path, d.lineno, "unsupported: nested definitions"))
            continue
        out.append(_Target(unit, 0, seg[0], d.lineno, seg[1]))
    return out


def repair_diff(fn: Node, pr: PotentialRewrite, name: str = "") -> str:
    before = to_source(fn).splitlines(keepends=True)
    after = to_source(apply(fn, pr)).splitlines(keepends=True)
    return "".join(difflib.unified_diff(before, after, f"a/{name}", f"b/{name}", n=0))


def _position(t: _Target, fn: Node, loc) -> tuple[int, int]:
    span = node_at(fn, loc).span or fn.span or (0, 0)
    row, col = _line_col(t.text, span[0])
    return t.line0 + row - 1, col + t.indent


def scan_files(
    model: BugModel,
    vocab: Vocabulary,
    files: Iterable[str],
    top_n: int = 3,
    threshold: float = 0.5,
) -> tuple[list[Warning], list[Skipped]]:
    """Warnings ranked by function confidence, then candidate probability.

    A function is reported when its confidence 1 - p(NoBug) reaches
    ``threshold``; a threshold of 1 or more disables reporting.
    """
    check_compatible(model, vocab)
    skipped: list[Skipped] = []
    work = []
    for path in files:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            skipped.append(Skipped(str(path), 0, f"unreadable: {exc}"))
            continue
        for t in _targets(str(path), text, skipped):
            fn = t.unit.functions[t.index]
            tbl = resolve_function(fn, t.unit.function_names())
            cands = enumerate_rewrites(fn, tbl)
            if not cands:
                continue
            work.append((str(path), t, fn, cands, extract_graph(fn, tbl, cands, t.unit)))
    preds = predict_graphs(model, [encode_graph(w[4], vocab) for w in work])
    warnings: list[Warning] = []
    for (path, t, fn, cands, g), p in zip(work, preds):
        conf = min(1.0, max(0.0, p.confidence))
        if threshold >= 1.0 or conf < threshold:
            continue
        name = fn.child(1).token
        order = sorted(range(len(cands)), key=lambda i: (-float(p.candidates[i]), i))
        for i in order[:top_n]:
            line, col = _position(t, fn, cands[i].location)
            warnings.append(Warning(
                path, line, col, cands[i].kind.value, repair_diff(fn, cands[i], name), conf, name,
                float(p.candidates[i]),
            ))
    warnings.sort(key=lambda w: (-w.confidence, -w.probability))
    return warnings, skipped


def write_warnings(path: str, warnings: Sequence[Warning]) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        for w in warnings:
            fp.write(w.to_json() + "\n")
