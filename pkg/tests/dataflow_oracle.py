"""Reference dataflow by explicit path enumeration over Python's own ``ast``.

Events are (line, col, name, is_write) keyed by source position of the
printed function, so the oracle shares nothing with the library's tree or
control-flow code. Loops are unrolled 0, 1 and 2 times.
"""
from __future__ import annotations

import ast

UNROLL = 2

Ev = tuple[int, int, str, bool]


def _reads(node: ast.AST | None, local: set[str]) -> list[Ev]:
    if node is None:
        return []
    names = [n for n in ast.walk(node) if isinstance(n, ast.Name) and n.id in local]
    # the subset evaluates operands left to right, i.e. in source order
    names.sort(key=lambda n: (n.lineno, n.col_offset))
    return [(n.lineno, n.col_offset, n.id, False) for n in names]


def _locals(fn: ast.FunctionDef) -> set[str]:
    out = {a.arg for a in fn.args.args}
    for n in ast.walk(fn):
        if isinstance(n, ast.Name) and isinstance(n.ctx, ast.Store):
            out.add(n.id)
    return out


class _Paths:
    def __init__(self, local: set[str]):
        self.local = local
        self.finished: list[tuple[Ev, ...]] = []

    def block(self, stmts: list[ast.stmt], paths: list[tuple[Ev, ...]]) -> list[tuple[Ev, ...]]:
        for s in stmts:
            paths = self.stmt(s, paths)
        return paths

    def stmt(self, s: ast.stmt, paths: list[tuple[Ev, ...]]) -> list[tuple[Ev, ...]]:
        if isinstance(s, ast.If):
            t = tuple(_reads(s.test, self.local))
            at = [p + t for p in paths]
            return self.block(s.body, at) + self.block(s.orelse, at)
        if isinstance(s, ast.While):
            t = tuple(_reads(s.test, self.local))
            out = []
            cur = paths
            for _ in range(UNROLL + 1):
                out += [p + t for p in cur]
                cur = self.block(s.body, [p + t for p in cur])
            return out
        if isinstance(s, ast.Return):
            self.finished += [p + tuple(_reads(s.value, self.local)) for p in paths]
            return []
        if isinstance(s, ast.Assign):
            (tgt,) = s.targets
            ev = _reads(s.value, self.local)
            if isinstance(tgt, ast.Name) and tgt.id in self.local:
                ev.append((tgt.lineno, tgt.col_offset, tgt.id, True))
            return [p + tuple(ev) for p in paths]
        if isinstance(s, ast.AugAssign):
            tgt = s.target
            ev = [(tgt.lineno, tgt.col_offset, tgt.id, False)] + _reads(s.value, self.local)
            ev.append((tgt.lineno, tgt.col_offset, tgt.id, True))
            return [p + tuple(ev) for p in paths]
        if isinstance(s, ast.Expr):
            return [p + tuple(_reads(s.value, self.local)) for p in paths]
        raise ValueError(f"unexpected statement {type(s).__name__}")


def reference_dataflow(source: str) -> tuple[set[tuple[Ev, Ev]], set[tuple[Ev, Ev]], set[Ev]]:
    """(last-may-use pairs, last-may-write pairs, may-final-use events)."""
    fn = ast.parse(source).body[0]
    assert isinstance(fn, ast.FunctionDef)
    local = _locals(fn)
    entry = tuple((a.lineno, a.col_offset, a.arg, True) for a in fn.args.args)
    walker = _Paths(local)
    ended = walker.block(fn.body, [entry])
    paths = walker.finished + ended
    lmu: set[tuple[Ev, Ev]] = set()
    lmw: set[tuple[Ev, Ev]] = set()
    final: set[Ev] = set()
    for path in paths:
        last: dict[str, Ev] = {}
        write: dict[str, Ev] = {}
        for ev in path:
            name = ev[2]
            if name in last:
                lmu.add((ev, last[name]))
            if name in write:
                lmw.add((ev, write[name]))
            last[name] = ev
            if ev[3]:
                write[name] = ev
        final |= set(last.values())
    return lmu, lmw, final


def library_dataflow(fn) -> tuple[set[tuple[Ev, Ev]], set[tuple[Ev, Ev]], set[Ev]]:
    """The library's analysis re-keyed by printed source position."""
    from bugdetect.graph import analyze
    from bugdetect.lang import render, resolve_function

    start: dict[tuple[int, ...], tuple[int, int]] = {}
    for t in render(fn)[1]:
        for k in range(len(t.owner) + 1):
            loc = t.owner[:k]
            if loc not in start or (t.line, t.col) < start[loc]:
                start[loc] = (t.line, t.col)

    def key(e) -> Ev:
        line, col = start[e.location]
        return (line, col, e.symbol.name, e.write)

    res = analyze(fn, resolve_function(fn))
    return (
        {(key(a), key(b)) for a, b in res.last_may_use},
        {(key(a), key(b)) for a, b in res.last_may_write},
        {key(e) for e in res.may_final_use},
    )
