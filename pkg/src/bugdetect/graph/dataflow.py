"""May-dataflow over variable access events.

Each access of a local symbol is an event (read or write). Events are wired
into a control-flow graph with if/while branching and loop back edges; a
forward fixpoint yields, per event, the previous accesses and writes that may
reach it, and a backward fixpoint marks accesses that may be the last one.
Short-circuit evaluation is not modelled.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..lang.symbols import Symbol, SymbolTable
from ..lang.tree import Location, Node, NodeKind

ENTRY = -1
EXIT = -2


@dataclass(frozen=True)
class Event:
    location: Location
    symbol: Symbol
    write: bool


def _stmt_events(stmt: Node, loc: Location, tbl: SymbolTable, out: list[Event]) -> None:
    """Access events of a simple statement or a test expression, in evaluation order."""
    k = stmt.kind
    if k in (NodeKind.ASSIGN, NodeKind.AUG_ASSIGN):
        target, tloc = stmt.child(1), loc + (1,)
        if k == NodeKind.AUG_ASSIGN:
            expr_events(target, tloc, tbl, out)
        expr_events(stmt.child(3), loc + (3,), tbl, out)
        if target.kind == NodeKind.NAME:
            sym = tbl.occurrences.get(tloc)
            if sym is not None and sym.is_local:
                out.append(Event(tloc, sym, True))
        elif k == NodeKind.ASSIGN:
            expr_events(target, tloc, tbl, out)
    elif k in (NodeKind.RETURN, NodeKind.EXPR_STMT):
        for i, c in enumerate(stmt.children, 1):
            expr_events(c, loc + (i,), tbl, out)


def expr_events(e: Node, loc: Location, tbl: SymbolTable, out: list[Event]) -> None:
    if e.kind in (NodeKind.NAME, NodeKind.ATTRIBUTE):
        sym = tbl.occurrences.get(loc)
        if sym is not None and sym.is_local:
            out.append(Event(loc, sym, False))
        return
    if e.is_leaf:
        return
    for i, c in enumerate(e.children, 1):
        expr_events(c, loc + (i,), tbl, out)


def param_events(fn: Node, tbl: SymbolTable) -> list[Event]:
    return [Event((i, 1), tbl.occurrences[(i, 1)], True) for i in range(2, len(fn.children))]


@dataclass
class EventGraph:
    events: list[Event] = field(default_factory=list)
    # successor lists keyed by node id; ids >= 0 are events, larger synthetic
    # ids are loop junctions, ENTRY/EXIT are the function boundary
    succ: dict[int, set[int]] = field(default_factory=dict)
    junctions: int = 0

    def add_event(self, ev: Event, preds: set[int]) -> set[int]:
        i = len(self.events)
        self.events.append(ev)
        self._link(preds, i)
        return {i}

    def add_junction(self, preds: set[int]) -> int:
        self.junctions += 1
        j = 1_000_000 + self.junctions
        self._link(preds, j)
        return j

    def _link(self, preds: set[int], dst: int) -> None:
        for p in preds:
            self.succ.setdefault(p, set()).add(dst)

    def nodes(self) -> list[int]:
        ids = {ENTRY, EXIT} | set(self.succ)
        for s in self.succ.values():
            ids |= s
        return sorted(ids)


def build_event_graph(fn: Node, tbl: SymbolTable) -> EventGraph:
    g = EventGraph()

    def seq(events: list[Event], preds: set[int]) -> set[int]:
        for ev in events:
            preds = g.add_event(ev, preds)
        return preds

    def block(b: Node, loc: Location, preds: set[int]) -> set[int]:
        for i, stmt in enumerate(b.children, 1):
            preds = statement(stmt, loc + (i,), preds)
        return preds

    def statement(stmt: Node, loc: Location, preds: set[int]) -> set[int]:
        k = stmt.kind
        if k == NodeKind.IF:
            test: list[Event] = []
            expr_events(stmt.child(1), loc + (1,), tbl, test)
            preds = seq(test, preds)
            then = block(stmt.child(2), loc + (2,), preds)
            other = block(stmt.child(3), loc + (3,), preds) if len(stmt.children) == 3 else preds
            return then | other
        if k == NodeKind.WHILE:
            head = g.add_junction(preds)
            test = []
            expr_events(stmt.child(1), loc + (1,), tbl, test)
            after_test = seq(test, {head})
            body = block(stmt.child(2), loc + (2,), after_test)
            g._link(body, head)
            return after_test
        events: list[Event] = []
        _stmt_events(stmt, loc, tbl, events)
        preds = seq(events, preds)
        if k == NodeKind.RETURN:
            g._link(preds, EXIT)
            return set()
        return preds

    preds = seq(param_events(fn, tbl), {ENTRY})
    preds = block(fn.children[-1], (len(fn.children),), preds)
    g._link(preds, EXIT)
    return g


@dataclass
class DataflowResult:
    last_may_use: set[tuple[Event, Event]]
    last_may_write: set[tuple[Event, Event]]
    may_final_use: set[Event]


def analyze(fn: Node, tbl: SymbolTable) -> DataflowResult:
    g = build_event_graph(fn, tbl)
    # statements after a return are never executed and carry no dataflow
    reach, stack = {ENTRY}, [ENTRY]
    while stack:
        for s in g.succ.get(stack.pop(), ()):
            if s not in reach:
                reach.add(s)
                stack.append(s)
    nodes = [n for n in g.nodes() if n in reach]
    preds: dict[int, set[int]] = {n: set() for n in nodes}
    for src, dsts in g.succ.items():
        for d in dsts:
            if src in reach and d in reach:
                preds[d].add(src)

    # forward: per node, symbol -> (last accesses, last writes) after the node
    State = dict[Symbol, tuple[frozenset[int], frozenset[int]]]
    out: dict[int, State] = {n: {} for n in nodes}

    def join(n: int) -> State:
        acc: dict[Symbol, tuple[set[int], set[int]]] = {}
        for p in preds[n]:
            for sym, (uses, writes) in out[p].items():
                u, w = acc.setdefault(sym, (set(), set()))
                u |= uses
                w |= writes
        return {s: (frozenset(u), frozenset(w)) for s, (u, w) in acc.items()}

    changed = True
    while changed:
        changed = False
        for n in nodes:
            state = join(n)
            if 0 <= n < len(g.events):
                ev = g.events[n]
                _, writes = state.get(ev.symbol, (frozenset(), frozenset()))
                state = dict(state)
                state[ev.symbol] = (frozenset({n}), frozenset({n}) if ev.write else writes)
            if state != out[n]:
                out[n] = state
                changed = True

    lmu: set[tuple[Event, Event]] = set()
    lmw: set[tuple[Event, Event]] = set()
    for i, ev in enumerate(g.events):
        if i not in reach:
            continue
        uses, writes = join(i).get(ev.symbol, (frozenset(), frozenset()))
        lmu |= {(ev, g.events[j]) for j in uses}
        lmw |= {(ev, g.events[j]) for j in writes}

    # backward: symbols whose next access along some path is the function exit
    clear: dict[int, frozenset[Symbol]] = {n: frozenset() for n in nodes}
    every = frozenset(ev.symbol for ev in g.events)

    def entering(n: int) -> frozenset[Symbol]:
        if n == EXIT:
            return every
        if 0 <= n < len(g.events):
            return clear[n] - {g.events[n].symbol}
        return clear[n]

    changed = True
    while changed:
        changed = False
        for n in reversed(nodes):
            acc: frozenset[Symbol] = frozenset()
            for s in g.succ.get(n, ()):
                if s in reach:
                    acc |= entering(s)
            if acc != clear[n]:
                clear[n] = acc
                changed = True
    final = {ev for i, ev in enumerate(g.events) if i in reach and ev.symbol in clear[i]}
    return DataflowResult(lmu, lmw, final)
