"""Entity/relation graph of one function plus its candidate-rewrite index."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from ..lang.printer import render
from ..lang.symbols import SymbolTable, resolve_function
from ..lang.tree import Location, Node, NodeKind, SourceUnit, node_at
from ..rewrite.engine import enumerate_rewrites
from ..rewrite.rules import PotentialRewrite, RuleKind, _arg_pair
from .dataflow import analyze


class EntityKind(str, Enum):
    TOKEN = "Token"
    SYNTAX_NODE = "SyntaxNode"
    SYMBOL = "Symbol"
    SUBTOKEN = "Subtoken"
    FORMAL_ARG_NAME = "FormalArgName"
    DOCUMENTATION = "Documentation"


class Relation(str, Enum):
    NEXT_TOKEN = "NextToken"
    SYNTAX_CHILD = "SyntaxChild"
    SYNTAX_NEXT_SIBLING = "SyntaxNextSibling"
    CALL_DOC = "CallDoc"
    FORMAL_ARG = "FormalArg"
    CONTROL_FLOW_NEXT = "ControlFlowNext"
    ASSIGNED_FROM = "AssignedFrom"
    RETURNS_FROM = "ReturnsFrom"
    OCCURRENCE_OF = "OccurrenceOf"
    LAST_MAY_USE = "LastMayUse"
    LAST_MAY_WRITE = "LastMayWrite"
    MAY_FINAL_USE_OF = "MayFinalUseOf"


RELATIONS = tuple(Relation)


@dataclass(frozen=True)
class Entity:
    id: int
    kind: EntityKind
    label: str


@dataclass(frozen=True)
class Candidate:
    """A serialized potential rewrite anchored at a graph node.

    ``meta`` holds node ids the rewrite head needs: the replacement Symbol for
    VarMisuse, the two argument nodes for ArgSwap.
    """

    location: Location
    kind: str
    payload: str
    node_id: int
    meta: tuple[int, ...] = ()

    def key(self) -> tuple[Location, str, str]:
        return (self.location, self.kind, self.payload)


NOBUG = "NOBUG"


@dataclass
class CodeGraph:
    nodes: list[Entity] = field(default_factory=list)
    edges: list[tuple[int, Relation, int]] = field(default_factory=list)
    candidates: list[Candidate] = field(default_factory=list)
    target: tuple[Location, str, str] | str = NOBUG
    function: str = ""

    @property
    def nobug_id(self) -> int:
        """Virtual id standing for the NoBug location; never a real node."""
        return len(self.nodes)

    @property
    def candidate_index(self) -> dict[Location, int]:
        return {c.location: c.node_id for c in self.candidates}

    def tokens(self) -> list[int]:
        return [n.id for n in self.nodes if n.kind == EntityKind.TOKEN]

    def edges_of(self, rel: Relation) -> list[tuple[int, int]]:
        return [(s, d) for s, r, d in self.edges if r == rel]

    def target_index(self) -> int | None:
        """Index into ``candidates`` of the target, None for NOBUG."""
        if self.target == NOBUG:
            return None
        for i, c in enumerate(self.candidates):
            if c.key() == self.target:
                return i
        raise KeyError(f"target {self.target} is not among the candidates")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CodeGraph):
            return NotImplemented
        return (self.nodes, self.edges, self.candidates, self.target, self.function) == (
            other.nodes, other.edges, other.candidates, other.target, other.function
        )


def _statement_kinds() -> frozenset[NodeKind]:
    return frozenset({NodeKind.ASSIGN, NodeKind.AUG_ASSIGN, NodeKind.IF, NodeKind.WHILE,
                      NodeKind.RETURN, NodeKind.EXPR_STMT})


CFG_STATEMENTS = _statement_kinds()


def control_flow(fn: Node) -> list[tuple[Location, Location]]:
    """Statement-level successor pairs; ``()`` (the function) stands for exit."""
    edges: list[tuple[Location, Location]] = []

    def first(b: Node, loc: Location, cont: Location) -> Location:
        for i, s in enumerate(b.children, 1):
            if s.kind in CFG_STATEMENTS:
                return loc + (i,)
        return cont

    def block(b: Node, loc: Location, cont: Location) -> None:
        stmts = [(loc + (i,), s) for i, s in enumerate(b.children, 1) if s.kind in CFG_STATEMENTS]
        for j, (sloc, s) in enumerate(stmts):
            nxt = stmts[j + 1][0] if j + 1 < len(stmts) else cont
            statement(s, sloc, nxt)

    def statement(s: Node, loc: Location, nxt: Location) -> None:
        if s.kind == NodeKind.IF:
            edges.append((loc, first(s.child(2), loc + (2,), nxt)))
            block(s.child(2), loc + (2,), nxt)
            if len(s.children) == 3:
                edges.append((loc, first(s.child(3), loc + (3,), nxt)))
                block(s.child(3), loc + (3,), nxt)
            else:
                edges.append((loc, nxt))
        elif s.kind == NodeKind.WHILE:
            edges.append((loc, first(s.child(2), loc + (2,), loc)))
            edges.append((loc, nxt))
            block(s.child(2), loc + (2,), loc)
        elif s.kind == NodeKind.RETURN:
            edges.append((loc, ()))
        else:
            edges.append((loc, nxt))

    block(fn.children[-1], (len(fn.children),), ())
    # a branch whose arms meet at the same statement still has one edge
    return list(dict.fromkeys(edges))


def _docstring(fn: Node) -> str | None:
    for s in fn.children[-1].children:
        if s.kind == NodeKind.DOCSTRING:
            return s.token
        if s.kind != NodeKind.COMMENT:
            return None
    return None


def extract_graph(
    fn: Node,
    tbl: SymbolTable | None = None,
    candidates: Sequence[PotentialRewrite] | None = None,
    unit: SourceUnit | None = None,
    target: PotentialRewrite | None = None,
) -> CodeGraph:
    """Build the graph of function ``fn``.

    ``unit`` supplies the sibling functions used for FormalArg and CallDoc
    links; ``target`` (a repair rewrite) is recorded for training.
    """
    siblings = {f.child(1).token: f for f in (unit.functions if unit else [fn])}
    if tbl is None:
        tbl = resolve_function(fn, list(siblings))
    if candidates is None:
        candidates = enumerate_rewrites(fn, tbl)
    g = CodeGraph(function=fn.child(1).token)

    def add(kind: EntityKind, label: str) -> int:
        g.nodes.append(Entity(len(g.nodes), kind, label))
        return len(g.nodes) - 1

    def edge(src: int, rel: Relation, dst: int) -> None:
        g.edges.append((src, rel, dst))

    # entities: syntax nodes in pre-order, then tokens in source order
    node_id: dict[Location, int] = {}
    for loc, n in fn.walk():
        if not n.is_leaf:
            node_id[loc] = add(EntityKind.SYNTAX_NODE, n.kind.value)
    _, printed = render(fn)
    token_ids: list[int] = []
    for t in printed:
        tid = add(EntityKind.TOKEN, t.text)
        token_ids.append(tid)
        if t.leaf:
            node_id[t.owner] = tid
    symbol_id = {s: add(EntityKind.SYMBOL, s.name) for s in sorted(tbl.symbols)}

    for a, b in zip(token_ids, token_ids[1:]):
        edge(a, Relation.NEXT_TOKEN, b)

    for loc, n in fn.walk():
        if n.is_leaf:
            continue
        kids = [node_id[loc + (i,)] for i in range(1, len(n.children) + 1)]
        for k in kids:
            edge(node_id[loc], Relation.SYNTAX_CHILD, k)
        for a, b in zip(kids, kids[1:]):
            edge(a, Relation.SYNTAX_NEXT_SIBLING, b)
    for t, tid in zip(printed, token_ids):
        if not t.leaf:
            edge(node_id[t.owner], Relation.SYNTAX_CHILD, tid)

    # calls into sibling functions: formal argument names and documentation
    formal_id: dict[tuple[str, int], int] = {}
    doc_id: dict[str, int] = {}
    for loc, n in fn.walk():
        if n.kind != NodeKind.CALL or n.child(1).kind != NodeKind.NAME:
            continue
        callee = siblings.get(n.child(1).token)
        if callee is None:
            continue
        cname = callee.child(1).token
        params = [p.child(1).token for p in callee.children[1:-1]]
        for i in range(min(len(params), len(n.children) - 1)):
            key = (cname, i)
            if key not in formal_id:
                formal_id[key] = add(EntityKind.FORMAL_ARG_NAME, params[i])
            edge(node_id[loc + (i + 2,)], Relation.FORMAL_ARG, formal_id[key])
        doc = _docstring(callee)
        if doc is not None:
            if cname not in doc_id:
                doc_id[cname] = add(EntityKind.DOCUMENTATION, doc)
            edge(node_id[loc], Relation.CALL_DOC, doc_id[cname])

    for src, dst in control_flow(fn):
        edge(node_id[src], Relation.CONTROL_FLOW_NEXT, node_id[dst])

    for loc, n in fn.walk():
        if n.kind in (NodeKind.ASSIGN, NodeKind.AUG_ASSIGN):
            edge(node_id[loc + (1,)], Relation.ASSIGNED_FROM, node_id[loc + (3,)])
        elif n.kind == NodeKind.RETURN:
            edge(node_id[()], Relation.RETURNS_FROM, node_id[loc])

    for loc in sorted(tbl.occurrences):
        edge(node_id[loc], Relation.OCCURRENCE_OF, symbol_id[tbl.occurrences[loc]])

    flow = analyze(fn, tbl)
    for rel, pairs in ((Relation.LAST_MAY_USE, flow.last_may_use), (Relation.LAST_MAY_WRITE, flow.last_may_write)):
        for a, b in sorted({(node_id[e.location], node_id[p.location]) for e, p in pairs}):
            edge(a, rel, b)
    for a, b in sorted({(node_id[e.location], symbol_id[e.symbol]) for e in flow.may_final_use}):
        edge(a, Relation.MAY_FINAL_USE_OF, b)

    for pr in candidates:
        meta: tuple[int, ...] = ()
        if pr.kind == RuleKind.VAR_MISUSE:
            sym = next(s for s in tbl.local_symbols() if s.name == pr.payload)
            meta = (symbol_id[sym],)
        elif pr.kind == RuleKind.ARG_SWAP:
            i, j = _arg_pair(pr.payload)
            meta = (node_id[pr.location + (i + 1,)], node_id[pr.location + (j + 1,)])
        g.candidates.append(Candidate(pr.location, pr.kind.value, pr.payload, node_id[pr.location], meta))

    if target is not None and not target.is_identity:
        g.target = target.key()
        g.target_index()  # validates that the repair is a candidate
    return g


def graph_stats(g: CodeGraph) -> dict[str, int]:
    return {"nodes": len(g.nodes), "edges": len(g.edges), "candidates": len(g.candidates)}


def node_location_map(fn: Node) -> dict[Location, int]:
    """Location -> node id as assigned by :func:`extract_graph` (for tests and tools)."""
    ids: dict[Location, int] = {}
    count = 0
    for loc, n in fn.walk():
        if not n.is_leaf:
            ids[loc] = count
            count += 1
    for t in render(fn)[1]:
        if t.leaf:
            ids[t.owner] = count
        count += 1
    return ids


__all__ = [
    "CFG_STATEMENTS", "Candidate", "CodeGraph", "Entity", "EntityKind", "NOBUG", "RELATIONS",
    "Relation", "control_flow", "extract_graph", "graph_stats", "node_at", "node_location_map",
]
