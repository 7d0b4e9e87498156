"""Function-local symbol resolution."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .tree import Location, Node, NodeKind, SourceUnit, node_at

MODULE_SCOPE = "<module>"


class SymbolKind(str, Enum):
    VARIABLE = "variable"
    FUNCTION = "function"
    PARAMETER = "parameter"


@dataclass(frozen=True, order=True)
class Symbol:
    name: str
    kind: SymbolKind
    scope: str

    @property
    def is_local(self) -> bool:
        return self.scope != MODULE_SCOPE and self.kind in (SymbolKind.VARIABLE, SymbolKind.PARAMETER)


class NotANameLocationError(LookupError):
    pass


@dataclass
class SymbolTable:
    """Symbols of one function.

    ``position`` orders occurrences by pre-order leaf index; ``defined_at``
    holds, per local symbol, the leaf index after which its first
    definition takes effect (-1 for parameters).
    """

    function: str
    symbols: set[Symbol] = field(default_factory=set)
    occurrences: dict[Location, Symbol] = field(default_factory=dict)
    position: dict[Location, int] = field(default_factory=dict)
    defined_at: dict[Symbol, int] = field(default_factory=dict)
    unresolved: set[Symbol] = field(default_factory=set)
    # occurrence kinds: "param", "store" (plain assignment target),
    # "update" (augmented-assignment target), "load"
    context: dict[Location, str] = field(default_factory=dict)

    def local_symbols(self) -> list[Symbol]:
        return sorted(s for s in self.symbols if s.is_local)

    def occurrences_of(self, sym: Symbol) -> list[Location]:
        return sorted(loc for loc, s in self.occurrences.items() if s == sym)

    def by_name(self, name: str) -> Symbol | None:
        for s in self.symbols:
            if s.name == name and s.is_local:
                return s
        for s in self.symbols:
            if s.name == name:
                return s
        return None

    def defined_before(self, loc: Location) -> list[Symbol]:
        pos = self.position[loc]
        return sorted(s for s, d in self.defined_at.items() if d < pos)


def _leaf_positions(fn: Node) -> tuple[dict[Location, int], dict[Location, int]]:
    """First and last leaf index under every location."""
    first: dict[Location, int] = {}
    last: dict[Location, int] = {}
    counter = 0
    for loc, n in fn.walk():
        if n.is_leaf:
            for k in range(len(loc) + 1):
                prefix = loc[:k]
                first.setdefault(prefix, counter)
                last[prefix] = counter
            counter += 1
    return first, last


def _assigned_names(fn: Node) -> Iterable[str]:
    for _, n in fn.walk():
        if n.kind in (NodeKind.ASSIGN, NodeKind.AUG_ASSIGN) and n.child(1).kind == NodeKind.NAME:
            yield n.child(1).token


def _callee_names(fn: Node) -> set[str]:
    out = set()
    for _, n in fn.walk():
        if n.kind == NodeKind.CALL and n.child(1).kind == NodeKind.NAME:
            out.add(n.child(1).token)
    return out


def resolve_function(fn: Node, module_functions: Sequence[str] = ()) -> SymbolTable:
    fname = fn.child(1).token
    table = SymbolTable(fname)
    first, last = _leaf_positions(fn)
    params = {p.child(1).token for p in fn.children[1:-1]}
    assigned = set(_assigned_names(fn)) - params
    callees = _callee_names(fn)
    module_functions = set(module_functions)

    def symbol_for(name: str) -> Symbol:
        if name in params:
            return Symbol(name, SymbolKind.PARAMETER, fname)
        if name in assigned:
            return Symbol(name, SymbolKind.VARIABLE, fname)
        kind = SymbolKind.FUNCTION if (name in module_functions or name in callees) else SymbolKind.VARIABLE
        sym = Symbol(name, kind, MODULE_SCOPE)
        if name not in module_functions:
            table.unresolved.add(sym)
        return sym

    def add(loc: Location, name: str, ctx: str) -> None:
        sym = symbol_for(name)
        table.symbols.add(sym)
        table.occurrences[loc] = sym
        table.position[loc] = first[loc]
        table.context[loc] = ctx

    for i, p in enumerate(fn.children[1:-1], 2):
        loc = (i, 1)
        add(loc, p.child(1).token, "param")
        table.defined_at[table.occurrences[loc]] = -1

    body_loc = (len(fn.children),)

    def visit(n: Node, loc: Location, ctx: str = "load") -> None:
        k = n.kind
        if k == NodeKind.NAME:
            add(loc, n.token, ctx)
        elif k == NodeKind.ATTRIBUTE:
            add(loc, n.child(1).token, "load")
        elif k in (NodeKind.ASSIGN, NodeKind.AUG_ASSIGN):
            target = n.child(1)
            tctx = "store" if k == NodeKind.ASSIGN else "update"
            visit(target, loc + (1,), tctx if target.kind == NodeKind.NAME else "load")
            visit(n.child(3), loc + (3,))
            if target.kind == NodeKind.NAME:
                sym = table.occurrences[loc + (1,)]
                if sym.is_local and sym not in table.defined_at:
                    table.defined_at[sym] = last[loc]
        elif not n.is_leaf:
            for i, c in enumerate(n.children, 1):
                visit(c, loc + (i,))

    visit(node_at(fn, body_loc), body_loc)
    return table


def resolve_symbols(unit: SourceUnit) -> list[SymbolTable]:
    """One :class:`SymbolTable` per function of ``unit``, in order."""
    names = unit.function_names()
    return [resolve_function(fn, names) for fn in unit.functions]


def in_scope_before(s: Node, table: SymbolTable, loc: Sequence[int]) -> set[Symbol]:
    """Variables/parameters first defined strictly before the Name at ``loc``,
    excluding the symbol occurring there."""
    loc = tuple(loc)
    n = node_at(s, loc)
    if n.kind != NodeKind.NAME or loc not in table.occurrences:
        raise NotANameLocationError(f"location {list(loc)} is not a name occurrence")
    here = table.occurrences[loc]
    return {sym for sym in table.defined_before(loc) if sym != here}
