"""Candidate enumeration, application and inversion of bug rewrites."""
from __future__ import annotations

from ..lang.symbols import SymbolTable, in_scope_before, resolve_function
from ..lang.tree import Node, NodeKind, node_at, operator_class
from .rules import (
    BOOL_LITERALS,
    INT_LITERALS,
    OPERATOR_RULE,
    PotentialRewrite,
    RewriteRule,
    RuleKind,
    StaleRewriteError,
    _toggle_operand,
    toggle_slot,
)


def _var_misuse(s: Node, tbl: SymbolTable, loc, n: Node) -> list[PotentialRewrite]:
    sym = tbl.occurrences.get(loc)
    if sym is None or not sym.is_local or tbl.context.get(loc) not in ("load", "update"):
        return []
    # the replaced symbol must itself be in scope here, otherwise the repair
    # would not be a candidate on the rewritten tree
    defined = tbl.defined_at.get(sym)
    if defined is None or defined >= tbl.position[loc]:
        return []
    return [
        PotentialRewrite(loc, RewriteRule(RuleKind.VAR_MISUSE, other.name, n.token))
        for other in in_scope_before(s, tbl, loc)
        if other.is_local and other.name != n.token
    ]


def _arg_swaps(loc, n: Node) -> list[PotentialRewrite]:
    args = n.children[1:]
    out = []
    for i in range(len(args)):
        for j in range(i + 1, len(args)):
            if args[i] != args[j]:
                out.append(PotentialRewrite(loc, RewriteRule(RuleKind.ARG_SWAP, f"{i + 1},{j + 1}")))
    return out


def _operator_swaps(s: Node, loc, n: Node) -> list[PotentialRewrite]:
    parent = node_at(s, loc[:-1])
    kind = OPERATOR_RULE.get(parent.kind)
    cls = operator_class(parent.kind, n.token)
    if kind is None or cls is None:
        return []
    return [PotentialRewrite(loc, RewriteRule(kind, op, n.token)) for op in cls if op != n.token]


def _literal_swaps(s: Node, loc, n: Node) -> list[PotentialRewrite]:
    if node_at(s, loc[:-1]).kind == NodeKind.PARAM:
        return []
    for dom in (INT_LITERALS, BOOL_LITERALS):
        if n.token in dom:
            return [PotentialRewrite(loc, RewriteRule(RuleKind.WRONG_LITERAL, v, n.token)) for v in dom if v != n.token]
    return []


def enumerate_rewrites(s: Node, tbl: SymbolTable | None = None) -> list[PotentialRewrite]:
    """All bug-inducing candidates of function ``s`` in canonical order
    (location, then rule kind, then payload). The identity is not included."""
    if s.kind != NodeKind.FUNCTION_DEF:
        raise ValueError("enumerate_rewrites expects a FunctionDef")
    if tbl is None:
        tbl = resolve_function(s)
    out: list[PotentialRewrite] = []
    for loc, n in s.walk():
        if not loc:
            continue
        k = n.kind
        if k == NodeKind.NAME:
            out += _var_misuse(s, tbl, loc, n)
        elif k == NodeKind.CALL:
            out += _arg_swaps(loc, n)
        elif k == NodeKind.OPERATOR:
            out += _operator_swaps(s, loc, n)
        elif k == NodeKind.LITERAL:
            out += _literal_swaps(s, loc, n)
        op = toggle_slot(s, loc)
        if op is not None and _toggle_operand(n, op):
            out.append(PotentialRewrite(loc, RewriteRule(RuleKind.UNARY_NEG_TOGGLE, op)))
    out.sort(key=PotentialRewrite.sort_key)
    return out


def apply(s: Node, pr: PotentialRewrite) -> Node:
    """``s[location -> rule]``; raises :class:`StaleRewriteError` if the matcher fails."""
    if not pr.rule.matches(s, pr.location):
        raise StaleRewriteError(f"{pr.describe()} does not match the tree")
    return pr.rule.transform(s, pr.location)


def invert(pr: PotentialRewrite, s_after: Node) -> PotentialRewrite:
    """The rewrite that undoes ``pr`` on the tree it produced."""
    inv = PotentialRewrite(pr.location, pr.rule.inverse())
    if not inv.rule.matches(s_after, inv.location):
        raise StaleRewriteError(f"inverse of {pr.describe()} does not match the rewritten tree")
    return inv


def resolve_rewrite(s: Node, obj: dict) -> PotentialRewrite:
    """Rebuild a serialized rewrite against ``s``, recovering the replaced datum."""
    pr = PotentialRewrite.from_json(obj)
    if pr.rule.original or pr.kind in (RuleKind.ARG_SWAP, RuleKind.UNARY_NEG_TOGGLE, RuleKind.IDENTITY):
        return pr
    n = node_at(s, pr.location)
    return PotentialRewrite(pr.location, RewriteRule(pr.kind, pr.payload, n.token or ""))
