"""Rewrite rules (matcher + transform pairs) and located rewrite instances."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from ..lang.tree import (
    ARITHMETIC_OPS,
    BOOLEAN_OPS,
    Location,
    Node,
    NodeKind,
    _rebuild,
    node_at,
    operator_class,
)

INT_LITERALS = ("-2", "-1", "0", "1", "2")
BOOL_LITERALS = ("True", "False")
LITERAL_DOMAIN = INT_LITERALS + BOOL_LITERALS


class RuleKind(str, Enum):
    VAR_MISUSE = "VarMisuse"
    ARG_SWAP = "ArgSwap"
    WRONG_BINARY_OP = "WrongBinaryOp"
    WRONG_BOOLEAN_OP = "WrongBooleanOp"
    WRONG_COMPARISON_OP = "WrongComparisonOp"
    WRONG_ASSIGN_OP = "WrongAssignOp"
    UNARY_NEG_TOGGLE = "UnaryNegToggle"
    WRONG_LITERAL = "WrongLiteral"
    IDENTITY = "Identity"
    # semantics-preserving augmentations; never enumerated as bugs
    VARIABLE_RENAMING = "VariableRenaming"
    COMMENT_DELETION = "CommentDeletion"
    COMPARISON_MIRRORING = "ComparisonMirroring"
    IF_ELSE_BRANCH_SWAP = "IfElseBranchSwap"

    @property
    def is_bug(self) -> bool:
        return self in BUG_KINDS

    @property
    def order(self) -> int:
        return _KIND_ORDER[self]


BUG_KINDS = (
    RuleKind.VAR_MISUSE,
    RuleKind.ARG_SWAP,
    RuleKind.WRONG_BINARY_OP,
    RuleKind.WRONG_BOOLEAN_OP,
    RuleKind.WRONG_COMPARISON_OP,
    RuleKind.WRONG_ASSIGN_OP,
    RuleKind.UNARY_NEG_TOGGLE,
    RuleKind.WRONG_LITERAL,
)
_KIND_ORDER = {k: i for i, k in enumerate(RuleKind)}

OPERATOR_RULE = {
    NodeKind.BINARY_OP: RuleKind.WRONG_BINARY_OP,
    NodeKind.BOOL_OP: RuleKind.WRONG_BOOLEAN_OP,
    NodeKind.COMPARE: RuleKind.WRONG_COMPARISON_OP,
    NodeKind.ASSIGN: RuleKind.WRONG_ASSIGN_OP,
    NodeKind.AUG_ASSIGN: RuleKind.WRONG_ASSIGN_OP,
}


class StaleRewriteError(ValueError):
    """The rule's matcher does not hold at the target location."""


class NonInvertibleError(ValueError):
    pass


def toggle_slot(s: Node, location: Location) -> str | None:
    """The unary operator that may be toggled at ``location``, if any.

    Direct operands of boolean operators toggle ``not``; direct operands of
    arithmetic binary operators toggle ``-``.
    """
    if not location or location[-1] not in (1, 3):
        return None
    parent = node_at(s, location[:-1])
    if parent.kind == NodeKind.BOOL_OP:
        return "not"
    if parent.kind == NodeKind.BINARY_OP and parent.child(2).token in ARITHMETIC_OPS:
        return "-"
    return None


def _toggle_operand(n: Node, op: str) -> bool:
    """``n`` is an atom the toggle wraps, or an existing wrap of one."""
    if n.kind in (NodeKind.NAME, NodeKind.CALL):
        return True
    return (
        n.kind == NodeKind.UNARY_OP
        and n.child(1).token == op
        and n.child(2).kind in (NodeKind.NAME, NodeKind.CALL)
    )


@dataclass(frozen=True)
class RewriteRule:
    """A rule instance: ``payload`` is the replacement datum, ``original``
    the datum it replaces (needed to build the inverse)."""

    kind: RuleKind
    payload: str = ""
    original: str = field(default="", compare=False)

    def matches(self, s: Node, location: Sequence[int]) -> bool:
        location = tuple(location)
        try:
            n = node_at(s, location)
        except LookupError:
            return False
        k = self.kind
        if k == RuleKind.IDENTITY:
            return True
        if k == RuleKind.VAR_MISUSE:
            if n.kind != NodeKind.NAME or not location or self.payload == n.token:
                return False
            if self.original and n.token != self.original:
                return False
            parent = node_at(s, location[:-1])
            return parent.kind not in (NodeKind.FUNCTION_DEF, NodeKind.PARAM, NodeKind.ATTRIBUTE)
        if k == RuleKind.ARG_SWAP:
            if n.kind != NodeKind.CALL:
                return False
            try:
                i, j = _arg_pair(self.payload)
            except ValueError:
                return False
            return 1 <= i < j <= len(n.children) - 1 and n.children[i] != n.children[j]
        if k in (RuleKind.WRONG_BINARY_OP, RuleKind.WRONG_BOOLEAN_OP,
                 RuleKind.WRONG_COMPARISON_OP, RuleKind.WRONG_ASSIGN_OP):
            if n.kind != NodeKind.OPERATOR or not location:
                return False
            parent = node_at(s, location[:-1])
            if OPERATOR_RULE.get(parent.kind) != k:
                return False
            cls = operator_class(parent.kind, n.token)
            if cls is None or self.payload not in cls or self.payload == n.token:
                return False
            return not self.original or n.token == self.original
        if k == RuleKind.UNARY_NEG_TOGGLE:
            return toggle_slot(s, location) == self.payload and _toggle_operand(n, self.payload)
        if k == RuleKind.WRONG_LITERAL:
            if n.kind != NodeKind.LITERAL or not location:
                return False
            if node_at(s, location[:-1]).kind == NodeKind.PARAM:
                return False
            if self.original and n.token != self.original:
                return False
            for dom in (INT_LITERALS, BOOL_LITERALS):
                if n.token in dom:
                    return self.payload in dom and self.payload != n.token
            return False
        return False

    def transform(self, s: Node, location: Sequence[int]) -> Node:
        """``t_rho`` applied at ``location``; identity where the matcher fails."""
        location = tuple(location)
        if not self.matches(s, location):
            return s
        n = node_at(s, location)
        k = self.kind
        if k == RuleKind.IDENTITY:
            return s
        if k in (RuleKind.VAR_MISUSE, RuleKind.WRONG_LITERAL, RuleKind.WRONG_BINARY_OP,
                 RuleKind.WRONG_BOOLEAN_OP, RuleKind.WRONG_COMPARISON_OP):
            return _rebuild(s, location, Node(n.kind, (), self.payload, n.span))
        if k == RuleKind.WRONG_ASSIGN_OP:
            stmt_loc = location[:-1]
            stmt = node_at(s, stmt_loc)
            kind = NodeKind.ASSIGN if self.payload == "=" else NodeKind.AUG_ASSIGN
            op = Node(NodeKind.OPERATOR, (), self.payload, n.span)
            new = Node(kind, (stmt.child(1), op, stmt.child(3)), None, stmt.span)
            return _rebuild(s, stmt_loc, new)
        if k == RuleKind.ARG_SWAP:
            i, j = _arg_pair(self.payload)
            kids = list(n.children)
            kids[i], kids[j] = kids[j], kids[i]
            return _rebuild(s, location, n.with_children(kids))
        if k == RuleKind.UNARY_NEG_TOGGLE:
            if n.kind == NodeKind.UNARY_OP:
                return _rebuild(s, location, n.child(2))
            op = Node(NodeKind.OPERATOR, (), self.payload, None)
            return _rebuild(s, location, Node(NodeKind.UNARY_OP, (op, n), None, n.span))
        raise NonInvertibleError(f"{k.value} is not a tree-local rule")

    def inverse(self) -> "RewriteRule":
        if not (self.kind.is_bug or self.kind == RuleKind.IDENTITY):
            raise NonInvertibleError(f"{self.kind.value} has no inverse")
        if self.kind in (RuleKind.ARG_SWAP, RuleKind.UNARY_NEG_TOGGLE, RuleKind.IDENTITY):
            return self
        return RewriteRule(self.kind, self.original, self.payload)


def _arg_pair(payload: str) -> tuple[int, int]:
    a, b = payload.split(",")
    return int(a), int(b)


@dataclass(frozen=True)
class PotentialRewrite:
    """A located rule instance ``<location, rule>``."""

    location: Location
    rule: RewriteRule

    @property
    def kind(self) -> RuleKind:
        return self.rule.kind

    @property
    def payload(self) -> str:
        return self.rule.payload

    @property
    def is_identity(self) -> bool:
        return self.rule.kind == RuleKind.IDENTITY

    def sort_key(self) -> tuple:
        return (self.location, self.kind.order, self.payload)

    def key(self) -> tuple[Location, str, str]:
        return (self.location, self.kind.value, self.payload)

    def to_json(self) -> dict:
        return {"location": list(self.location), "kind": self.kind.value, "payload": self.payload}

    @classmethod
    def from_json(cls, obj: dict) -> "PotentialRewrite":
        return cls(tuple(obj["location"]), RewriteRule(RuleKind(obj["kind"]), obj.get("payload", ""), obj.get("original", "")))

    def describe(self) -> str:
        if self.is_identity:
            return "NoBug"
        what = self.payload
        if self.rule.original:
            what = f"{self.rule.original} -> {self.payload}"
        return f"{self.kind.value}@{list(self.location)}: {what}"


IDENTITY = PotentialRewrite((), RewriteRule(RuleKind.IDENTITY))

__all__ = [
    "BOOLEAN_OPS", "BOOL_LITERALS", "BUG_KINDS", "IDENTITY", "INT_LITERALS", "LITERAL_DOMAIN",
    "NonInvertibleError", "OPERATOR_RULE", "PotentialRewrite", "RewriteRule", "RuleKind",
    "StaleRewriteError", "toggle_slot",
]
