"""Immutable syntax trees with 1-based path locations.

Child layout per node kind (1-based):

    FunctionDef  Name(function name), Param*, Block
    Param        Name [, Literal default]
    Block        stmt+ (a Docstring may follow leading Comments in a function body)
    Assign       Name|Attribute target, Operator "=", expr
    AugAssign    Name|Attribute target, Operator "+=" ..., expr
    If           expr test, Block then [, Block else]
    While        expr test, Block body
    Return       expr+
    ExprStmt     expr
    Call         Name|Attribute callee, expr*
    Attribute    Name root, Name member+
    BinaryOp     expr, Operator, expr      (also BoolOp, Compare)
    UnaryOp      Operator "not"|"-", expr

Leaves (Name, Literal, Operator, Docstring, Comment) carry a lexeme and no
children; interior nodes carry no lexeme.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence

Location = tuple[int, ...]


class NodeKind(str, Enum):
    FUNCTION_DEF = "FunctionDef"
    PARAM = "Param"
    BLOCK = "Block"
    ASSIGN = "Assign"
    AUG_ASSIGN = "AugAssign"
    IF = "If"
    WHILE = "While"
    RETURN = "Return"
    EXPR_STMT = "ExprStmt"
    CALL = "Call"
    ATTRIBUTE = "Attribute"
    BINARY_OP = "BinaryOp"
    BOOL_OP = "BoolOp"
    COMPARE = "Compare"
    UNARY_OP = "UnaryOp"
    NAME = "Name"
    LITERAL = "Literal"
    OPERATOR = "Operator"
    DOCSTRING = "Docstring"
    COMMENT = "Comment"


LEAF_KINDS = frozenset(
    {NodeKind.NAME, NodeKind.LITERAL, NodeKind.OPERATOR, NodeKind.DOCSTRING, NodeKind.COMMENT}
)
EXPR_KINDS = frozenset(
    {
        NodeKind.CALL,
        NodeKind.ATTRIBUTE,
        NodeKind.BINARY_OP,
        NodeKind.BOOL_OP,
        NodeKind.COMPARE,
        NodeKind.UNARY_OP,
        NodeKind.NAME,
        NodeKind.LITERAL,
    }
)
STMT_KINDS = frozenset(
    {
        NodeKind.ASSIGN,
        NodeKind.AUG_ASSIGN,
        NodeKind.IF,
        NodeKind.WHILE,
        NodeKind.RETURN,
        NodeKind.EXPR_STMT,
        NodeKind.COMMENT,
    }
)
TARGET_KINDS = frozenset({NodeKind.NAME, NodeKind.ATTRIBUTE})

ARITHMETIC_OPS = ("+", "-", "*", "/", "//", "%")
BOOLEAN_OPS = ("and", "or")
COMPARISON_OPS = ("<", "<=", ">", ">=", "==", "!=")
MEMBERSHIP_OPS = ("in", "not in")
IDENTITY_OPS = ("is", "is not")
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=", "//=", "%=")
UNARY_OPS = ("not", "-")


class InvalidLocationError(LookupError):
    """A location path does not address a node; ``index`` is the first bad step."""

    def __init__(self, location: Sequence[int], position: int, index: int):
        self.location = tuple(location)
        self.position = position
        self.index = index
        super().__init__(f"invalid location {list(location)}: child index {index} out of range at step {position + 1}")


class GrammarPositionError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    kind: NodeKind
    children: tuple["Node", ...] = ()
    token: str | None = None
    span: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.kind in LEAF_KINDS:
            if self.token is None or self.children:
                raise ValueError(f"{self.kind.value} leaf needs a lexeme and no children")
        elif self.token is not None:
            raise ValueError(f"interior {self.kind.value} node cannot carry a lexeme")

    @property
    def is_leaf(self) -> bool:
        return self.kind in LEAF_KINDS

    def child(self, i: int) -> "Node":
        return self.children[i - 1]

    def with_children(self, children: Sequence["Node"]) -> "Node":
        return Node(self.kind, tuple(children), None, self.span)

    def walk(self, prefix: Location = ()) -> Iterator[tuple[Location, "Node"]]:
        """Pre-order traversal yielding (location, node); equals lexicographic path order."""
        yield prefix, self
        for i, c in enumerate(self.children, 1):
            yield from c.walk(prefix + (i,))

    def leaves(self) -> Iterator["Node"]:
        for _, n in self.walk():
            if n.is_leaf:
                yield n

    def size(self) -> int:
        return sum(1 for _ in self.walk())

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "children": [c.to_json() for c in self.children],
            "token": self.token,
            "span": list(self.span) if self.span is not None else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Node":
        span = obj.get("span")
        return cls(
            NodeKind(obj["kind"]),
            tuple(cls.from_json(c) for c in obj.get("children", ())),
            obj.get("token"),
            tuple(span) if span is not None else None,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))


def leaf(kind: NodeKind, token: str) -> Node:
    return Node(kind, (), token)


def node(kind: NodeKind, *children: Node) -> Node:
    return Node(kind, tuple(children))


def node_at(s: Node, location: Sequence[int]) -> Node:
    cur = s
    for pos, i in enumerate(location):
        if i < 1 or i > len(cur.children):
            raise InvalidLocationError(location, pos, i)
        cur = cur.children[i - 1]
    return cur


def parent_of(s: Node, location: Sequence[int]) -> tuple[Node, int] | None:
    if not location:
        return None
    return node_at(s, location[:-1]), location[-1]


def operator_class(parent_kind: NodeKind, op: str) -> tuple[str, ...] | None:
    """The compatibility class of ``op`` when it is the operator of ``parent_kind``."""
    if parent_kind == NodeKind.BINARY_OP:
        return ARITHMETIC_OPS if op in ARITHMETIC_OPS else None
    if parent_kind == NodeKind.BOOL_OP:
        return BOOLEAN_OPS if op in BOOLEAN_OPS else None
    if parent_kind == NodeKind.COMPARE:
        for cls in (COMPARISON_OPS, MEMBERSHIP_OPS, IDENTITY_OPS):
            if op in cls:
                return cls
        return None
    if parent_kind == NodeKind.ASSIGN:
        return ASSIGN_OPS if op == "=" else None
    if parent_kind == NodeKind.AUG_ASSIGN:
        return ASSIGN_OPS if op in ASSIGN_OPS[1:] else None
    if parent_kind == NodeKind.UNARY_OP:
        return UNARY_OPS if op in UNARY_OPS else None
    return None


def allowed_child(parent: Node, index: int, child: Node) -> bool:
    """Whether ``child`` may sit at 1-based slot ``index`` of ``parent``."""
    k, n, ck = parent.kind, len(parent.children), child.kind
    if k == NodeKind.FUNCTION_DEF:
        if index == 1:
            return ck == NodeKind.NAME
        if index == n:
            return ck == NodeKind.BLOCK
        return ck == NodeKind.PARAM
    if k == NodeKind.PARAM:
        return ck == NodeKind.NAME if index == 1 else ck == NodeKind.LITERAL
    if k == NodeKind.BLOCK:
        if ck == NodeKind.DOCSTRING:
            return all(c.kind == NodeKind.COMMENT for c in parent.children[: index - 1])
        return ck in STMT_KINDS
    if k in (NodeKind.ASSIGN, NodeKind.AUG_ASSIGN):
        if index == 1:
            return ck in TARGET_KINDS
        if index == 2:
            return ck == NodeKind.OPERATOR and operator_class(k, child.token) is not None
        return ck in EXPR_KINDS
    if k == NodeKind.IF:
        return ck in EXPR_KINDS if index == 1 else ck == NodeKind.BLOCK
    if k == NodeKind.WHILE:
        return ck in EXPR_KINDS if index == 1 else ck == NodeKind.BLOCK
    if k in (NodeKind.RETURN, NodeKind.EXPR_STMT):
        return ck in EXPR_KINDS
    if k == NodeKind.CALL:
        return ck in TARGET_KINDS if index == 1 else ck in EXPR_KINDS
    if k == NodeKind.ATTRIBUTE:
        return ck == NodeKind.NAME
    if k in (NodeKind.BINARY_OP, NodeKind.BOOL_OP, NodeKind.COMPARE):
        if index == 2:
            return ck == NodeKind.OPERATOR and operator_class(k, child.token) is not None
        return ck in EXPR_KINDS
    if k == NodeKind.UNARY_OP:
        if index == 1:
            return ck == NodeKind.OPERATOR and operator_class(k, child.token) is not None
        return ck in EXPR_KINDS
    return False


def replace_at(s: Node, location: Sequence[int], t: Node) -> Node:
    """Return ``s[location -> t]`` as a new tree; ``s`` is left untouched."""
    location = tuple(location)
    node_at(s, location)  # raises on invalid paths
    if not location:
        return t
    parent = node_at(s, location[:-1])
    if not allowed_child(parent, location[-1], t):
        raise GrammarPositionError(
            f"{t.kind.value} is not allowed as child {location[-1]} of {parent.kind.value}"
        )
    return _rebuild(s, location, t)


def _rebuild(s: Node, location: Location, t: Node) -> Node:
    if not location:
        return t
    i = location[0]
    kids = list(s.children)
    kids[i - 1] = _rebuild(kids[i - 1], location[1:], t)
    return s.with_children(kids)


@dataclass(frozen=True)
class SourceUnit:
    """A parsed file: top-level functions interleaved with module-level comments."""

    text: str
    items: tuple[Node, ...]

    @property
    def functions(self) -> list[Node]:
        return [n for n in self.items if n.kind == NodeKind.FUNCTION_DEF]

    def function_names(self) -> list[str]:
        return [f.child(1).token for f in self.functions]

    def replace_function(self, index: int, fn: Node) -> "SourceUnit":
        items = list(self.items)
        positions = [i for i, n in enumerate(items) if n.kind == NodeKind.FUNCTION_DEF]
        items[positions[index]] = fn
        return SourceUnit(self.text, tuple(items))

    def to_json(self) -> dict:
        return {"items": [n.to_json() for n in self.items]}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SourceUnit) and self.items == other.items

    def __hash__(self) -> int:
        return hash(self.items)
