"""Canonical printer: two-space indent, single spaces around binary operators."""
from __future__ import annotations

from dataclasses import dataclass

from .tree import Location, Node, NodeKind, SourceUnit

INDENT = "  "

_BINARY_PREC = {"or": 1, "and": 2, "+": 5, "-": 5, "*": 6, "/": 6, "//": 6, "%": 6}
_ATOM = 8


@dataclass(frozen=True)
class PrintedToken:
    """One emitted token; ``owner`` is the tree location of the leaf itself
    (``leaf=True``) or of the interior node that produced the keyword or
    punctuation."""

    text: str
    owner: Location
    leaf: bool
    line: int
    col: int


def precedence(n: Node) -> int:
    k = n.kind
    if k == NodeKind.BOOL_OP or k == NodeKind.BINARY_OP:
        return _BINARY_PREC[n.child(2).token]
    if k == NodeKind.COMPARE:
        return 4
    if k == NodeKind.UNARY_OP:
        return 3 if n.child(1).token == "not" else 7
    if k == NodeKind.LITERAL and n.token.startswith("-"):
        return 7
    return _ATOM


class _Emitter:
    def __init__(self) -> None:
        self.lines: list[tuple[int, list[str]]] = []
        self.tokens: list[PrintedToken] = []
        self._cur: list[str] | None = None
        self._col = 0
        self._glue_next = False

    def newline(self, indent: int) -> None:
        self._cur = []
        self.lines.append((indent, self._cur))
        self._col = len(INDENT) * indent
        self._glue_next = True

    def emit(self, text: str, owner: Location, leaf: bool, glue: bool = False, glue_next: bool = False) -> None:
        assert self._cur is not None
        if not (glue or self._glue_next):
            self._cur.append(" ")
            self._col += 1
        line = len(self.lines)
        self.tokens.append(PrintedToken(text, owner, leaf, line, self._col))
        self._cur.append(text)
        self._col += len(text.split("\n")[-1]) if "\n" in text else len(text)
        self._glue_next = glue_next

    def text(self) -> str:
        return "".join(INDENT * ind + "".join(parts) + "\n" for ind, parts in self.lines)


class _Printer:
    def __init__(self) -> None:
        self.out = _Emitter()

    def leaf(self, n: Node, loc: Location, glue: bool = False, glue_next: bool = False) -> None:
        self.out.emit(n.token, loc, True, glue, glue_next)

    def kw(self, text: str, loc: Location, glue: bool = False, glue_next: bool = False) -> None:
        self.out.emit(text, loc, False, glue, glue_next)

    # -- statements ------------------------------------------------------
    def function(self, fn: Node, loc: Location, indent: int) -> None:
        self.out.newline(indent)
        self.kw("def", loc)
        self.leaf(fn.child(1), loc + (1,))
        self.kw("(", loc, glue=True, glue_next=True)
        params = fn.children[1:-1]
        for j, p in enumerate(params, 2):
            if j > 2:
                self.kw(",", loc, glue=True)
            ploc = loc + (j,)
            self.leaf(p.child(1), ploc + (1,))
            if len(p.children) == 2:
                self.kw("=", ploc, glue=True, glue_next=True)
                self.leaf(p.child(2), ploc + (2,))
        self.kw(")", loc, glue=True)
        self.kw(":", loc, glue=True)
        self.block(fn.children[-1], loc + (len(fn.children),), indent + 1)

    def block(self, b: Node, loc: Location, indent: int) -> None:
        for i, s in enumerate(b.children, 1):
            self.statement(s, loc + (i,), indent)

    def statement(self, s: Node, loc: Location, indent: int) -> None:
        k = s.kind
        if k in (NodeKind.COMMENT, NodeKind.DOCSTRING):
            self.out.newline(indent)
            self.leaf(s, loc)
        elif k == NodeKind.IF:
            self.out.newline(indent)
            self.kw("if", loc)
            self.expr(s.child(1), loc + (1,), 1)
            self.kw(":", loc, glue=True)
            self.block(s.child(2), loc + (2,), indent + 1)
            if len(s.children) == 3:
                self.out.newline(indent)
                self.kw("else", loc)
                self.kw(":", loc, glue=True)
                self.block(s.child(3), loc + (3,), indent + 1)
        elif k == NodeKind.WHILE:
            self.out.newline(indent)
            self.kw("while", loc)
            self.expr(s.child(1), loc + (1,), 1)
            self.kw(":", loc, glue=True)
            self.block(s.child(2), loc + (2,), indent + 1)
        elif k in (NodeKind.ASSIGN, NodeKind.AUG_ASSIGN):
            self.out.newline(indent)
            self.expr(s.child(1), loc + (1,), 1)
            self.leaf(s.child(2), loc + (2,))
            self.expr(s.child(3), loc + (3,), 1)
        elif k == NodeKind.RETURN:
            self.out.newline(indent)
            self.kw("return", loc)
            for i, e in enumerate(s.children, 1):
                if i > 1:
                    self.kw(",", loc, glue=True)
                self.expr(e, loc + (i,), 1)
        elif k == NodeKind.EXPR_STMT:
            self.out.newline(indent)
            self.expr(s.child(1), loc + (1,), 1)
        else:
            raise ValueError(f"not a statement: {k.value}")

    # -- expressions -----------------------------------------------------
    def expr(self, e: Node, loc: Location, min_prec: int) -> None:
        parens = precedence(e) < min_prec
        if parens:
            self.kw("(", loc, glue_next=True)
        self._expr(e, loc)
        if parens:
            self.kw(")", loc, glue=True)

    def _expr(self, e: Node, loc: Location) -> None:
        k = e.kind
        if k in (NodeKind.NAME, NodeKind.LITERAL):
            self.leaf(e, loc)
        elif k == NodeKind.ATTRIBUTE:
            for i, part in enumerate(e.children, 1):
                if i > 1:
                    self.kw(".", loc, glue=True, glue_next=True)
                self.leaf(part, loc + (i,))
        elif k == NodeKind.CALL:
            self._expr(e.child(1), loc + (1,))
            self.kw("(", loc, glue=True, glue_next=True)
            for i, a in enumerate(e.children[1:], 2):
                if i > 2:
                    self.kw(",", loc, glue=True)
                self.expr(a, loc + (i,), 1)
            self.kw(")", loc, glue=True)
        elif k in (NodeKind.BINARY_OP, NodeKind.BOOL_OP, NodeKind.COMPARE):
            p = precedence(e)
            if k == NodeKind.COMPARE:
                lmin = rmin = p + 1
            else:
                lmin, rmin = p, p + 1
            self.expr(e.child(1), loc + (1,), lmin)
            self.leaf(e.child(2), loc + (2,))
            self.expr(e.child(3), loc + (3,), rmin)
        elif k == NodeKind.UNARY_OP:
            op, operand = e.child(1), e.child(2)
            if op.token == "not":
                self.leaf(op, loc + (1,))
                self.expr(operand, loc + (2,), 3)
            else:
                self.leaf(op, loc + (1,), glue_next=True)
                numeric = operand.kind == NodeKind.LITERAL and (operand.token[:1].isdigit() or operand.token[:1] in ".-")
                self.expr(operand, loc + (2,), _ATOM + 1 if numeric else 7)
        else:
            raise ValueError(f"not an expression: {k.value}")


def render(fn: Node) -> tuple[str, list[PrintedToken]]:
    """Print one function, returning the text and its token stream."""
    p = _Printer()
    p.function(fn, (), 0)
    return p.out.text(), p.out.tokens


def function_tokens(fn: Node) -> list[PrintedToken]:
    return render(fn)[1]


def to_source(x: Node | SourceUnit) -> str:
    """Canonical source text for a function, a statement subtree, or a unit."""
    if isinstance(x, SourceUnit):
        chunks = []
        pending_comments: list[str] = []
        for item in x.items:
            if item.kind == NodeKind.COMMENT:
                pending_comments.append(item.token + "\n")
            else:
                chunks.append("".join(pending_comments) + render(item)[0])
                pending_comments = []
        text = "\n".join(chunks)
        if pending_comments:
            text += ("\n" if chunks else "") + "".join(pending_comments)
        return text
    if x.kind == NodeKind.FUNCTION_DEF:
        return render(x)[0]
    p = _Printer()
    if x.kind == NodeKind.BLOCK:
        p.block(x, (), 0)
    elif x.kind in (NodeKind.ASSIGN, NodeKind.AUG_ASSIGN, NodeKind.IF, NodeKind.WHILE,
                    NodeKind.RETURN, NodeKind.EXPR_STMT, NodeKind.COMMENT, NodeKind.DOCSTRING):
        p.statement(x, (), 0)
    else:
        p.out.newline(0)
        p.expr(x, (), 1)
    return p.out.text().rstrip("\n")
