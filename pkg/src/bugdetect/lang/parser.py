"""Recursive-descent parser for the supported Python subset."""
from __future__ import annotations

import io
import keyword
import tokenize
from dataclasses import dataclass

from .tree import (
    ASSIGN_OPS,
    Node,
    NodeKind,
    SourceUnit,
    TARGET_KINDS,
)

_AUG_OPS = frozenset(ASSIGN_OPS[1:])
_COMPARE_OPS = frozenset({"<", "<=", ">", ">=", "==", "!="})
_UNSUPPORTED_KEYWORDS = frozenset(keyword.kwlist) - {
    "def", "if", "else", "elif", "while", "return", "and", "or", "not", "in", "is",
    "True", "False", "None",
}


class ParseError(SyntaxError):
    """Syntax error (or unsupported construct) with 1-based line and 0-based column."""

    def __init__(self, message: str, line: int, col: int, unsupported: bool = False):
        self.line = line
        self.col = col
        self.unsupported = unsupported
        super().__init__(f"{message} at line {line}, column {col}")


@dataclass
class _Tok:
    type: int
    string: str
    start: tuple[int, int]
    end: tuple[int, int]
    offset: int
    end_offset: int


def _tokens(text: str) -> list[_Tok]:
    line_starts = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            line_starts.append(i + 1)

    def off(pos: tuple[int, int]) -> int:
        row, col = pos
        if row - 1 >= len(line_starts):
            return len(text)
        return line_starts[row - 1] + col

    out = []
    try:
        for t in tokenize.generate_tokens(io.StringIO(text).readline):
            if t.type == tokenize.ERRORTOKEN and t.string.strip() == "":
                continue
            if t.type == tokenize.ERRORTOKEN:
                raise ParseError(f"invalid token {t.string!r}", t.start[0], t.start[1])
            out.append(_Tok(t.type, t.string, t.start, t.end, off(t.start), off(t.end)))
    except tokenize.TokenError as e:
        # keep the tokens read so far; the parser usually fails earlier at a
        # more precise position, otherwise it reports this message
        msg, (row, col) = e.args
        out.append(_Tok(tokenize.ERRORTOKEN, msg, (row, col), (row, col), off((row, col)), off((row, col))))
    except IndentationError as e:
        raise ParseError(e.msg, e.lineno or 0, (e.offset or 1) - 1) from None
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokens(text)
        self.i = 0

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, message: str, tok: _Tok | None = None, unsupported: bool = False):
        tok = tok or self.tok
        if tok.type == tokenize.ERRORTOKEN:
            return ParseError(tok.string, tok.start[0], tok.start[1])
        return ParseError(message, tok.start[0], tok.start[1], unsupported)

    def unsupported(self, what: str, tok: _Tok | None = None):
        return self.error(f"unsupported construct: {what}", tok, unsupported=True)

    def is_op(self, s: str) -> bool:
        return self.tok.type == tokenize.OP and self.tok.string == s

    def is_kw(self, s: str) -> bool:
        return self.tok.type == tokenize.NAME and self.tok.string == s

    def expect_op(self, s: str) -> _Tok:
        if not self.is_op(s):
            raise self.error(f"expected {s!r}, found {self.tok.string!r}")
        return self.advance()

    def expect_kw(self, s: str) -> _Tok:
        if not self.is_kw(s):
            raise self.error(f"expected {s!r}, found {self.tok.string!r}")
        return self.advance()

    def expect_name(self) -> _Tok:
        t = self.tok
        if t.type != tokenize.NAME:
            raise self.error(f"expected a name, found {t.string!r}")
        if keyword.iskeyword(t.string):
            if t.string in _UNSUPPORTED_KEYWORDS:
                raise self.unsupported(repr(t.string))
            raise self.error(f"unexpected keyword {t.string!r}")
        return self.advance()

    def skip_blank(self) -> list[Node]:
        """Skip NL/NEWLINE tokens, returning any comments seen on the way."""
        comments = []
        while self.tok.type in (tokenize.NL, tokenize.NEWLINE, tokenize.COMMENT):
            t = self.advance()
            if t.type == tokenize.COMMENT:
                comments.append(Node(NodeKind.COMMENT, (), t.string, (t.offset, t.end_offset)))
        return comments

    # -- module ------------------------------------------------------------
    def parse_unit(self) -> SourceUnit:
        items: list[Node] = []
        while True:
            items.extend(self.skip_blank())
            t = self.tok
            if t.type == tokenize.ENDMARKER:
                break
            if self.is_kw("def"):
                items.append(self.funcdef())
            elif t.type == tokenize.INDENT:
                raise self.error("unexpected indent")
            elif t.type == tokenize.NAME and t.string in _UNSUPPORTED_KEYWORDS:
                raise self.unsupported(repr(t.string))
            elif self.is_op("@"):
                raise self.unsupported("decorator")
            else:
                raise self.unsupported("module-level statement")
        if not any(n.kind == NodeKind.FUNCTION_DEF for n in items):
            raise ParseError("expected at least one function definition", 1, 0)
        return SourceUnit(self.text, tuple(items))

    def funcdef(self) -> Node:
        start = self.expect_kw("def")
        name_tok = self.expect_name()
        name = Node(NodeKind.NAME, (), name_tok.string, (name_tok.offset, name_tok.end_offset))
        self.expect_op("(")
        params = []
        seen = set()
        while not self.is_op(")"):
            if self.is_op("*") or self.is_op("**") or self.is_op("/"):
                raise self.unsupported("star or positional-only parameter")
            pt = self.expect_name()
            if pt.string in seen:
                raise self.error(f"duplicate parameter {pt.string!r}", pt)
            seen.add(pt.string)
            pname = Node(NodeKind.NAME, (), pt.string, (pt.offset, pt.end_offset))
            if self.is_op(":"):
                raise self.unsupported("type annotation")
            if self.is_op("="):
                self.advance()
                default = self.literal_atom()
                params.append(Node(NodeKind.PARAM, (pname, default), None, (pt.offset, default.span[1])))
            else:
                if params and len(params[-1].children) == 2:
                    raise self.error("non-default parameter follows default parameter", pt)
                params.append(Node(NodeKind.PARAM, (pname,), None, (pt.offset, pt.end_offset)))
            if not self.is_op(")"):
                self.expect_op(",")
        self.expect_op(")")
        if self.is_op("->"):
            raise self.unsupported("return annotation")
        self.expect_op(":")
        block = self.block(function_body=True)
        return Node(NodeKind.FUNCTION_DEF, (name, *params, block), None, (start.offset, block.span[1]))

    def literal_atom(self) -> Node:
        t = self.tok
        if self.is_op("-") and self.peek().type == tokenize.NUMBER:
            self.advance()
            num = self.advance()
            return Node(NodeKind.LITERAL, (), "-" + num.string, (t.offset, num.end_offset))
        if t.type in (tokenize.NUMBER, tokenize.STRING) or (t.type == tokenize.NAME and t.string in ("True", "False", "None")):
            self.advance()
            if t.type == tokenize.STRING and self.tok.type == tokenize.STRING:
                raise self.unsupported("implicit string concatenation")
            return Node(NodeKind.LITERAL, (), t.string, (t.offset, t.end_offset))
        raise self.error(f"expected a literal, found {t.string!r}")

    # -- statements --------------------------------------------------------
    def block(self, function_body: bool = False) -> Node:
        stmts: list[Node] = []
        if self.tok.type == tokenize.COMMENT:
            t = self.advance()
            stmts.append(Node(NodeKind.COMMENT, (), t.string, (t.offset, t.end_offset)))
        if self.tok.type != tokenize.NEWLINE:
            # single-line suite: `if x: return y`
            if not stmts:
                stmts.extend(self.simple_statement())
                return self._make_block(stmts, function_body)
            raise self.error("expected newline")
        self.advance()
        stmts.extend(self.skip_blank())
        if self.tok.type != tokenize.INDENT:
            raise self.error("expected an indented block")
        self.advance()
        while True:
            stmts.extend(self.skip_blank())
            if self.tok.type == tokenize.DEDENT:
                self.advance()
                break
            if self.tok.type == tokenize.ENDMARKER:
                break
            stmts.extend(self.statement())
        return self._make_block(stmts, function_body)

    def _make_block(self, stmts: list[Node], function_body: bool) -> Node:
        if not any(s.kind != NodeKind.COMMENT for s in stmts):
            raise self.error("block has no statements")
        if function_body:
            for i, s in enumerate(stmts):
                if s.kind == NodeKind.COMMENT:
                    continue
                if s.kind == NodeKind.EXPR_STMT and s.children[0].kind == NodeKind.LITERAL and _is_string(s.children[0].token):
                    lit = s.children[0]
                    stmts[i] = Node(NodeKind.DOCSTRING, (), lit.token, lit.span)
                break
        span = (stmts[0].span[0], stmts[-1].span[1])
        return Node(NodeKind.BLOCK, tuple(stmts), None, span)

    def statement(self) -> list[Node]:
        t = self.tok
        if self.is_kw("if"):
            return [self.if_stmt()]
        if self.is_kw("while"):
            return [self.while_stmt()]
        if self.is_kw("def"):
            raise self.unsupported("nested function")
        if t.type == tokenize.INDENT:
            raise self.error("unexpected indent")
        return self.simple_statement()

    def if_stmt(self) -> Node:
        start = self.advance()  # 'if' or 'elif'
        test = self.expr()
        self.expect_op(":")
        body = self.block()
        kids = [test, body]
        end = body.span[1]
        if self.is_kw("elif"):
            nested = self.if_stmt()
            els = Node(NodeKind.BLOCK, (nested,), None, nested.span)
            kids.append(els)
            end = els.span[1]
        elif self.is_kw("else"):
            self.advance()
            self.expect_op(":")
            els = self.block()
            kids.append(els)
            end = els.span[1]
        return Node(NodeKind.IF, tuple(kids), None, (start.offset, end))

    def while_stmt(self) -> Node:
        start = self.advance()
        test = self.expr()
        self.expect_op(":")
        body = self.block()
        if self.is_kw("else"):
            raise self.unsupported("while-else")
        return Node(NodeKind.WHILE, (test, body), None, (start.offset, body.span[1]))

    def simple_statement(self) -> list[Node]:
        t = self.tok
        if t.type == tokenize.NAME and t.string in _UNSUPPORTED_KEYWORDS:
            raise self.unsupported(repr(t.string))
        if self.is_kw("else") or self.is_kw("elif"):
            raise self.error(f"unexpected {t.string!r}")
        if self.is_kw("return"):
            self.advance()
            if self.tok.type in (tokenize.NEWLINE, tokenize.COMMENT, tokenize.ENDMARKER):
                raise self.unsupported("return without a value")
            values = [self.expr()]
            while self.is_op(","):
                self.advance()
                values.append(self.expr())
            stmt = Node(NodeKind.RETURN, tuple(values), None, (t.offset, values[-1].span[1]))
        else:
            first = self.expr()
            if self.is_op("="):
                op_tok = self.advance()
                stmt = self._assignment(NodeKind.ASSIGN, first, op_tok)
            elif self.tok.type == tokenize.OP and self.tok.string in _AUG_OPS:
                op_tok = self.advance()
                stmt = self._assignment(NodeKind.AUG_ASSIGN, first, op_tok)
            elif self.tok.type == tokenize.OP and self.tok.string.endswith("=") and self.tok.string not in ("==", "<=", ">=", "!="):
                raise self.unsupported(f"operator {self.tok.string!r}")
            elif self.is_op(","):
                raise self.unsupported("tuple")
            else:
                stmt = Node(NodeKind.EXPR_STMT, (first,), None, first.span)
        out = [stmt]
        if self.is_op(";"):
            raise self.unsupported("semicolon")
        if self.tok.type == tokenize.COMMENT:
            c = self.advance()
            out.append(Node(NodeKind.COMMENT, (), c.string, (c.offset, c.end_offset)))
        if self.tok.type == tokenize.NEWLINE:
            self.advance()
        elif self.tok.type not in (tokenize.ENDMARKER, tokenize.DEDENT):
            raise self.error(f"expected end of statement, found {self.tok.string!r}")
        return out

    def _assignment(self, kind: NodeKind, target: Node, op_tok: _Tok) -> Node:
        if target.kind not in TARGET_KINDS:
            raise self.error("invalid assignment target", op_tok)
        value = self.expr()
        if self.is_op("=") or (self.tok.type == tokenize.OP and self.tok.string in _AUG_OPS):
            raise self.unsupported("chained assignment")
        op = Node(NodeKind.OPERATOR, (), op_tok.string, (op_tok.offset, op_tok.end_offset))
        return Node(kind, (target, op, value), None, (target.span[0], value.span[1]))

    # -- expressions ---------------------------------------------------------
    def expr(self) -> Node:
        if self.is_kw("lambda"):
            raise self.unsupported("lambda")
        node = self.or_test()
        if self.is_kw("if"):
            raise self.unsupported("conditional expression")
        return node

    def _binary(self, kind: NodeKind, left: Node, op_tok: _Tok, right: Node, op: str | None = None) -> Node:
        opn = Node(NodeKind.OPERATOR, (), op or op_tok.string, (op_tok.offset, op_tok.end_offset))
        return Node(kind, (left, opn, right), None, (left.span[0], right.span[1]))

    def or_test(self) -> Node:
        left = self.and_test()
        while self.is_kw("or"):
            op = self.advance()
            left = self._binary(NodeKind.BOOL_OP, left, op, self.and_test())
        return left

    def and_test(self) -> Node:
        left = self.not_test()
        while self.is_kw("and"):
            op = self.advance()
            left = self._binary(NodeKind.BOOL_OP, left, op, self.not_test())
        return left

    def not_test(self) -> Node:
        if self.is_kw("not"):
            op = self.advance()
            operand = self.not_test()
            opn = Node(NodeKind.OPERATOR, (), "not", (op.offset, op.end_offset))
            return Node(NodeKind.UNARY_OP, (opn, operand), None, (op.offset, operand.span[1]))
        return self.comparison()

    def _compare_op(self) -> tuple[_Tok, str] | None:
        t = self.tok
        if t.type == tokenize.OP and t.string in _COMPARE_OPS:
            self.advance()
            return t, t.string
        if self.is_kw("in"):
            self.advance()
            return t, "in"
        if self.is_kw("not") and self.peek().type == tokenize.NAME and self.peek().string == "in":
            self.advance()
            self.advance()
            return t, "not in"
        if self.is_kw("is"):
            self.advance()
            if self.is_kw("not"):
                self.advance()
                return t, "is not"
            return t, "is"
        return None

    def comparison(self) -> Node:
        left = self.arith()
        found = self._compare_op()
        if found is None:
            return left
        op_tok, op = found
        right = self.arith()
        if self._compare_op() is not None:
            raise self.unsupported("chained comparison", op_tok)
        return self._binary(NodeKind.COMPARE, left, op_tok, right, op)

    def arith(self) -> Node:
        left = self.term()
        while self.tok.type == tokenize.OP and self.tok.string in ("+", "-"):
            op = self.advance()
            left = self._binary(NodeKind.BINARY_OP, left, op, self.term())
        return left

    def term(self) -> Node:
        left = self.factor()
        while self.tok.type == tokenize.OP and self.tok.string in ("*", "/", "//", "%"):
            op = self.advance()
            left = self._binary(NodeKind.BINARY_OP, left, op, self.factor())
        if self.tok.type == tokenize.OP and self.tok.string in ("**", "@", "<<", ">>", "&", "|", "^"):
            raise self.unsupported(f"operator {self.tok.string!r}")
        return left

    def factor(self) -> Node:
        if self.is_op("-"):
            if self.peek().type == tokenize.NUMBER:
                return self.literal_atom()
            op = self.advance()
            operand = self.factor()
            opn = Node(NodeKind.OPERATOR, (), "-", (op.offset, op.end_offset))
            return Node(NodeKind.UNARY_OP, (opn, operand), None, (op.offset, operand.span[1]))
        if self.is_op("+") or self.is_op("~"):
            raise self.unsupported(f"unary {self.tok.string!r}")
        return self.atom()

    def atom(self) -> Node:
        t = self.tok
        if self.is_op("("):
            self.advance()
            inner = self.expr()
            if self.is_op(","):
                raise self.unsupported("tuple")
            self.expect_op(")")
            return self._postfix_check(inner)
        if self.is_op("[") or self.is_op("{"):
            raise self.unsupported("container display")
        if t.type in (tokenize.NUMBER, tokenize.STRING) or (t.type == tokenize.NAME and t.string in ("True", "False", "None")):
            if t.type == tokenize.STRING and set(_string_prefix(t.string)) & {"f", "b"}:
                raise self.unsupported("f-string or bytes literal")
            return self._postfix_check(self.literal_atom())
        if t.type == tokenize.NAME:
            name_tok = self.expect_name()
            parts = [Node(NodeKind.NAME, (), name_tok.string, (name_tok.offset, name_tok.end_offset))]
            while self.is_op("."):
                self.advance()
                m = self.expect_name()
                parts.append(Node(NodeKind.NAME, (), m.string, (m.offset, m.end_offset)))
            head = parts[0] if len(parts) == 1 else Node(
                NodeKind.ATTRIBUTE, tuple(parts), None, (parts[0].span[0], parts[-1].span[1])
            )
            if self.is_op("("):
                self.advance()
                args = []
                while not self.is_op(")"):
                    if self.is_op("*") or self.is_op("**"):
                        raise self.unsupported("star argument")
                    if self.tok.type == tokenize.NAME and self.peek().type == tokenize.OP and self.peek().string == "=":
                        raise self.unsupported("keyword argument")
                    args.append(self.expr())
                    if not self.is_op(")"):
                        self.expect_op(",")
                close = self.expect_op(")")
                head = Node(NodeKind.CALL, (head, *args), None, (head.span[0], close.end_offset))
            return self._postfix_check(head)
        if t.type in (tokenize.NEWLINE, tokenize.ENDMARKER):
            raise self.error("unexpected end of line")
        raise self.error(f"unexpected token {t.string!r}")

    def _postfix_check(self, node: Node) -> Node:
        if self.is_op("["):
            raise self.unsupported("subscript")
        if self.is_op("(") or self.is_op("."):
            raise self.unsupported("call or attribute on a non-name expression")
        return node


def _is_string(lexeme: str) -> bool:
    return lexeme.lstrip("rRuUbBfF")[:1] in ("'", '"')


def _string_prefix(lexeme: str) -> str:
    return lexeme[: len(lexeme) - len(lexeme.lstrip("rRuUbBfF"))].lower()


def parse(text: str) -> SourceUnit:
    """Parse ``text`` into a :class:`SourceUnit`.

    Raises :class:`ParseError` with line/column on malformed input or on
    constructs outside the supported subset.
    """
    return _Parser(text).parse_unit()


def parse_function(text: str) -> Node:
    unit = parse(text)
    fns = unit.functions
    if len(fns) != 1:
        raise ValueError(f"expected one function, found {len(fns)}")
    return fns[0]
