from __future__ import annotations

import random

import pytest

from bugdetect.eval.synthetic import idiom_corpus, random_function_source
from bugdetect.lang import (
    GrammarPositionError,
    InvalidLocationError,
    Node,
    NodeKind,
    NotANameLocationError,
    ParseError,
    function_tokens,
    in_scope_before,
    leaf,
    node,
    node_at,
    parse,
    parse_function,
    replace_at,
    resolve_function,
    resolve_symbols,
    to_source,
)
from conftest import L, SNIPPET


def names(symbols):
    return {s.name for s in symbols}


def test_minimal_function():
    fn = parse_function("def f(a):\n  return a")
    assert fn.kind == NodeKind.FUNCTION_DEF
    assert [c.kind for c in fn.children] == [NodeKind.NAME, NodeKind.PARAM, NodeKind.BLOCK]
    body = fn.child(3)
    assert [c.kind for c in body.children] == [NodeKind.RETURN]


def test_snippet_parses(snippet_fn):
    assert snippet_fn.child(1).token == "foo"
    assert len(snippet_fn.children) == 5


def test_syntax_error_position():
    with pytest.raises(ParseError) as err:
        parse("def f(:")
    assert (err.value.line, err.value.col) == (1, 6)


@pytest.mark.parametrize("text", [
    "def f(x):\n  return x[0]\n",
    "def f(x):\n  return [x]\n",
    "class A:\n  pass\n",
    "import os\n",
    "def f(x):\n  for y in x:\n    pass\n",
])
def test_unsupported_constructs_rejected(text):
    with pytest.raises(ParseError) as err:
        parse(text)
    assert err.value.line >= 1


def test_leaf_and_interior_lexemes(snippet_fn):
    for _, n in snippet_fn.walk():
        if n.is_leaf:
            assert n.token is not None and not n.children
        else:
            assert n.token is None
    with pytest.raises(ValueError):
        Node(NodeKind.NAME, (), None)
    with pytest.raises(ValueError):
        Node(NodeKind.RETURN, (), "x")


def test_node_at(snippet_fn):
    assert node_at(snippet_fn, ()) is snippet_fn
    assert node_at(snippet_fn, (2, 1)) is snippet_fn.children[1].children[0]
    assert node_at(snippet_fn, L[1]).token == "a"
    assert node_at(snippet_fn, L[12]).token == "0"
    with pytest.raises(InvalidLocationError):
        node_at(snippet_fn, L[1] + (1,))
    with pytest.raises(InvalidLocationError):
        node_at(snippet_fn, (9,))
    with pytest.raises(InvalidLocationError):
        node_at(snippet_fn, (0,))


def test_replace_literal(snippet_fn):
    out = replace_at(snippet_fn, L[12], leaf(NodeKind.LITERAL, "1"))
    assert to_source(out).splitlines()[3] == "  c_is_neg = c < 1"
    assert node_at(snippet_fn, L[12]).token == "0"  # input untouched


def test_identity_replacement_everywhere(snippet_fn):
    for loc, n in snippet_fn.walk():
        assert replace_at(snippet_fn, loc, n) == snippet_fn


# Slots that accept any expression, from the subset grammar.
def expression_slot(parent: Node, index: int) -> bool:
    k = parent.kind
    if k in (NodeKind.IF, NodeKind.WHILE):
        return index == 1
    if k in (NodeKind.RETURN, NodeKind.EXPR_STMT):
        return True
    if k in (NodeKind.ASSIGN, NodeKind.AUG_ASSIGN):
        return index == 3
    if k == NodeKind.CALL:
        return index >= 2
    if k in (NodeKind.BINARY_OP, NodeKind.BOOL_OP, NodeKind.COMPARE):
        return index in (1, 3)
    if k == NodeKind.UNARY_OP:
        return index == 2
    return False


EXPRESSIONS = {
    NodeKind.NAME, NodeKind.LITERAL, NodeKind.CALL, NodeKind.ATTRIBUTE, NodeKind.BINARY_OP,
    NodeKind.BOOL_OP, NodeKind.COMPARE, NodeKind.UNARY_OP,
}


def test_grammar_kind_pairs():
    fn = parse_function(SNIPPET)
    extra = parse_function("def g(x):\n  '''doc'''\n  # note\n  while not x.y:\n    -x\n  return -g(x) * 2\n")
    samples = {}
    for tree in (fn, extra):
        for _, n in tree.walk():
            samples.setdefault(n.kind, n)
    assert EXPRESSIONS <= set(samples)
    checked = 0
    for tree in (fn, extra):
        for loc, _ in tree.walk():
            if not loc:
                continue
            parent = node_at(tree, loc[:-1])
            if not expression_slot(parent, loc[-1]):
                continue
            for kind, t in samples.items():
                checked += 1
                if kind in EXPRESSIONS:
                    replace_at(tree, loc, t)
                else:
                    with pytest.raises(GrammarPositionError):
                        replace_at(tree, loc, t)
    assert checked > 100


def test_name_for_binary_op(snippet_fn):
    binop = node(NodeKind.BINARY_OP, leaf(NodeKind.NAME, "a"), leaf(NodeKind.OPERATOR, "+"), leaf(NodeKind.NAME, "b"))
    out = replace_at(snippet_fn, L[10], binop)
    assert "c_is_neg = a + b < 0" in to_source(out)
    with pytest.raises(GrammarPositionError):
        replace_at(snippet_fn, L[4], binop)  # assignment target


def test_round_trip_snippet(snippet_fn):
    text = to_source(snippet_fn)
    assert text == SNIPPET
    assert parse_function(text) == snippet_fn


def test_round_trip_generated_programs():
    rng = random.Random(7)
    for _ in range(300):
        src = random_function_source(rng)
        once = parse(src)
        assert parse(to_source(once)) == once
    for u in idiom_corpus(100, 3):
        assert parse(to_source(u)) == u


def test_trivia_kept():
    text = "def f(x):\n  '''Doc.'''\n  # lead\n  y = x\n  # trail\n  return y\n"
    assert to_source(parse(text)) == text


def test_printer_token_owners(snippet_fn):
    toks = function_tokens(snippet_fn)
    leaves = [t for t in toks if t.leaf]
    assert [t.text for t in leaves][:6] == ["foo", "a", "b", "c", "0", "a"]
    for t in leaves:
        assert node_at(snippet_fn, t.owner).token == t.text


def test_symbol_occurrences(snippet_fn):
    tbl = resolve_function(snippet_fn)
    c = tbl.by_name("c")
    occ = set(tbl.occurrences_of(c))
    uses = {L[i] for i in (4, 8, 10, 18, 19, 22)}
    assert uses <= occ
    extra = occ - uses
    assert len(extra) == 1 and tbl.context[extra.pop()] == "param"


def test_two_locals_two_symbols():
    tbl = resolve_function(parse_function("def f():\n  x = 1\n  y = x\n  return y\n"))
    local = tbl.local_symbols()
    assert names(local) == {"x", "y"} and len(local) == 2


def test_single_scope_parameter():
    fn = parse_function("def f(a):\n  a = a + 1\n  return a\n")
    tbl = resolve_function(fn)
    syms = {tbl.occurrences[loc] for loc, n in fn.walk() if n.kind == NodeKind.NAME and n.token == "a"}
    assert len(syms) == 1


def test_every_name_resolved():
    rng = random.Random(11)
    for _ in range(100):
        unit = parse(random_function_source(rng))
        for fn, tbl in zip(unit.functions, resolve_symbols(unit)):
            for loc, n in fn.walk():
                if n.kind != NodeKind.NAME or loc == (1,):
                    continue
                parent = node_at(fn, loc[:-1])
                if parent.kind == NodeKind.ATTRIBUTE:
                    # a chain is one occurrence of its root, held by the Attribute node
                    assert loc[:-1] in tbl.occurrences
                    assert loc not in tbl.occurrences
                    if loc[-1] == 1:
                        assert tbl.occurrences[loc[:-1]].name == n.token
                else:
                    assert loc in tbl.occurrences


def test_in_scope_before(snippet_fn):
    tbl = resolve_function(snippet_fn)
    assert names(in_scope_before(snippet_fn, tbl, L[1])) == {"b", "c"}
    assert names(in_scope_before(snippet_fn, tbl, L[13])) == {"a", "b", "c"}
    with pytest.raises(NotANameLocationError):
        in_scope_before(snippet_fn, tbl, L[2])


def test_in_scope_before_first_statement():
    fn = parse_function("def f():\n  x = 1\n  return x\n")
    tbl = resolve_function(fn)
    assert in_scope_before(fn, tbl, (2, 1, 1)) == set()


def test_tree_json_round_trip(snippet_fn):
    assert Node.from_json(snippet_fn.to_json()) == snippet_fn
