from __future__ import annotations

import io
import itertools
import random
import tokenize

import pytest

from bugdetect.eval.synthetic import random_function
from bugdetect.lang import NodeKind, node_at, parse, parse_function, resolve_function, to_source
from bugdetect.lang.tree import ARITHMETIC_OPS, ASSIGN_OPS, BOOLEAN_OPS, COMPARISON_OPS, IDENTITY_OPS, MEMBERSHIP_OPS
from bugdetect.rewrite import (
    AUGMENTATIONS,
    IDENTITY,
    AugmentationConfig,
    PotentialRewrite,
    RewriteRule,
    RuleKind,
    StaleRewriteError,
    apply,
    augment,
    enumerate_rewrites,
    invert,
    resolve_rewrite,
)
from conftest import LISTING, L, SNIPPET



def lexemes(text: str) -> list[str]:
    skip = {tokenize.NEWLINE, tokenize.NL, tokenize.INDENT, tokenize.DEDENT, tokenize.ENDMARKER, tokenize.COMMENT}
    return [t.string for t in tokenize.generate_tokens(io.StringIO(text).readline) if t.type not in skip]


def token_diff(a: str, b: str) -> list[tuple[str, str]]:
    ta, tb = lexemes(a), lexemes(b)
    assert len(ta) == len(tb)
    return [(x, y) for x, y in zip(ta, tb) if x != y]


def test_reference_listing(snippet_fn):
    cands = enumerate_rewrites(snippet_fn)
    assert len(cands) == 63
    got = {}
    for c in cands:
        got.setdefault(c.location, set()).add(c.payload)
    assert got == {L[i]: v for i, v in LISTING.items()}


def test_reference_kinds(snippet_fn):
    kinds = {}
    for c in enumerate_rewrites(snippet_fn):
        kinds.setdefault(c.location, set()).add(c.kind)
    assert kinds[L[5]] == {RuleKind.WRONG_ASSIGN_OP}
    assert kinds[L[6]] == {RuleKind.ARG_SWAP}
    assert kinds[L[11]] == {RuleKind.WRONG_COMPARISON_OP}
    assert kinds[L[12]] == {RuleKind.WRONG_LITERAL}
    assert kinds[L[13]] == {RuleKind.VAR_MISUSE, RuleKind.UNARY_NEG_TOGGLE}
    assert kinds[L[14]] == {RuleKind.WRONG_BOOLEAN_OP}


def test_out_of_domain_literal():
    assert enumerate_rewrites(parse_function("def f():\n  return 7")) == []


def test_arg_swap_pairs():
    fn = parse_function("def f(x, y, z):\n  return g(x, y, z)\n")
    swaps = [c for c in enumerate_rewrites(fn) if c.kind == RuleKind.ARG_SWAP]
    assert sorted(c.payload for c in swaps) == [f"{i},{j}" for i, j in itertools.combinations((1, 2, 3), 2)]


def test_arg_swap_skips_identical_arguments():
    fn = parse_function("def f(x, y):\n  return g(x, x, y)\n")
    swaps = {c.payload for c in enumerate_rewrites(fn) if c.kind == RuleKind.ARG_SWAP}
    assert swaps == {"1,3", "2,3"}


def test_apply_arg_swap(snippet_fn):
    pr = next(c for c in enumerate_rewrites(snippet_fn) if c.location == L[6])
    assert "c += bar(c, b)" in to_source(apply(snippet_fn, pr))


def test_apply_comparison(snippet_fn):
    pr = next(c for c in enumerate_rewrites(snippet_fn) if c.location == L[11] and c.payload == ">")
    assert "c_is_neg = c > 0" in to_source(apply(snippet_fn, pr))


def test_var_misuse_changes_one_token(snippet_fn):
    pr = next(c for c in enumerate_rewrites(snippet_fn) if c.location == L[1] and c.payload == "b")
    assert token_diff(SNIPPET, to_source(apply(snippet_fn, pr))) == [("a", "b")]


def test_inverse_of_var_misuse(snippet_fn):
    pr = next(c for c in enumerate_rewrites(snippet_fn) if c.location == L[1] and c.payload == "b")
    after = apply(snippet_fn, pr)
    inv = invert(pr, after)
    assert inv == PotentialRewrite(L[1], RewriteRule(RuleKind.VAR_MISUSE, "a"))
    assert inv.rule.original == "b"


def test_arg_swap_self_inverse(snippet_fn):
    pr = next(c for c in enumerate_rewrites(snippet_fn) if c.location == L[6])
    after = apply(snippet_fn, pr)
    assert invert(pr, after) == pr
    assert apply(after, pr) == snippet_fn


def test_all_reference_candidates_invert(snippet_fn):
    for pr in enumerate_rewrites(snippet_fn):
        after = apply(snippet_fn, pr)
        assert after != snippet_fn
        assert apply(after, invert(pr, after)) == snippet_fn


def test_stale_rewrite_rejected(snippet_fn):
    pr = PotentialRewrite(L[11], RewriteRule(RuleKind.WRONG_COMPARISON_OP, ">", "<"))
    after = apply(snippet_fn, pr)
    with pytest.raises(StaleRewriteError):
        apply(after, pr)
    with pytest.raises(StaleRewriteError):
        apply(snippet_fn, PotentialRewrite(L[1], RewriteRule(RuleKind.WRONG_LITERAL, "1")))


def test_identity_rewrite(snippet_fn):
    assert apply(snippet_fn, IDENTITY) == snippet_fn
    assert IDENTITY.is_identity


def test_random_round_trips():
    rng = random.Random(5)
    pairs = 0
    while pairs < 200:
        fn = random_function(rng)
        cands = enumerate_rewrites(fn)
        if not cands:
            continue
        pr = rng.choice(cands)
        after = apply(fn, pr)
        inv = invert(pr, after)
        assert apply(after, inv) == fn
        # the repair is a candidate of the re-parsed buggy program
        reparsed = parse(to_source(after)).functions[0]
        assert inv.key() in {c.key() for c in enumerate_rewrites(reparsed)}
        assert apply(reparsed, inv) == fn
        pairs += 1


OPERATOR_CLASSES = [ARITHMETIC_OPS, BOOLEAN_OPS, COMPARISON_OPS, MEMBERSHIP_OPS, IDENTITY_OPS, ASSIGN_OPS]


def test_operator_compatibility():
    rng = random.Random(9)
    op_kinds = {RuleKind.WRONG_BINARY_OP, RuleKind.WRONG_BOOLEAN_OP, RuleKind.WRONG_COMPARISON_OP, RuleKind.WRONG_ASSIGN_OP}
    seen = 0
    for _ in range(200):
        fn = random_function(rng)
        for c in enumerate_rewrites(fn):
            if c.kind in op_kinds:
                old = node_at(fn, c.location).token
                assert any(old in cls and c.payload in cls for cls in OPERATOR_CLASSES)
                seen += 1
    assert seen > 100


def test_enumeration_deterministic():
    rng = random.Random(2)
    for _ in range(50):
        fn = random_function(rng)
        again = parse(to_source(fn)).functions[0]
        assert enumerate_rewrites(fn) == enumerate_rewrites(again)


def test_var_misuse_targets_defined_symbols():
    fn = parse_function("def f(a):\n  x = a\n  y = x + a\n  return y\n")
    tbl = resolve_function(fn)
    for c in enumerate_rewrites(fn, tbl):
        if c.kind == RuleKind.VAR_MISUSE:
            assert tbl.context[c.location] in ("load", "update")
            assert c.payload in {s.name for s in tbl.defined_before(c.location)}


def test_negation_toggle_round_trip():
    fn = parse_function("def f(x, y):\n  return x or not y\n")
    toggles = [c for c in enumerate_rewrites(fn) if c.kind == RuleKind.UNARY_NEG_TOGGLE]
    assert {c.location for c in toggles} == {(4, 1, 1, 1), (4, 1, 1, 3)}
    for c in toggles:
        after = apply(fn, c)
        assert apply(after, invert(c, after)) == fn
    texts = {to_source(apply(fn, c)).splitlines()[1] for c in toggles}
    assert texts == {"  return not x or not y", "  return x or y"}


def test_minus_toggle():
    fn = parse_function("def f(x, y):\n  return -x + y\n")
    toggles = {to_source(apply(fn, c)).splitlines()[1] for c in enumerate_rewrites(fn) if c.kind == RuleKind.UNARY_NEG_TOGGLE}
    assert "  return x + y" in toggles


def test_serialization(snippet_fn):
    for c in enumerate_rewrites(snippet_fn):
        obj = c.to_json()
        assert set(obj) == {"location", "kind", "payload"}
        back = resolve_rewrite(snippet_fn, obj)
        assert back == c and back.rule.original == c.rule.original


# -- augmentations ----------------------------------------------------------

def only(kind, seed=0):
    return AugmentationConfig.only(kind, 1.0, seed)


def test_comparison_mirroring():
    u = parse("def f(a, b):\n  return a<b\n")
    out = augment(u, only(RuleKind.COMPARISON_MIRRORING))
    assert out.text == "def f(a, b):\n  return b > a\n"


def test_branch_swap_de_morgan():
    u = parse("def f(x, y):\n  if x and y:\n    return 1\n  else:\n    return 2\n")
    out = augment(u, only(RuleKind.IF_ELSE_BRANCH_SWAP))
    assert out.text == "def f(x, y):\n  if not x or not y:\n    return 2\n  else:\n    return 1\n"


def test_comment_deletion_drops_docstring():
    u = parse("def f(x):\n  '''Doc.'''\n  return x\n")
    out = augment(u, only(RuleKind.COMMENT_DELETION))
    fn, orig = out.functions[0], u.functions[0]
    body = [c for c in orig.children[-1].children if c.kind != NodeKind.DOCSTRING]
    assert fn.children[-1].children == tuple(body)
    assert out.text == "def f(x):\n  return x\n"


def test_renaming_consistent():
    u = parse("def f(a):\n  total = a\n  total += a\n  return total\n")
    out = augment(u, only(RuleKind.VARIABLE_RENAMING, seed=3))
    text = out.text
    assert "total" not in text and "def f(a):" in text
    new = text.splitlines()[1].split(" = ")[0].strip()
    assert text.count(new) == 3


def test_augmentation_probability_zero_is_identity():
    u = parse(SNIPPET)
    cfg = AugmentationConfig({k: True for k in AUGMENTATIONS}, {k: 0.0 for k in AUGMENTATIONS}, 1)
    assert augment(u, cfg) == u


def test_augmentation_validation():
    with pytest.raises(ValueError):
        AugmentationConfig(probability={RuleKind.COMMENT_DELETION: 1.5})


def test_augmentation_deterministic_and_parseable():
    rng = random.Random(4)
    for i in range(50):
        u = parse(to_source(random_function(rng)))
        cfg = AugmentationConfig(seed=i)
        a, b = augment(u, cfg), augment(u, cfg)
        assert a == b and parse(a.text) == a
