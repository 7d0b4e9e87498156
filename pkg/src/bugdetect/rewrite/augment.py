"""Semantics-preserving augmentation rewrites over whole source units."""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..lang.printer import to_source
from ..lang.symbols import SymbolKind, resolve_function
from ..lang.tree import Node, NodeKind, SourceUnit, _rebuild, node_at
from .rules import RuleKind

AUGMENTATIONS = (
    RuleKind.VARIABLE_RENAMING,
    RuleKind.COMMENT_DELETION,
    RuleKind.COMPARISON_MIRRORING,
    RuleKind.IF_ELSE_BRANCH_SWAP,
)

MIRROR = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "==": "==", "!=": "!="}

_FRESH_STEMS = ("val", "tmp", "item", "acc", "cur", "res", "elem", "var")


@dataclass
class AugmentationConfig:
    """Per-augmentation enable flag and application probability."""

    enabled: dict[RuleKind, bool] = field(default_factory=lambda: {k: True for k in AUGMENTATIONS})
    probability: dict[RuleKind, float] = field(default_factory=lambda: {k: 0.5 for k in AUGMENTATIONS})
    seed: int = 0

    def __post_init__(self) -> None:
        for k, p in self.probability.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability for {k.value} must be in [0, 1], got {p}")
        for k in list(self.enabled) + list(self.probability):
            if k not in AUGMENTATIONS:
                raise ValueError(f"{k.value} is not an augmentation")

    @classmethod
    def only(cls, kind: RuleKind, p: float = 1.0, seed: int = 0) -> "AugmentationConfig":
        return cls({k: k == kind for k in AUGMENTATIONS}, {k: p for k in AUGMENTATIONS}, seed)


def _all_names(unit: SourceUnit) -> set[str]:
    return {n.token for fn in unit.items for _, n in fn.walk() if n.kind == NodeKind.NAME}


def fresh_name(taken: set[str], rng: random.Random) -> str:
    stem = rng.choice(_FRESH_STEMS)
    i = rng.randrange(100)
    while f"{stem}{i}" in taken:
        i += 1
    return f"{stem}{i}"


def rename_variable(fn: Node, old: str, new: str) -> Node:
    """Rename every occurrence of local ``old`` (attribute members excluded)."""

    def go(n: Node, in_attr_member: bool = False) -> Node:
        if n.kind == NodeKind.NAME:
            return Node(n.kind, (), new, n.span) if n.token == old and not in_attr_member else n
        if n.is_leaf:
            return n
        if n.kind == NodeKind.ATTRIBUTE:
            return n.with_children([go(c, i > 0) for i, c in enumerate(n.children)])
        return n.with_children([go(c) for c in n.children])

    return go(fn)


def delete_comments(fn: Node) -> Node:
    """Drop Comment statements and the docstring; a block that would become
    empty keeps its original content."""

    def go(n: Node) -> Node:
        if n.is_leaf:
            return n
        kids = [go(c) for c in n.children]
        if n.kind == NodeKind.BLOCK:
            kept = [c for c in kids if c.kind not in (NodeKind.COMMENT, NodeKind.DOCSTRING)]
            if kept:
                kids = kept
        return n.with_children(kids)

    return go(fn)


def mirror_comparison(fn: Node, loc) -> Node:
    cmp_ = node_at(fn, loc)
    left, op, right = cmp_.children
    new_op = Node(NodeKind.OPERATOR, (), MIRROR[op.token], op.span)
    return _rebuild(fn, loc, cmp_.with_children([right, new_op, left]))


def negate(e: Node) -> Node:
    """Logical negation pushed through and/or by De Morgan's laws."""
    if e.kind == NodeKind.BOOL_OP:
        flipped = "or" if e.child(2).token == "and" else "and"
        op = Node(NodeKind.OPERATOR, (), flipped, e.child(2).span)
        return e.with_children([negate(e.child(1)), op, negate(e.child(3))])
    if e.kind == NodeKind.UNARY_OP and e.child(1).token == "not":
        return e.child(2)
    return Node(NodeKind.UNARY_OP, (Node(NodeKind.OPERATOR, (), "not"), e), None, e.span)


def swap_branches(fn: Node, loc) -> Node:
    stmt = node_at(fn, loc)
    test, then, other = stmt.children
    return _rebuild(fn, loc, stmt.with_children([negate(test), other, then]))


def _augment_function(fn: Node, cfg: AugmentationConfig, rng: random.Random, taken: set[str]) -> Node:
    for kind in AUGMENTATIONS:
        # always draw, so the stream does not depend on which flags are on
        draw = rng.random()
        if not cfg.enabled.get(kind, False) or draw >= cfg.probability.get(kind, 0.0):
            continue
        if kind == RuleKind.VARIABLE_RENAMING:
            tbl = resolve_function(fn)
            local = sorted(s.name for s in tbl.local_symbols() if s.kind == SymbolKind.VARIABLE)
            if local:
                new = fresh_name(taken, rng)
                taken.add(new)
                fn = rename_variable(fn, rng.choice(local), new)
        elif kind == RuleKind.COMMENT_DELETION:
            fn = delete_comments(fn)
        elif kind == RuleKind.COMPARISON_MIRRORING:
            sites = [loc for loc, n in fn.walk() if n.kind == NodeKind.COMPARE and n.child(2).token in MIRROR]
            if sites:
                fn = mirror_comparison(fn, rng.choice(sites))
        elif kind == RuleKind.IF_ELSE_BRANCH_SWAP:
            sites = [loc for loc, n in fn.walk() if n.kind == NodeKind.IF and len(n.children) == 3]
            if sites:
                fn = swap_branches(fn, rng.choice(sites))
    return fn


def augment(u: SourceUnit, cfg: AugmentationConfig) -> SourceUnit:
    """Apply each enabled augmentation to each function with its probability."""
    rng = random.Random(cfg.seed)
    taken = _all_names(u)
    items = tuple(
        _augment_function(n, cfg, rng, taken) if n.kind == NodeKind.FUNCTION_DEF else n for n in u.items
    )
    out = SourceUnit("", items)
    return SourceUnit(to_source(out), items)
