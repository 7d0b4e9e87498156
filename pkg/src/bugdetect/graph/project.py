"""Projection of the entity graph onto its token sequence."""
from __future__ import annotations

from dataclasses import dataclass

from .extract import CodeGraph, EntityKind, Relation


@dataclass
class TokenProjection:
    token_sequence: list[int]
    projected_edges: list[tuple[int, Relation, int]]
    projection_map: dict[int, int]


def project_tokens(g: CodeGraph) -> TokenProjection:
    """Map every entity to one token and carry the edges along.

    Syntax nodes map to the first token they span, symbols to their first
    occurrence, formal-argument names and documentation to the projection of
    the first node linking to them. Self-loops are dropped; duplicates merged.
    """
    tokens = g.tokens()
    order = {t: i for i, t in enumerate(tokens)}
    pmap: dict[int, int] = {t: t for t in tokens}

    children: dict[int, list[int]] = {}
    for s, d in g.edges_of(Relation.SYNTAX_CHILD):
        children.setdefault(s, []).append(d)

    def first_token(n: int) -> int:
        if n in pmap:
            return pmap[n]
        best = min((first_token(c) for c in children.get(n, ())), key=order.__getitem__)
        pmap[n] = best
        return best

    kinds = {n.id: n.kind for n in g.nodes}
    for n in g.nodes:
        if n.kind == EntityKind.SYNTAX_NODE:
            first_token(n.id)
    for occ, sym in g.edges_of(Relation.OCCURRENCE_OF):
        t = pmap[occ]
        if sym not in pmap or order[t] < order[pmap[sym]]:
            pmap[sym] = t
    for rel in (Relation.FORMAL_ARG, Relation.CALL_DOC):
        for src, dst in g.edges_of(rel):
            pmap.setdefault(dst, pmap[src])

    seen = set()
    edges = []
    for s, r, d in g.edges:
        if kinds[s] == EntityKind.SUBTOKEN or kinds[d] == EntityKind.SUBTOKEN:
            continue
        e = (pmap[s], r, pmap[d])
        if e[0] != e[2] and e not in seen:
            seen.add(e)
            edges.append(e)
    return TokenProjection(tokens, edges, pmap)
