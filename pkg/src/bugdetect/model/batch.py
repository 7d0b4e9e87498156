"""Array encoding of code graphs and disjoint-union batching."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from ..graph.extract import RELATIONS, CodeGraph
from ..lang.tree import ARITHMETIC_OPS, ASSIGN_OPS, BOOLEAN_OPS, COMPARISON_OPS, IDENTITY_OPS, MEMBERSHIP_OPS
from ..rewrite.rules import LITERAL_DOMAIN, RuleKind
from .vocab import MAX_SUBTOKENS, Vocabulary

TOGGLE_PREFIX = "toggle:"
OPERATOR_PAYLOADS = tuple(
    dict.fromkeys(
        ARITHMETIC_OPS + BOOLEAN_OPS + COMPARISON_OPS + MEMBERSHIP_OPS + IDENTITY_OPS + ASSIGN_OPS
        + (TOGGLE_PREFIX + "not", TOGGLE_PREFIX + "-")
    )
)
LITERAL_PAYLOADS = LITERAL_DOMAIN
_OP_INDEX = {p: i for i, p in enumerate(OPERATOR_PAYLOADS)}
_LIT_INDEX = {p: i for i, p in enumerate(LITERAL_PAYLOADS)}

# candidate head codes
HEAD_VAR, HEAD_ARGSWAP, HEAD_OPERATOR, HEAD_LITERAL = 0, 1, 2, 3
_OPERATOR_KINDS = {
    RuleKind.WRONG_BINARY_OP.value, RuleKind.WRONG_BOOLEAN_OP.value,
    RuleKind.WRONG_COMPARISON_OP.value, RuleKind.WRONG_ASSIGN_OP.value,
}


class MissingMetadataError(ValueError):
    pass


def head_of(kind: str, payload: str, meta: Sequence[int]) -> tuple[int, int, tuple[int, int]]:
    """(head code, payload index, metadata node ids) for one candidate."""
    if kind == RuleKind.VAR_MISUSE.value:
        if len(meta) != 1:
            raise MissingMetadataError("VarMisuse candidate needs the replacement symbol node")
        return HEAD_VAR, 0, (meta[0], meta[0])
    if kind == RuleKind.ARG_SWAP.value:
        if len(meta) != 2:
            raise MissingMetadataError("ArgSwap candidate needs both argument nodes")
        return HEAD_ARGSWAP, 0, (meta[0], meta[1])
    if kind in _OPERATOR_KINDS:
        return HEAD_OPERATOR, _OP_INDEX[payload], (0, 0)
    if kind == RuleKind.UNARY_NEG_TOGGLE.value:
        return HEAD_OPERATOR, _OP_INDEX[TOGGLE_PREFIX + payload], (0, 0)
    if kind == RuleKind.WRONG_LITERAL.value:
        return HEAD_LITERAL, _LIT_INDEX[payload], (0, 0)
    raise ValueError(f"no scoring head for rule kind {kind!r}")


@dataclass
class EncodedGraph:
    subtokens: np.ndarray  # (N, MAX_SUBTOKENS)
    edges: list[np.ndarray]  # per relation: (2, E_r) source/target
    loc_nodes: np.ndarray  # (L,) node id per distinct candidate location
    cand_loc: np.ndarray  # (C,) index into loc_nodes
    cand_head: np.ndarray
    cand_payload: np.ndarray
    cand_meta: np.ndarray  # (C, 2)
    target: int  # candidate index or -1 for NoBug

    @property
    def num_nodes(self) -> int:
        return int(self.subtokens.shape[0])

    @property
    def num_candidates(self) -> int:
        return int(self.cand_loc.shape[0])


def encode_graph(g: CodeGraph, vocab: Vocabulary) -> EncodedGraph:
    subtokens = np.array([vocab.encode(n.label) for n in g.nodes], dtype=np.int64).reshape(-1, MAX_SUBTOKENS)
    rel_index = {r: i for i, r in enumerate(RELATIONS)}
    per_rel: list[list[tuple[int, int]]] = [[] for _ in RELATIONS]
    for s, r, d in g.edges:
        per_rel[rel_index[r]].append((s, d))
    edges = [np.array(e, dtype=np.int64).reshape(-1, 2).T.copy() for e in per_rel]
    loc_ids: dict[tuple, int] = {}
    loc_nodes: list[int] = []
    cand_loc, heads, payloads, metas = [], [], [], []
    for c in g.candidates:
        if c.location not in loc_ids:
            loc_ids[c.location] = len(loc_nodes)
            loc_nodes.append(c.node_id)
        cand_loc.append(loc_ids[c.location])
        h, p, m = head_of(c.kind, c.payload, c.meta)
        heads.append(h)
        payloads.append(p)
        metas.append(m)
    t = g.target_index()
    return EncodedGraph(
        subtokens,
        edges,
        np.array(loc_nodes, dtype=np.int64),
        np.array(cand_loc, dtype=np.int64),
        np.array(heads, dtype=np.int64),
        np.array(payloads, dtype=np.int64),
        np.array(metas, dtype=np.int64).reshape(-1, 2),
        -1 if t is None else t,
    )


@dataclass
class Batch:
    """Disjoint union of graphs; all index tensors are global."""

    subtokens: torch.Tensor
    edges: list[torch.Tensor]
    loc_nodes: torch.Tensor
    loc_graph: torch.Tensor
    cand_loc: torch.Tensor
    cand_graph: torch.Tensor
    cand_head: torch.Tensor
    cand_payload: torch.Tensor
    cand_meta: torch.Tensor
    targets: torch.Tensor  # per graph: global candidate index or -1
    num_graphs: int
    cand_offsets: list[int]

    @property
    def num_nodes(self) -> int:
        return int(self.subtokens.shape[0])


def collate(graphs: Sequence[EncodedGraph]) -> Batch:
    node_off = loc_off = cand_off = 0
    subtok, loc_nodes, loc_graph, cand_loc, cand_graph = [], [], [], [], []
    heads, payloads, metas, targets, offsets = [], [], [], [], []
    edges: list[list[np.ndarray]] = [[] for _ in RELATIONS]
    for gi, e in enumerate(graphs):
        subtok.append(e.subtokens)
        for r, arr in enumerate(e.edges):
            edges[r].append(arr + node_off)
        loc_nodes.append(e.loc_nodes + node_off)
        loc_graph.append(np.full(len(e.loc_nodes), gi, dtype=np.int64))
        cand_loc.append(e.cand_loc + loc_off)
        cand_graph.append(np.full(e.num_candidates, gi, dtype=np.int64))
        heads.append(e.cand_head)
        payloads.append(e.cand_payload)
        metas.append(e.cand_meta + node_off)
        targets.append(-1 if e.target < 0 else e.target + cand_off)
        offsets.append(cand_off)
        node_off += e.num_nodes
        loc_off += len(e.loc_nodes)
        cand_off += e.num_candidates

    def cat(xs: list[np.ndarray], shape=(0,)) -> torch.Tensor:
        return torch.from_numpy(np.concatenate(xs) if xs else np.zeros(shape, dtype=np.int64))

    return Batch(
        subtokens=cat(subtok, (0, MAX_SUBTOKENS)),
        edges=[torch.from_numpy(np.concatenate(es, axis=1) if es else np.zeros((2, 0), dtype=np.int64)) for es in edges],
        loc_nodes=cat(loc_nodes),
        loc_graph=cat(loc_graph),
        cand_loc=cat(cand_loc),
        cand_graph=cat(cand_graph),
        cand_head=cat(heads),
        cand_payload=cat(payloads),
        cand_meta=cat(metas, (0, 2)),
        targets=torch.tensor(targets, dtype=torch.int64),
        num_graphs=len(graphs),
        cand_offsets=offsets + [cand_off],
    )


def batches_by_nodes(graphs: Sequence[EncodedGraph], max_nodes: int = 10000, max_graphs: int = 300) -> list[list[int]]:
    """Group graph indices (in order) into batches under the node and graph limits."""
    out: list[list[int]] = []
    cur: list[int] = []
    nodes = 0
    for i, g in enumerate(graphs):
        if cur and (nodes + g.num_nodes > max_nodes or len(cur) >= max_graphs):
            out.append(cur)
            cur, nodes = [], 0
        cur.append(i)
        nodes += g.num_nodes
    if cur:
        out.append(cur)
    return out
