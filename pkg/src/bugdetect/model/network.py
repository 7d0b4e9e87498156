"""Residual relational message-passing network with localization and rewrite heads."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..graph.extract import RELATIONS
from .batch import HEAD_ARGSWAP, HEAD_LITERAL, HEAD_OPERATOR, HEAD_VAR, LITERAL_PAYLOADS, OPERATOR_PAYLOADS, Batch
from .vocab import PAD

NUM_EDGE_TYPES = 2 * len(RELATIONS)  # every relation plus its reverse
MASK_FILL = -1e9


@dataclass
class ModelConfig:
    vocab_size: int = 15000
    hidden: int = 256
    layers: int = 8
    residual_every: int = 4
    dropout: float = 0.2

    def __post_init__(self) -> None:
        if self.layers % self.residual_every:
            raise ValueError("layers must be a multiple of residual_every")

    def to_dict(self) -> dict:
        return asdict(self)


class EmptyCandidatesError(ValueError):
    pass


class GroundTruthError(LookupError):
    """The target rewrite is not among the graph's candidates."""


def segment_max(x: torch.Tensor, seg: torch.Tensor, n: int) -> torch.Tensor:
    """Per-segment element-wise max; empty segments yield zeros."""
    out = x.new_zeros((n,) + tuple(x.shape[1:]))
    if x.shape[0] == 0:
        return out
    idx = seg.view(-1, *([1] * (x.dim() - 1))).expand_as(x)
    return out.scatter_reduce(0, idx, x, reduce="amax", include_self=False)


def segment_log_softmax(x: torch.Tensor, seg: torch.Tensor, n: int) -> torch.Tensor:
    top = x.new_full((n,), float("-inf")).scatter_reduce(0, seg, x.detach(), reduce="amax", include_self=True)
    z = x - top[seg]
    total = x.new_zeros(n).index_add(0, seg, z.exp())
    return z - total.log()[seg]


class MessagePassingLayer(nn.Module):
    """One layer: typed linear messages, max aggregation, tanh(W LN(GELU(m)) + b)."""

    def __init__(self, in_dim: int, hidden: int):
        super().__init__()
        self.message = nn.Parameter(torch.empty(NUM_EDGE_TYPES, 2 * in_dim, hidden))
        bound = (1.0 / (2 * in_dim)) ** 0.5
        nn.init.uniform_(self.message, -bound, bound)
        self.norm = nn.LayerNorm(hidden)
        self.update = nn.Linear(hidden, hidden)

    def forward(self, h: torch.Tensor, edges: list[torch.Tensor]) -> torch.Tensor:
        msgs, recv = [], []
        for r, e in enumerate(edges):
            if e.shape[1] == 0:
                continue
            src, dst = e[0], e[1]
            # the source of a relation aggregates over its targets, and the
            # reversed relation lets targets aggregate over their sources
            for k, (i, j) in ((2 * r, (src, dst)), (2 * r + 1, (dst, src))):
                pair = torch.cat([h.index_select(0, i), h.index_select(0, j)], dim=1)
                msgs.append(pair @ self.message[k])
                recv.append(i)
        hidden = self.update.in_features
        if msgs:
            m = segment_max(torch.cat(msgs), torch.cat(recv), h.shape[0])
        else:
            m = h.new_zeros((h.shape[0], hidden))
        return torch.tanh(self.update(self.norm(F.gelu(m))))


@dataclass
class Prediction:
    """Log-probabilities for one batch.

    ``loc_logp`` covers the distinct candidate locations, ``nobug_logp`` the
    NoBug option of each graph; ``rew_logp`` is per candidate given its
    location and ``joint_logp`` their sum.
    """

    loc_logp: torch.Tensor
    nobug_logp: torch.Tensor
    rew_logp: torch.Tensor
    joint_logp: torch.Tensor
    loc_scores: torch.Tensor
    nobug_scores: torch.Tensor


class BugModel(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.hidden
        self.embedding = nn.Embedding(cfg.vocab_size, d)
        self.gnn = nn.ModuleList(
            MessagePassingLayer(2 * d if (t + 1) % cfg.residual_every == 0 else d, d) for t in range(cfg.layers)
        )
        self.dropout = nn.Dropout(cfg.dropout)
        self.nobug = nn.Parameter(torch.randn(d) * 0.1)
        self.loc_query = nn.Linear(d, d, bias=False)
        self.loc_hidden = nn.Linear(2 * d, d, bias=False)
        self.loc_out = nn.Linear(d, 1, bias=False)
        self.op_embedding = nn.Parameter(torch.randn(len(OPERATOR_PAYLOADS), d) * d ** -0.5)
        self.lit_embedding = nn.Parameter(torch.randn(len(LITERAL_PAYLOADS), d) * d ** -0.5)
        self.argswap_hidden = nn.Linear(3 * d, d)
        self.argswap_out = nn.Linear(d, 1)

    # -- encoder ---------------------------------------------------------
    def embed(self, subtokens: torch.Tensor) -> torch.Tensor:
        """Max-pool the embeddings of the non-padding subtokens of each entity."""
        e = self.embedding(subtokens)
        mask = (subtokens != PAD).unsqueeze(-1)
        e = e.masked_fill(~mask, float("-inf"))
        return e.max(dim=1).values

    def encode(self, b: Batch, h0: torch.Tensor | None = None) -> torch.Tensor:
        h = self.embed(b.subtokens) if h0 is None else h0
        if h.shape != (b.num_nodes, self.cfg.hidden):
            raise ValueError(f"state shape {tuple(h.shape)} does not match {(b.num_nodes, self.cfg.hidden)}")
        block_in = h
        for t, layer in enumerate(self.gnn):
            if t:
                h = self.dropout(h)
            if (t + 1) % self.cfg.residual_every == 0:
                h = layer(torch.cat([block_in, h], dim=1), b.edges)
                block_in = h
            else:
                h = layer(h, b.edges)
        return h

    # -- heads -----------------------------------------------------------
    def location_scores(self, r_loc: torch.Tensor, loc_graph: torch.Tensor, num_graphs: int) -> tuple[torch.Tensor, torch.Tensor]:
        """Scores of each location and of each graph's NoBug option."""
        nob = self.nobug.unsqueeze(0).expand(num_graphs, -1)
        proj_loc = self.loc_query(r_loc)
        proj_nob = self.loc_query(nob)
        q = segment_max(proj_loc, loc_graph, num_graphs)
        if proj_loc.shape[0]:
            has = torch.zeros(num_graphs, dtype=torch.bool).index_fill(0, loc_graph, True).unsqueeze(1)
            q = torch.where(has, torch.maximum(q, proj_nob), proj_nob)
        else:
            q = proj_nob
        def score(r: torch.Tensor, qq: torch.Tensor) -> torch.Tensor:
            return self.loc_out(torch.sigmoid(self.loc_hidden(torch.cat([r, qq], dim=1)))).squeeze(1)
        return score(r_loc, q[loc_graph]), score(nob, q)

    def rewrite_scores(self, h: torch.Tensor, b: Batch) -> torch.Tensor:
        r = h.index_select(0, b.loc_nodes).index_select(0, b.cand_loc)
        out = h.new_zeros(b.cand_loc.shape[0])
        head = b.cand_head
        sel = (head == HEAD_VAR).nonzero().squeeze(1)
        if sel.numel():
            sym = h.index_select(0, b.cand_meta[sel, 0])
            out = out.index_put((sel,), (r[sel] * sym).sum(1))
        sel = (head == HEAD_ARGSWAP).nonzero().squeeze(1)
        if sel.numel():
            x = torch.cat([r[sel], h.index_select(0, b.cand_meta[sel, 0]), h.index_select(0, b.cand_meta[sel, 1])], dim=1)
            out = out.index_put((sel,), self.argswap_out(F.gelu(self.argswap_hidden(x))).squeeze(1))
        for code, table in ((HEAD_OPERATOR, self.op_embedding), (HEAD_LITERAL, self.lit_embedding)):
            sel = (head == code).nonzero().squeeze(1)
            if sel.numel():
                out = out.index_put((sel,), (r[sel] * table.index_select(0, b.cand_payload[sel])).sum(1))
        return out

    def forward(self, b: Batch) -> Prediction:
        h = self.encode(b)
        return self.predict(h, b)

    def predict(self, h: torch.Tensor, b: Batch) -> Prediction:
        G = b.num_graphs
        r_loc = h.index_select(0, b.loc_nodes)
        loc_s, nob_s = self.location_scores(r_loc, b.loc_graph, G)
        # one softmax per graph over its locations and its NoBug option
        seg = torch.cat([b.loc_graph, torch.arange(G)])
        logp = segment_log_softmax(torch.cat([loc_s, nob_s]), seg, G)
        loc_logp, nobug_logp = logp[: loc_s.shape[0]], logp[loc_s.shape[0]:]
        rew = self.rewrite_scores(h, b)
        rew_logp = segment_log_softmax(rew, b.cand_loc, loc_s.shape[0])
        joint = loc_logp.index_select(0, b.cand_loc) + rew_logp
        return Prediction(loc_logp, nobug_logp, rew_logp, joint, loc_s, nob_s)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


def detector_loss(pred: Prediction, b: Batch) -> torch.Tensor:
    """Mean over graphs of -log p_loc(l) - log p_rew(rho|l), or -log p_loc(NoBug)."""
    losses = per_graph_detector_loss(pred, b)
    return losses.mean()


def per_graph_detector_loss(pred: Prediction, b: Batch) -> torch.Tensor:
    t = b.targets
    buggy = t >= 0
    if not bool(buggy.any()):
        return -pred.nobug_logp
    if int(t.max()) >= pred.joint_logp.shape[0]:
        raise GroundTruthError("target index outside the candidate list")
    picked = pred.joint_logp.index_select(0, t.clamp(min=0))
    return torch.where(buggy, -picked, -pred.nobug_logp)


def selector_loss(pred: Prediction, b: Batch, observed: torch.Tensor, chosen: torch.Tensor) -> torch.Tensor:
    """NLL of the chosen option under a softmax restricted to observed options.

    Options are all candidates followed by one identity option per graph (index
    ``C + g``); ``observed`` is a boolean mask over options, ``chosen`` one
    option index per graph.
    """
    logits = torch.cat([pred.joint_logp, pred.nobug_logp])
    seg = torch.cat([b.cand_graph, torch.arange(b.num_graphs)])
    if not bool(observed[chosen].all()):
        raise GroundTruthError("chosen selector option is not among the observed ones")
    masked = logits.masked_fill(~observed, MASK_FILL)
    logp = segment_log_softmax(masked, seg, b.num_graphs)
    return -logp.index_select(0, chosen).mean()
