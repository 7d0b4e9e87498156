"""Functional entry points: prediction, sampling, optimization, checkpoints."""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from ..graph.extract import NOBUG, CodeGraph
from .batch import Batch, EncodedGraph, collate, encode_graph
from .network import BugModel, EmptyCandidatesError, ModelConfig, Prediction
from .vocab import Vocabulary

CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


class NonFiniteGradientError(FloatingPointError):
    def __init__(self, name: str):
        self.parameter = name
        super().__init__(f"non-finite gradient in parameter {name}")


# -- thin per-stage wrappers ------------------------------------------------

def embed_entities(model: BugModel, b: Batch) -> torch.Tensor:
    return model.embed(b.subtokens)


def gnn_forward(model: BugModel, b: Batch, h0: torch.Tensor) -> torch.Tensor:
    return model.encode(b, h0)


def localize(model: BugModel, states: torch.Tensor, loc_nodes: Sequence[int]) -> torch.Tensor:
    """p_loc over the given location nodes of one graph followed by NoBug."""
    if len(loc_nodes) == 0:
        raise EmptyCandidatesError("localization needs at least one candidate location")
    idx = torch.as_tensor(list(loc_nodes), dtype=torch.int64)
    loc_s, nob_s = model.location_scores(states.index_select(0, idx), torch.zeros(len(idx), dtype=torch.int64), 1)
    return torch.softmax(torch.cat([loc_s, nob_s]), dim=0)


def score_rewrites(model: BugModel, states: torch.Tensor, b: Batch, location: int) -> torch.Tensor:
    """p_rew over the candidates at distinct location index ``location`` of ``b``."""
    sel = (b.cand_loc == location).nonzero().squeeze(1)
    if sel.numel() == 0:
        raise EmptyCandidatesError(f"no candidates at location {location}")
    return torch.softmax(model.rewrite_scores(states, b)[sel], dim=0)


# -- prediction over graphs -------------------------------------------------

@dataclass
class GraphPrediction:
    """Probabilities for one graph, candidates in graph order."""

    nobug: float
    candidates: np.ndarray  # joint p_loc * p_rew per candidate
    loc_prob: np.ndarray  # p_loc of each candidate's location
    rew_prob: np.ndarray  # p_rew of each candidate given its location

    @property
    def confidence(self) -> float:
        return 1.0 - self.nobug


def split_prediction(pred: Prediction, b: Batch) -> list[GraphPrediction]:
    joint = pred.joint_logp.detach().exp().numpy()
    loc = pred.loc_logp.detach().exp().index_select(0, b.cand_loc).numpy() if b.cand_loc.numel() else np.zeros(0)
    rew = pred.rew_logp.detach().exp().numpy()
    nob = pred.nobug_logp.detach().exp().numpy()
    out = []
    for g in range(b.num_graphs):
        s, e = b.cand_offsets[g], b.cand_offsets[g + 1]
        out.append(GraphPrediction(float(nob[g]), joint[s:e], loc[s:e], rew[s:e]))
    return out


@torch.no_grad()
def predict_graphs(model: BugModel, encoded: Sequence[EncodedGraph], batch_nodes: int = 10000) -> list[GraphPrediction]:
    from .batch import batches_by_nodes

    was = model.training
    model.eval()
    out: list[GraphPrediction] = []
    try:
        for idx in batches_by_nodes(encoded, batch_nodes):
            b = collate([encoded[i] for i in idx])
            out += split_prediction(model(b), b)
    finally:
        model.train(was)
    return out


# -- sampling ---------------------------------------------------------------

def sample_rewrite(probs: Sequence[float], epsilon: float, rng: random.Random) -> int:
    """Epsilon-greedy draw over options (candidates then the identity).

    Returns an index into ``probs``; with probability ``epsilon`` the draw is
    uniform over all options, otherwise it follows ``probs``.
    """
    n = len(probs)
    if n == 0:
        raise EmptyCandidatesError("nothing to sample from")
    if rng.random() < epsilon:
        return rng.randrange(n)
    u = rng.random() * float(sum(probs))
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if u < acc:
            return i
    return max(range(n), key=lambda i: probs[i])


def selector_options(p: GraphPrediction) -> list[float]:
    return list(map(float, p.candidates)) + [p.nobug]


# -- optimization -----------------------------------------------------------

@dataclass
class OptimizerConfig:
    lr: float = 1e-4
    warmup: int = 800
    clip: float = 0.5


def learning_rate(step: int, cfg: OptimizerConfig) -> float:
    """Linear warm-up: the ``step``-th update (1-based) uses lr * min(1, step / warmup)."""
    if cfg.warmup <= 0:
        return cfg.lr
    return cfg.lr * min(1.0, step / cfg.warmup)


def make_optimizer(model: BugModel, cfg: OptimizerConfig) -> torch.optim.Adam:
    return torch.optim.Adam(model.parameters(), lr=cfg.lr)


def optimizer_step(model: BugModel, opt: torch.optim.Optimizer, step: int, cfg: OptimizerConfig) -> float:
    """Clip by global norm, set the warm-up rate and update. Returns the pre-clip norm."""
    for name, p in model.named_parameters():
        if p.grad is not None and not bool(torch.isfinite(p.grad).all()):
            raise NonFiniteGradientError(name)
    params = [p for p in model.parameters() if p.grad is not None]
    norm = float(torch.nn.utils.clip_grad_norm_(params, cfg.clip)) if params else 0.0
    lr = learning_rate(step, cfg)
    for group in opt.param_groups:
        group["lr"] = lr
    opt.step()
    return norm


# -- encoding helpers -------------------------------------------------------

def encode_all(graphs: Sequence[CodeGraph], vocab: Vocabulary) -> list[EncodedGraph]:
    return [encode_graph(g, vocab) for g in graphs]


def has_target(g: CodeGraph) -> bool:
    return g.target != NOBUG


# -- checkpoints ------------------------------------------------------------

def save_checkpoint(path: str, models: dict[str, BugModel], extra: dict | None = None) -> None:
    """Write ``name.param`` arrays plus a JSON metadata entry to an npz file."""
    arrays: dict[str, np.ndarray] = {}
    configs = {}
    for name, m in models.items():
        configs[name] = m.cfg.to_dict()
        for pname, p in m.state_dict().items():
            arrays[f"{name}.{pname}"] = p.detach().cpu().numpy()
    meta = {"version": CHECKPOINT_VERSION, "models": configs, "extra": extra or {}}
    arrays["__meta__"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fp:
        np.savez(fp, **arrays)


def load_checkpoint(path: str) -> tuple[dict[str, BugModel], dict]:
    with np.load(path) as data:
        if "__meta__" not in data.files:
            raise CheckpointError(f"{path} has no metadata entry")
        meta = json.loads(bytes(data["__meta__"]).decode("utf-8"))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {meta.get('version')}")
        models = {}
        for name, cfg in meta["models"].items():
            m = BugModel(ModelConfig(**cfg))
            prefix = name + "."
            state = {k[len(prefix):]: torch.from_numpy(np.array(data[k])) for k in data.files if k.startswith(prefix)}
            try:
                m.load_state_dict(state)
            except RuntimeError as exc:
                # size mismatches and missing or unexpected arrays
                raise CheckpointError(f"model {name!r} does not match its stored config: {exc}") from exc
            m.eval()
            models[name] = m
    return models, meta.get("extra", {})


def finite_or_raise(x: float, what: str) -> float:
    if not math.isfinite(x):
        raise FloatingPointError(f"{what} is not finite")
    return x
