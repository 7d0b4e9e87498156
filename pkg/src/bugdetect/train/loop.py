"""Alternating detector/selector training over pooled samples."""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
import os
import random
import threading
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
import torch

from .. import __version__
from ..graph.extract import CodeGraph
from ..graph.samples import CorpusFunction
from ..model.batch import EncodedGraph, batches_by_nodes, collate, encode_graph
from ..model.network import BugModel, ModelConfig, detector_loss, per_graph_detector_loss, selector_loss
from ..model.ops import (
    NonFiniteGradientError,
    OptimizerConfig,
    make_optimizer,
    optimizer_step,
    predict_graphs,
    sample_rewrite,
    save_checkpoint,
    selector_options,
)
from ..model.vocab import DEFAULT_VOCAB_SIZE, Vocabulary
from ..rewrite.rules import LITERAL_DOMAIN
from .pool import DataPool, PoolEntry

TELEMETRY_FIELDS = ("meta_epoch", "detector_loss", "selector_loss", "holdout_joint", "holdout_loc", "holdout_repair")


class TrainingError(RuntimeError):
    """Non-finite values during training, with the meta-epoch and step."""

    def __init__(self, message: str, meta_epoch: int, step: int, parameter: str | None = None):
        self.meta_epoch = meta_epoch
        self.step = step
        self.parameter = parameter
        super().__init__(f"meta-epoch {meta_epoch}, step {step}: {message}")


@dataclass
class MetaEpochConfig:
    meta_epochs: int = 10
    k: int = 5
    nu: int = 4
    epsilon: float = 0.02
    batch_graphs: int = 300
    batch_nodes: int = 10000
    # optimizer steps per meta-epoch; by default every new entry is drawn nu
    # times on average
    detector_steps: int | None = None
    selector_steps: int | None = None
    snapshot_every: int = 1
    mode: str = "sequential"  # or "async"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.nu < 1:
            raise ValueError("nu must be at least 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.meta_epochs < 0:
            raise ValueError("meta_epochs must be non-negative")
        if self.mode not in ("sequential", "async"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class TrainConfig:
    schedule: MetaEpochConfig = field(default_factory=MetaEpochConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    vocab_size: int = DEFAULT_VOCAB_SIZE

    def to_dict(self) -> dict:
        return {"schedule": asdict(self.schedule), "model": self.model.to_dict(),
                "optimizer": asdict(self.optimizer), "seed": self.seed, "vocab_size": self.vocab_size}


@dataclass
class Observed:
    """The options drawn for one function and their graphs."""

    fn: CorpusFunction
    options: list[int]
    graphs: dict[int, CodeGraph]


@dataclass
class RunResult:
    detector: BugModel
    selector: BugModel
    vocab: Vocabulary
    telemetry: list[dict]
    last_observed: list[Observed] = field(default_factory=list)


# -- datasets ---------------------------------------------------------------

class EncodingCache:
    """Clean-graph encodings per corpus function."""

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab
        self._cache: dict[int, EncodedGraph] = {}

    def clean(self, cf: CorpusFunction) -> EncodedGraph:
        key = id(cf)
        if key not in self._cache:
            self._cache[key] = encode_graph(cf.clean_graph, self.vocab)
        return self._cache[key]


def make_buggy_dataset(
    fns: Sequence[CorpusFunction],
    selector: BugModel,
    cache: EncodingCache,
    k: int,
    epsilon: float,
    rng: random.Random,
    batch_nodes: int = 10000,
    sink: Callable[[list[PoolEntry]], None] | None = None,
) -> tuple[list[PoolEntry], list[Observed]]:
    """k selector draws per function plus its unmodified version.

    Drawing the identity option yields a NoBug entry. Functions without
    candidates contribute only the unmodified entry. ``sink`` receives the
    entries of each function as soon as they are made.
    """
    with_cands = [cf for cf in fns if cf.candidates]
    preds = predict_graphs(selector, [cache.clean(cf) for cf in with_cands], batch_nodes)
    by_fn = dict(zip(map(id, with_cands), preds))
    entries: list[PoolEntry] = []
    observed: list[Observed] = []
    for cf in fns:
        clean = PoolEntry(cf.clean_graph, encoded=cache.clean(cf))
        mine = [clean]
        if cf.candidates:
            probs = selector_options(by_fn[id(cf)])
            obs = Observed(cf, [], {})
            for _ in range(k):
                opt = sample_rewrite(probs, epsilon, rng)
                obs.options.append(opt)
                if opt not in obs.graphs:
                    obs.graphs[opt] = cf.clean_graph if opt == len(cf.candidates) else cf.variant(cf.candidates[opt])
                g = obs.graphs[opt]
                mine.append(PoolEntry(g, encoded=cache.clean(cf) if g is cf.clean_graph else None))
            observed.append(obs)
        for e in mine:
            if e.encoded is None:
                e.encoded = encode_graph(e.graph, cache.vocab)
        entries += mine
        if sink is not None:
            sink(mine)
    return entries, observed


@torch.no_grad()
def graph_losses(model: BugModel, encoded: Sequence[EncodedGraph], batch_nodes: int = 10000) -> list[float]:
    was = model.training
    model.eval()
    out: list[float] = []
    try:
        for idx in batches_by_nodes(encoded, batch_nodes):
            b = collate([encoded[i] for i in idx])
            out += per_graph_detector_loss(model(b), b).tolist()
    finally:
        model.train(was)
    return out


def hardest(losses: Sequence[float]) -> int:
    """Index of the largest loss; the first one on ties."""
    best = 0
    for i, v in enumerate(losses):
        if v > losses[best]:
            best = i
    return best


def make_hard_dataset(
    observed: Sequence[Observed], detector: BugModel, cache: EncodingCache, batch_nodes: int = 10000
) -> list[PoolEntry]:
    """Per function, the observed option the detector finds hardest.

    Options are considered once each, in candidate order with the identity
    last, so ties go to the earliest candidate.
    """
    jobs: list[tuple[Observed, list[int]]] = []
    flat: list[EncodedGraph] = []
    for obs in observed:
        opts = sorted(set(obs.options))
        jobs.append((obs, opts))
        for o in opts:
            g = obs.graphs[o]
            flat.append(cache.clean(obs.fn) if g is obs.fn.clean_graph else encode_graph(g, cache.vocab))
    losses = graph_losses(detector, flat, batch_nodes)
    entries = []
    pos = 0
    for obs, opts in jobs:
        mine = losses[pos:pos + len(opts)]
        pos += len(opts)
        entries.append(PoolEntry(obs.fn.clean_graph, tuple(opts), opts[hardest(mine)], encoded=cache.clean(obs.fn)))
    return entries


# -- optimization steps -----------------------------------------------------

def selector_targets(entries: Sequence[PoolEntry], cand_offsets: Sequence[int]) -> tuple[torch.Tensor, torch.Tensor]:
    """Global option mask and chosen indices for a collated selector batch."""
    G = len(entries)
    C = cand_offsets[-1]
    observed = torch.zeros(C + G, dtype=torch.bool)
    chosen = torch.zeros(G, dtype=torch.int64)

    def glob(g: int, o: int) -> int:
        n = cand_offsets[g + 1] - cand_offsets[g]
        return C + g if o == n else cand_offsets[g] + o

    for g, e in enumerate(entries):
        for o in e.observed:
            observed[glob(g, o)] = True
        chosen[g] = glob(g, e.chosen)
    return observed, chosen


def _train_step(
    model: BugModel, opt: torch.optim.Optimizer, entries: Sequence[PoolEntry], step: int,
    ocfg: OptimizerConfig, selector: bool, meta_epoch: int,
) -> float:
    b = collate([e.encoded for e in entries])
    model.train()
    opt.zero_grad()
    pred = model(b)
    if selector:
        observed, chosen = selector_targets(entries, b.cand_offsets)
        loss = selector_loss(pred, b, observed, chosen)
    else:
        loss = detector_loss(pred, b)
    value = float(loss.detach())
    if not math.isfinite(value):
        raise TrainingError("non-finite loss", meta_epoch, step)
    loss.backward()
    try:
        optimizer_step(model, opt, step, ocfg)
    except NonFiniteGradientError as exc:
        raise TrainingError(str(exc), meta_epoch, step, exc.parameter) from exc
    return value


def _train_from_pool(
    model: BugModel, opt: torch.optim.Optimizer, pool: DataPool, steps: int, batch_graphs: int,
    batch_nodes: int, ocfg: OptimizerConfig, selector: bool, meta_epoch: int, step0: int,
) -> tuple[list[float], int]:
    losses = []
    step = step0
    for _ in range(steps):
        drawn = pool.sample(batch_graphs)
        if not drawn:
            break
        # respect the node budget by keeping a prefix of the draw
        kept, nodes = [], 0
        for e in drawn:
            if kept and nodes + e.encoded.num_nodes > batch_nodes:
                break
            kept.append(e)
            nodes += e.encoded.num_nodes
        step += 1
        losses.append(_train_step(model, opt, kept, step, ocfg, selector, meta_epoch))
    return losses, step


# -- the main loop ----------------------------------------------------------

def build_vocabulary(fns: Sequence[CorpusFunction], size: int = DEFAULT_VOCAB_SIZE) -> Vocabulary:
    labels = [n.label for cf in fns for n in cf.clean_graph.nodes]
    return Vocabulary.build(labels + list(LITERAL_DOMAIN), size)


def corpus_digest(fns: Sequence[CorpusFunction]) -> str:
    h = hashlib.sha256()
    for cf in fns:
        h.update(cf.source().encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()


def _steps(n_entries: int, nu: int, batch: int) -> int:
    return math.ceil(nu * n_entries / batch) if n_entries else 0


def run(
    fns: Sequence[CorpusFunction],
    cfg: TrainConfig,
    holdout: Sequence[CodeGraph] = (),
    detector: BugModel | None = None,
    selector: BugModel | None = None,
    vocab: Vocabulary | None = None,
    out_dir: str | None = None,
    log: Callable[[str], None] | None = None,
) -> RunResult:
    """Train detector and selector for ``cfg.schedule.meta_epochs`` rounds.

    Each round draws k rewrites per function from the selector, trains the
    detector on them, picks the observed rewrite with the highest detector
    loss per function and trains the selector towards it. The held-out graphs
    are evaluated after every round.
    """
    from ..eval.evaluate import evaluate  # eval depends on model only

    sch = cfg.schedule
    torch.manual_seed(cfg.seed)
    rng = random.Random(cfg.seed)
    if vocab is None:
        vocab = build_vocabulary(fns, cfg.vocab_size)
    mcfg = ModelConfig(**{**cfg.model.to_dict(), "vocab_size": len(vocab)})
    if detector is None:
        detector = BugModel(mcfg)
    if selector is None:
        selector = BugModel(mcfg)
    cache = EncodingCache(vocab)
    det_opt = make_optimizer(detector, cfg.optimizer)
    sel_opt = make_optimizer(selector, cfg.optimizer)
    blocking = sch.mode == "async"
    det_pool = DataPool(sch.nu, seed=cfg.seed + 1, blocking=blocking)
    sel_pool = DataPool(sch.nu, seed=cfg.seed + 2, blocking=False)
    telemetry: list[dict] = []
    det_step = sel_step = 0
    observed: list[Observed] = []

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        vocab.save(os.path.join(out_dir, "vocab.txt"))
        manifest = {
            "version": __version__,
            "seed": cfg.seed,
            "config": cfg.to_dict(),
            "corpus_sha256": corpus_digest(fns),
            "corpus_functions": len(fns),
            "holdout_graphs": len(holdout),
            "vocab_size": len(vocab),
        }
        with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fp:
            json.dump(manifest, fp, indent=2, sort_keys=True)

    for e in range(sch.meta_epochs):
        # detector round on fresh selector samples
        if sch.mode == "async":
            snapshot = copy.deepcopy(selector)
            det_pool.reopen()
            result: dict = {}

            def produce() -> None:
                try:
                    result["data"] = make_buggy_dataset(
                        fns, snapshot, cache, sch.k, sch.epsilon, rng, sch.batch_nodes, sink=det_pool.add)
                except BaseException as exc:  # surfaced in the consumer
                    result["error"] = exc
                finally:
                    det_pool.close()

            worker = threading.Thread(target=produce, daemon=True)
            worker.start()
            expected = sum(1 + (sch.k if cf.candidates else 0) for cf in fns)
            steps = sch.detector_steps or _steps(expected, sch.nu, sch.batch_graphs)
            det_losses, det_step = _train_from_pool(
                detector, det_opt, det_pool, steps, sch.batch_graphs, sch.batch_nodes,
                cfg.optimizer, False, e, det_step)
            worker.join()
            if "error" in result:
                raise result["error"]
            _, observed = result["data"]
        else:
            buggy, observed = make_buggy_dataset(fns, selector, cache, sch.k, sch.epsilon, rng, sch.batch_nodes)
            det_pool.add(buggy)
            steps = sch.detector_steps or _steps(len(buggy), sch.nu, sch.batch_graphs)
            det_losses, det_step = _train_from_pool(
                detector, det_opt, det_pool, steps, sch.batch_graphs, sch.batch_nodes,
                cfg.optimizer, False, e, det_step)

        # selector round on the hardest observed samples
        hard = make_hard_dataset(observed, detector, cache, sch.batch_nodes)
        sel_pool.add(hard)
        steps = sch.selector_steps or _steps(len(hard), sch.nu, sch.batch_graphs)
        sel_losses, sel_step = _train_from_pool(
            selector, sel_opt, sel_pool, steps, sch.batch_graphs, sch.batch_nodes,
            cfg.optimizer, True, e, sel_step)

        row = {
            "meta_epoch": e + 1,
            "detector_loss": float(np.mean(det_losses)) if det_losses else float("nan"),
            "selector_loss": float(np.mean(sel_losses)) if sel_losses else float("nan"),
            "holdout_joint": float("nan"),
            "holdout_loc": float("nan"),
            "holdout_repair": float("nan"),
        }
        if holdout:
            rep = evaluate(detector, vocab, holdout, sch.batch_nodes)
            row.update(holdout_joint=rep.joint, holdout_loc=rep.loc, holdout_repair=rep.repair)
        telemetry.append(row)
        if log:
            log(" ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
        if out_dir:
            write_telemetry(os.path.join(out_dir, "telemetry.csv"), telemetry)
            if sch.snapshot_every and (e + 1) % sch.snapshot_every == 0:
                save_checkpoint(os.path.join(out_dir, f"checkpoint-{e + 1:03d}.npz"),
                                {"detector": detector, "selector": selector}, {"meta_epoch": e + 1})

    if out_dir:
        save_checkpoint(os.path.join(out_dir, "final.npz"), {"detector": detector, "selector": selector},
                        {"meta_epoch": sch.meta_epochs})
        if not telemetry:
            write_telemetry(os.path.join(out_dir, "telemetry.csv"), telemetry)
    return RunResult(detector, selector, vocab, telemetry, observed)


def write_telemetry(path: str, rows: Sequence[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fp:
        w = csv.DictWriter(fp, fieldnames=TELEMETRY_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
