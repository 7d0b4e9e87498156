"""Seeded small-scale corpus with a held-out random-bug split."""
from __future__ import annotations

import random
from dataclasses import dataclass

from ..eval.evaluate import function_rng, random_bug_graphs
from ..eval.synthetic import idiom_unit
from ..graph.extract import CodeGraph
from ..graph.samples import CorpusFunction, corpus_functions
from ..lang.tree import SourceUnit


@dataclass
class DeskCorpus:
    train: list[CorpusFunction]
    holdout: list[CorpusFunction]
    holdout_graphs: list[CodeGraph]


def idiom_units(n_functions: int, seed: int) -> list[SourceUnit]:
    """Units from the idiom generator, deduplicated by text, until they hold
    at least ``n_functions`` functions."""
    rng = random.Random(seed)
    units: list[SourceUnit] = []
    seen: set[str] = set()
    count = 0
    while count < n_functions:
        u = idiom_unit(rng)
        if u.text in seen:
            continue
        seen.add(u.text)
        units.append(u)
        count += len(u.functions)
    return units


def desk_corpus(n_functions: int = 500, seed: int = 0, holdout_fraction: float = 0.2, variants: int = 9) -> DeskCorpus:
    return split_units(idiom_units(n_functions, seed), seed, holdout_fraction, variants)


def split_units(units: list[SourceUnit], seed: int = 0, holdout_fraction: float = 0.2, variants: int = 9) -> DeskCorpus:
    """Hold out whole units (so helper/caller pairs stay on one side) and
    expand the held-out functions into random-bug graphs."""
    if not 0.0 <= holdout_fraction < 1.0:
        raise ValueError("holdout fraction must lie in [0, 1)")
    n_functions = sum(len(u.functions) for u in units)
    rng = random.Random(seed + 1)
    order = list(range(len(units)))
    rng.shuffle(order)
    n_hold = 0
    hold_idx: set[int] = set()
    for i in order:
        if n_hold >= holdout_fraction * n_functions:
            break
        hold_idx.add(i)
        n_hold += len(units[i].functions)
    train = corpus_functions([u for i, u in enumerate(units) if i not in hold_idx])
    holdout = corpus_functions([u for i, u in enumerate(units) if i in hold_idx])
    graphs = [g for i, cf in enumerate(holdout) for g in random_bug_graphs(cf, variants, function_rng(seed + 2, i))]
    return DeskCorpus(train, holdout, graphs)


def desk_train_config(seed: int = 0, meta_epochs: int = 10, hidden: int = 64) -> "TrainConfig":
    """Schedule sized for a single CPU core: a narrower network, smaller
    batches and a faster warm-up than the full-scale defaults."""
    from ..model.network import ModelConfig
    from ..model.ops import OptimizerConfig
    from .loop import MetaEpochConfig, TrainConfig

    return TrainConfig(
        schedule=MetaEpochConfig(meta_epochs=meta_epochs, batch_graphs=16),
        model=ModelConfig(hidden=hidden),
        optimizer=OptimizerConfig(lr=1e-3, warmup=100),
        seed=seed,
    )
