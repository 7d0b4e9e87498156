"""Random-bug test corpora and detector evaluation."""
from __future__ import annotations

import random
from typing import Sequence

from ..graph.extract import CodeGraph
from ..graph.samples import CorpusFunction, corpus_functions
from ..lang.tree import SourceUnit
from ..model.batch import encode_graph
from ..model.network import BugModel
from ..model.ops import predict_graphs
from ..model.vocab import Vocabulary
from .metrics import EvalRecord, MetricReport, make_record, report


class CandidateMismatchError(ValueError):
    """A corpus graph cannot be scored by the given model and vocabulary."""


def random_bug_graphs(cf: CorpusFunction, n: int, rng: random.Random) -> list[CodeGraph]:
    """The original function followed by ``n`` variants, each with one
    uniformly drawn rewrite applied (draws are independent)."""
    out = [cf.clean_graph]
    cands = cf.candidates
    if not cands:
        return out
    for _ in range(n):
        out.append(cf.variant(cands[rng.randrange(len(cands))]))
    return out


def function_rng(seed: int, index: int) -> random.Random:
    """Independent stream per function so output does not depend on batching."""
    return random.Random(f"{seed}/{index}")


def generate_random_bugs(units: Sequence[SourceUnit], n: int = 9, seed: int = 0) -> list[CodeGraph]:
    out: list[CodeGraph] = []
    for i, cf in enumerate(corpus_functions(list(units))):
        out += random_bug_graphs(cf, n, function_rng(seed, i))
    return out


def check_compatible(model: BugModel, vocab: Vocabulary) -> None:
    if len(vocab) != model.cfg.vocab_size:
        raise CandidateMismatchError(
            f"vocabulary has {len(vocab)} entries but the model embedding expects {model.cfg.vocab_size}"
        )


def evaluate_records(
    model: BugModel, vocab: Vocabulary, graphs: Sequence[CodeGraph], batch_nodes: int = 10000
) -> list[EvalRecord]:
    check_compatible(model, vocab)
    encoded = []
    for i, g in enumerate(graphs):
        try:
            encoded.append(encode_graph(g, vocab))
        except (KeyError, ValueError) as exc:
            raise CandidateMismatchError(f"graph {i} ({g.function}): {exc}") from exc
    preds = predict_graphs(model, encoded, batch_nodes)
    return [make_record(g, p) for g, p in zip(graphs, preds)]


def evaluate(model: BugModel, vocab: Vocabulary, graphs: Sequence[CodeGraph], batch_nodes: int = 10000) -> MetricReport:
    return report(evaluate_records(model, vocab, graphs, batch_nodes))
