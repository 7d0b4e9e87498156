"""Co-training of the bug detector and the bug selector."""
from .desk import DeskCorpus, desk_corpus, idiom_units, split_units, desk_train_config
from .loop import (
    TELEMETRY_FIELDS,
    EncodingCache,
    MetaEpochConfig,
    Observed,
    RunResult,
    TrainConfig,
    TrainingError,
    build_vocabulary,
    corpus_digest,
    graph_losses,
    hardest,
    make_buggy_dataset,
    make_hard_dataset,
    run,
    selector_targets,
    write_telemetry,
)
from .pool import DataPool, PoolEntry

__all__ = [
    "DataPool", "DeskCorpus", "EncodingCache", "MetaEpochConfig", "Observed", "PoolEntry", "RunResult",
    "TELEMETRY_FIELDS", "TrainConfig", "TrainingError", "build_vocabulary", "corpus_digest", "desk_corpus", "desk_train_config",
    "graph_losses", "hardest", "idiom_units", "make_buggy_dataset", "make_hard_dataset", "run",
    "selector_targets", "split_units", "write_telemetry",
]
