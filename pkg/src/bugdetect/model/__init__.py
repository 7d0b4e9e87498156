"""Neural bug detector and selector."""
from .batch import (
    LITERAL_PAYLOADS,
    OPERATOR_PAYLOADS,
    Batch,
    EncodedGraph,
    MissingMetadataError,
    batches_by_nodes,
    collate,
    encode_graph,
)
from .network import (
    BugModel,
    EmptyCandidatesError,
    GroundTruthError,
    ModelConfig,
    Prediction,
    detector_loss,
    per_graph_detector_loss,
    segment_log_softmax,
    segment_max,
    selector_loss,
)
from .gradcheck import GradCheckResult, detector_objective, directional_check, selector_objective
from .ops import (
    CheckpointError,
    GraphPrediction,
    NonFiniteGradientError,
    OptimizerConfig,
    embed_entities,
    encode_all,
    gnn_forward,
    learning_rate,
    load_checkpoint,
    localize,
    make_optimizer,
    optimizer_step,
    predict_graphs,
    sample_rewrite,
    save_checkpoint,
    score_rewrites,
    selector_options,
    split_prediction,
)
from .vocab import MAX_SUBTOKENS, PAD, UNK, Vocabulary, subtokenize

__all__ = [
    "Batch", "BugModel", "CheckpointError", "GradCheckResult", "detector_objective", "directional_check",
    "selector_objective", "EmptyCandidatesError", "EncodedGraph", "GraphPrediction", "GroundTruthError",
    "LITERAL_PAYLOADS", "MAX_SUBTOKENS", "MissingMetadataError", "ModelConfig", "NonFiniteGradientError",
    "OPERATOR_PAYLOADS", "OptimizerConfig", "PAD", "Prediction", "UNK", "Vocabulary", "batches_by_nodes",
    "collate", "detector_loss", "embed_entities", "encode_all", "encode_graph", "gnn_forward",
    "learning_rate", "load_checkpoint", "localize", "make_optimizer", "optimizer_step",
    "per_graph_detector_loss", "predict_graphs", "sample_rewrite", "save_checkpoint", "score_rewrites",
    "segment_log_softmax", "segment_max", "selector_loss", "selector_options", "split_prediction", "subtokenize",
]
