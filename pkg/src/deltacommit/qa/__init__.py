"""Trainable quality ranking of candidate messages against delta graphs."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .embedding import DIM, embed_tokens, token_vector
from .encoders import EncodedGraph, line_graph, text_graph
from .gcn import (
    HIDDEN,
    DegenerateLabels,
    EmptyGraph,
    GcnParams,
    gcn_accuracy,
    gcn_forward,
    gcn_pretrain,
    init_gcn,
    normalized_adjacency,
)
from .scorer import (
    CONV_WIDTHS,
    EmptyInputs,
    GradCheckReport,
    QaModel,
    ScoreMode,
    ScorerParams,
    TrainExample,
    grad_check,
    init_model,
    init_scorer,
    rank_candidates,
    score_pair,
    scorer_accuracy,
    sigmoid,
    train_scorer,
)

__all__ = [
    "CONV_WIDTHS",
    "CheckpointError",
    "DIM",
    "DegenerateLabels",
    "EmptyGraph",
    "EmptyInputs",
    "EncodedGraph",
    "GcnParams",
    "GradCheckReport",
    "HIDDEN",
    "QaModel",
    "ScoreMode",
    "ScorerParams",
    "TrainExample",
    "embed_tokens",
    "gcn_accuracy",
    "gcn_forward",
    "gcn_pretrain",
    "grad_check",
    "init_gcn",
    "init_model",
    "init_scorer",
    "line_graph",
    "load_checkpoint",
    "normalized_adjacency",
    "rank_candidates",
    "save_checkpoint",
    "score_pair",
    "scorer_accuracy",
    "sigmoid",
    "text_graph",
    "token_vector",
    "train_scorer",
]
