"""Graph encodings consumed by the ranking networks.

Code side: the delta's edges become nodes of a line graph (two nodes are
adjacent when the underlying edges share an endpoint vertex). Each node
starts from the embedding of its edge's tokens and carries the edge's
delta class as a training label.

Text side: a message becomes a chain graph over adjacent word pairs; two
pair-nodes are adjacent when they share a word. The label of a pair is
the lexicon class of its incoming (second) word. A parser-produced
dependency graph can be swapped in through the same builder signature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ..corpus import load_lexicon
from ..delta import DeltaGraph
from ..metrics import tokenize
from .embedding import embed_many

EDGE_CLASSES = ("ADDED", "DELETED", "COMMON")
WORD_CLASSES = ("VERB_LEX", "NOUN_OTHER")


@dataclass
class EncodedGraph:
    """Dense node-feature/adjacency form handed to the GCN."""

    features: np.ndarray  # n x 768
    adjacency: np.ndarray  # n x n, symmetric, zero diagonal
    labels: np.ndarray  # n, int class ids
    class_names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.features.shape[0]


TextGraphBuilder = Callable[[str], EncodedGraph]


def line_graph(delta: DeltaGraph, seed: int = 0) -> EncodedGraph:
    """Nodes in linearization-aligned order: added, deleted, then context
    edges, each block sorted by endpoint order."""
    ordered = []
    for cls_id, pool in ((0, delta.added_edges), (1, delta.deleted_edges), (2, delta.context_edges)):
        block = sorted(
            pool,
            key=lambda e: (
                delta.vertex(e.src).sort_token(),
                delta.vertex(e.dst).sort_token(),
                e.etype.value,
                e.label or "",
            ),
        )
        ordered.extend((cls_id, e) for e in block)

    token_groups = []
    for _, e in ordered:
        group = [delta.vertex(e.src).code, delta.vertex(e.dst).code]
        if e.label:
            group.append(e.label)
        token_groups.append(group)
    features = embed_many(token_groups, seed)

    n = len(ordered)
    adjacency = np.zeros((n, n))
    endpoints = [
        {delta.vertex(e.src).key, delta.vertex(e.dst).key} for _, e in ordered
    ]
    for i in range(n):
        for j in range(i + 1, n):
            if endpoints[i] & endpoints[j]:
                adjacency[i, j] = adjacency[j, i] = 1.0
    labels = np.array([cls_id for cls_id, _ in ordered], dtype=int)
    return EncodedGraph(features, adjacency, labels, EDGE_CLASSES)


def text_graph(
    message: str,
    seed: int = 0,
    lexicon: Optional[frozenset[str]] = None,
) -> EncodedGraph:
    """Chain graph over adjacent word pairs; empty for one-word messages."""
    words = tokenize(message)
    lex = lexicon if lexicon is not None else load_lexicon()
    pairs = [(words[i], words[i + 1]) for i in range(len(words) - 1)]
    features = embed_many([list(p) for p in pairs], seed)
    n = len(pairs)
    adjacency = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if set(pairs[i]) & set(pairs[j]):
                adjacency[i, j] = adjacency[j, i] = 1.0
    labels = np.array([0 if p[1] in lex else 1 for p in pairs], dtype=int)
    return EncodedGraph(features, adjacency, labels, WORD_CLASSES)
