"""Two-layer graph convolution with manual gradients.

Propagation follows H' = ReLU(A_hat H W) with the symmetric normalization
A_hat = D^(-1/2) (A + I) D^(-1/2). Pretraining minimizes softmax
cross-entropy on per-node class labels with plain full-batch gradient
descent; gradients are hand-derived, no autograd framework involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DeltaCommitError
from .embedding import DIM
from .encoders import EncodedGraph

HIDDEN = 256


class EmptyGraph(DeltaCommitError):
    """The graph has no nodes to convolve."""


class DegenerateLabels(DeltaCommitError):
    """Training labels contain a single class."""


@dataclass
class GcnParams:
    w1: np.ndarray  # 768 x 256
    w2: np.ndarray  # 256 x 256
    head: np.ndarray  # 256 x n_classes

    def check_shapes(self) -> None:
        assert self.w1.shape == (DIM, HIDDEN), self.w1.shape
        assert self.w2.shape == (HIDDEN, HIDDEN), self.w2.shape
        assert self.head.shape[0] == HIDDEN, self.head.shape


def _uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    bound = 1.0 / np.sqrt(shape[0])
    return rng.uniform(-bound, bound, size=shape)


def init_gcn(n_classes: int, seed: int = 0) -> GcnParams:
    rng = np.random.default_rng(seed)
    params = GcnParams(
        w1=_uniform(rng, (DIM, HIDDEN)),
        w2=_uniform(rng, (HIDDEN, HIDDEN)),
        head=_uniform(rng, (HIDDEN, n_classes)),
    )
    params.check_shapes()
    return params


def normalized_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """D^(-1/2) (A + I) D^(-1/2); self loops added uniformly."""
    n = adjacency.shape[0]
    a = adjacency + np.eye(n)
    inv_sqrt = 1.0 / np.sqrt(a.sum(axis=1))
    return a * inv_sqrt[:, None] * inv_sqrt[None, :]


def gcn_forward(graph: EncodedGraph, params: GcnParams) -> np.ndarray:
    """Node representations, n x 256. Raises EmptyGraph on zero nodes."""
    out, _ = _forward_cached(graph, params)
    return out


def _forward_cached(graph: EncodedGraph, params: GcnParams):
    if graph.n == 0:
        raise EmptyGraph("cannot convolve an empty graph")
    params.check_shapes()
    assert graph.features.shape == (graph.n, DIM), graph.features.shape
    a_hat = normalized_adjacency(graph.adjacency)
    pre1 = a_hat @ graph.features @ params.w1
    h1 = np.maximum(pre1, 0.0)
    pre2 = a_hat @ h1 @ params.w2
    h2 = np.maximum(pre2, 0.0)
    assert h2.shape == (graph.n, HIDDEN), h2.shape
    return h2, (a_hat, pre1, h1, pre2)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def gcn_pretrain(
    graphs: Sequence[EncodedGraph],
    epochs: int,
    lr: float,
    params: GcnParams | None = None,
    seed: int = 0,
) -> tuple[GcnParams, list[float]]:
    """Fit node classification over all graphs; returns (params, loss trace).

    Epochs of full-batch gradient descent on mean cross-entropy. Graphs
    with no nodes are ignored; a single observed class raises
    DegenerateLabels because nothing can be learned.
    """
    graphs = [g for g in graphs if g.n > 0]
    if not graphs:
        raise EmptyGraph("no non-empty graphs to train on")
    observed = sorted({int(c) for g in graphs for c in g.labels})
    if len(observed) < 2:
        raise DegenerateLabels(f"only class {observed} present in training data")
    n_classes = len(graphs[0].class_names)
    if params is None:
        params = init_gcn(n_classes, seed)
    params.check_shapes()
    assert params.head.shape[1] == n_classes

    total_nodes = sum(g.n for g in graphs)
    losses: list[float] = []
    for _ in range(epochs):
        gw1 = np.zeros_like(params.w1)
        gw2 = np.zeros_like(params.w2)
        ghead = np.zeros_like(params.head)
        loss = 0.0
        for g in graphs:
            h2, (a_hat, pre1, h1, pre2) = _forward_cached(g, params)
            logits = h2 @ params.head
            probs = _softmax(logits)
            idx = np.arange(g.n)
            loss -= np.log(np.maximum(probs[idx, g.labels], 1e-300)).sum()
            dlogits = probs.copy()
            dlogits[idx, g.labels] -= 1.0
            dlogits /= total_nodes
            ghead += h2.T @ dlogits
            dh2 = dlogits @ params.head.T
            dpre2 = dh2 * (pre2 > 0)
            gw2 += (a_hat @ h1).T @ dpre2
            dh1 = a_hat.T @ dpre2 @ params.w2.T
            dpre1 = dh1 * (pre1 > 0)
            gw1 += (a_hat @ g.features).T @ dpre1
        params.w1 -= lr * gw1
        params.w2 -= lr * gw2
        params.head -= lr * ghead
        losses.append(loss / total_nodes)
    return params, losses


def gcn_accuracy(graphs: Sequence[EncodedGraph], params: GcnParams) -> float:
    correct = 0
    total = 0
    for g in graphs:
        if g.n == 0:
            continue
        logits = gcn_forward(g, params) @ params.head
        correct += int((logits.argmax(axis=1) == g.labels).sum())
        total += g.n
    return correct / total if total else 0.0
