"""Embeddings, graph encoders, and the GCN stack."""

import numpy as np
import pytest

from deltacommit.qa import (
    DIM,
    DegenerateLabels,
    EmptyGraph,
    embed_tokens,
    gcn_accuracy,
    gcn_forward,
    gcn_pretrain,
    init_gcn,
    line_graph,
    normalized_adjacency,
    text_graph,
)
from deltacommit.qa.encoders import EncodedGraph

from conftest import delta_for


def separable_graphs(n_classes=3, n_graphs=12, scale=100.0, seed=7):
    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n_classes, DIM))
    base /= np.linalg.norm(base, axis=1, keepdims=True)
    names = tuple(f"C{i}" for i in range(n_classes))
    graphs = []
    for _ in range(n_graphs):
        n = int(rng.integers(3, 8))
        labels = rng.integers(0, n_classes, size=n)
        feats = scale * (base[labels] + 0.05 * rng.standard_normal((n, DIM)))
        adj = np.zeros((n, n))
        for i in range(n - 1):
            adj[i, i + 1] = adj[i + 1, i] = 1.0
        graphs.append(EncodedGraph(feats, adj, labels, names))
    return graphs


class TestEmbedding:
    def test_empty_is_zero(self):
        assert not embed_tokens([]).any()

    def test_deterministic(self):
        a = embed_tokens(["fix", "null"])
        b = embed_tokens(["fix", "null"])
        assert np.array_equal(a, b)

    def test_repetition_invariant_mean(self):
        assert np.allclose(embed_tokens(["a"]), embed_tokens(["a", "a"]), atol=1e-12)

    def test_unit_norm(self):
        assert np.linalg.norm(embed_tokens(["x", "y", "z"])) == pytest.approx(1.0)

    def test_dimension(self):
        assert embed_tokens(["q"]).shape == (DIM,)


class TestEncoders:
    def test_line_graph_node_per_edge(self):
        d = delta_for(3)
        g = line_graph(d)
        assert g.n == len(d.added_edges) + len(d.deleted_edges) + len(d.context_edges)
        assert np.array_equal(g.adjacency, g.adjacency.T)
        assert not np.diagonal(g.adjacency).any()

    def test_line_graph_adjacency_shares_endpoint(self):
        d = delta_for(5)
        g = line_graph(d)
        edges = []
        for pool_id, pool in ((0, d.added_edges), (1, d.deleted_edges), (2, d.context_edges)):
            block = sorted(
                pool,
                key=lambda e: (
                    d.vertex(e.src).sort_token(),
                    d.vertex(e.dst).sort_token(),
                    e.etype.value,
                    e.label or "",
                ),
            )
            edges.extend(block)
        for i in range(g.n):
            for j in range(g.n):
                if i != j:
                    share = bool(
                        {edges[i].src, edges[i].dst} & {edges[j].src, edges[j].dst}
                    )
                    assert bool(g.adjacency[i, j]) == share

    def test_line_graph_labels_follow_blocks(self):
        d = delta_for(4)
        g = line_graph(d)
        counts = [int((g.labels == c).sum()) for c in range(3)]
        assert counts == [len(d.added_edges), len(d.deleted_edges), len(d.context_edges)]

    def test_text_graph_chain(self):
        g = text_graph("fix null pointer check")
        assert g.n == 3  # k-1 pair nodes
        assert g.adjacency[0, 1] == 1.0  # consecutive pairs share a word
        assert g.labels[0] in (0, 1)

    def test_text_graph_empty_for_single_word(self):
        assert text_graph("fix").n == 0
        assert text_graph("").n == 0

    def test_text_graph_verb_labels(self):
        g = text_graph("please fix it")  # pairs: (please,fix), (fix,it)
        assert g.labels[0] == 0  # incoming word "fix" is in the lexicon
        assert g.labels[1] == 1  # "it" is not


class TestGcnForward:
    def test_single_node_identity_normalization(self):
        rng = np.random.default_rng(3)
        g = EncodedGraph(rng.standard_normal((1, DIM)), np.zeros((1, 1)), np.array([0]), ("A", "B"))
        p = init_gcn(2, seed=5)
        expected = np.maximum(np.maximum(g.features @ p.w1, 0) @ p.w2, 0)
        assert np.allclose(gcn_forward(g, p), expected, atol=1e-12)

    def test_zero_input_zero_output(self):
        g = EncodedGraph(np.zeros((4, DIM)), np.eye(4, k=1) + np.eye(4, k=-1), np.zeros(4, dtype=int), ("A", "B"))
        p = init_gcn(2, seed=1)
        assert not gcn_forward(g, p).any()

    def test_three_node_path_matches_dense_oracle(self):
        rng = np.random.default_rng(11)
        feats = rng.standard_normal((3, DIM))
        adj = np.array([[0.0, 1, 0], [1, 0, 1], [0, 1, 0]])
        g = EncodedGraph(feats, adj, np.array([0, 1, 0]), ("A", "B"))
        p = init_gcn(2, seed=2)
        # dense oracle computed with explicit loops
        a = adj + np.eye(3)
        d_inv = np.diag(1.0 / np.sqrt(a.sum(axis=1)))
        a_hat = d_inv @ a @ d_inv
        h1 = np.maximum(a_hat @ feats @ p.w1, 0)
        h2 = np.maximum(a_hat @ h1 @ p.w2, 0)
        assert np.allclose(gcn_forward(g, p), h2, atol=1e-12)

    def test_empty_graph_raises(self):
        g = EncodedGraph(np.zeros((0, DIM)), np.zeros((0, 0)), np.zeros(0, dtype=int), ("A", "B"))
        with pytest.raises(EmptyGraph):
            gcn_forward(g, init_gcn(2, seed=0))

    def test_output_shape(self):
        g = separable_graphs(n_graphs=1)[0]
        out = gcn_forward(g, init_gcn(3, seed=0))
        assert out.shape == (g.n, 256)

    def test_ring_normalization_row_sums(self):
        for n in (3, 4, 6, 9):
            adj = np.zeros((n, n))
            for i in range(n):
                adj[i, (i + 1) % n] = adj[(i + 1) % n, i] = 1.0
            rows = normalized_adjacency(adj).sum(axis=1)
            assert np.allclose(rows, 1.0, atol=1e-12)


class TestGcnTraining:
    def test_separable_converges(self):
        graphs = separable_graphs()
        params, losses = gcn_pretrain(graphs, epochs=200, lr=0.01, seed=0)
        assert losses[-1] < losses[0]
        assert gcn_accuracy(graphs, params) >= 0.95

    def test_zero_epochs_keeps_init(self):
        graphs = separable_graphs()
        params, losses = gcn_pretrain(graphs, epochs=0, lr=0.01, seed=4)
        init = init_gcn(3, seed=4)
        assert np.array_equal(params.w1, init.w1)
        assert np.array_equal(params.w2, init.w2)
        assert np.array_equal(params.head, init.head)
        assert losses == []

    def test_single_class_raises(self):
        graphs = separable_graphs()
        for g in graphs:
            g.labels[:] = 1
        with pytest.raises(DegenerateLabels):
            gcn_pretrain(graphs, epochs=5, lr=0.01)

    def test_line_graph_pretraining_runs(self):
        graphs = [line_graph(delta_for(s)) for s in range(6)]
        graphs = [g for g in graphs if g.n]
        params, losses = gcn_pretrain(graphs, epochs=5, lr=0.05, seed=0)
        assert len(losses) == 5
        assert np.isfinite(losses).all()
