"""Pairwise scorer that ranks candidate messages against a delta graph.

Both sides (code and text) run through GCN node encoders, then through
one convolutional scorer with a single shared parameter store: 1-D
filters of widths 2/3/4 (64 each) over the node sequence, max-pooled,
and densely projected to a 512-dim vector per side. The score is a
sigmoid over the Euclidean distance between the two vectors:

    literal mode     sigmoid(d)   (monotone increasing in distance)
    similarity mode  sigmoid(-d)  (closer pairs score higher; default)

Training is binary cross-entropy on similarity-mode scores with manual
backpropagation; gradients from both sides land in the one store.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..delta import DeltaGraph
from ..errors import DeltaCommitError
from ..generate import CandidateMessage
from ..metrics import tokenize
from .encoders import EncodedGraph, line_graph, text_graph
from .gcn import (
    HIDDEN,
    DegenerateLabels,
    GcnParams,
    _forward_cached,
    init_gcn,
)

CONV_WIDTHS = (2, 3, 4)
N_FILTERS = 64
POOLED = N_FILTERS * len(CONV_WIDTHS)  # 192
OUT_DIM = 512
DECISION_SCORE = 0.25  # similarity score at distance ln(3); midpoint of (0, 0.5]


class ScoreMode(enum.Enum):
    PAPER_LITERAL = "literal"
    SIMILARITY = "similarity"


class EmptyInputs(DeltaCommitError):
    """Both the delta and the message are empty; nothing to score."""


@dataclass
class ScorerParams:
    conv: dict[int, np.ndarray]  # width -> (64, width, 256)
    dense: np.ndarray  # 192 x 512

    def check_shapes(self) -> None:
        assert set(self.conv) == set(CONV_WIDTHS)
        for w, f in self.conv.items():
            assert f.shape == (N_FILTERS, w, HIDDEN), (w, f.shape)
        assert self.dense.shape == (POOLED, OUT_DIM), self.dense.shape

    def flat(self) -> np.ndarray:
        parts = [self.conv[w].ravel() for w in CONV_WIDTHS] + [self.dense.ravel()]
        return np.concatenate(parts)

    def set_flat(self, values: np.ndarray) -> None:
        pos = 0
        for w in CONV_WIDTHS:
            size = self.conv[w].size
            self.conv[w][...] = values[pos : pos + size].reshape(self.conv[w].shape)
            pos += size
        self.dense[...] = values[pos:].reshape(self.dense.shape)


def init_scorer(seed: int = 0) -> ScorerParams:
    rng = np.random.default_rng(seed)
    conv = {}
    for w in CONV_WIDTHS:
        bound = 1.0 / np.sqrt(w * HIDDEN)
        conv[w] = rng.uniform(-bound, bound, size=(N_FILTERS, w, HIDDEN))
    bound = 1.0 / np.sqrt(POOLED)
    dense = rng.uniform(-bound, bound, size=(POOLED, OUT_DIM))
    params = ScorerParams(conv=conv, dense=dense)
    params.check_shapes()
    return params


@dataclass
class QaModel:
    """All trainable state: one GCN per side, one shared scorer store."""

    code_gcn: GcnParams
    text_gcn: GcnParams
    scorer: ScorerParams
    seed: int = 0


def init_model(seed: int = 0) -> QaModel:
    return QaModel(
        code_gcn=init_gcn(n_classes=3, seed=seed),
        text_gcn=init_gcn(n_classes=2, seed=seed + 1),
        scorer=init_scorer(seed=seed + 2),
        seed=seed,
    )


@dataclass(frozen=True)
class TrainExample:
    delta: DeltaGraph
    message: str
    label: int  # 1 preferred, 0 not preferred


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


# -- forward/backward through the shared conv stack ------------------------


def _pad(x: np.ndarray) -> np.ndarray:
    """Zero-pad short (or empty) sequences up to the widest filter."""
    n = x.shape[0]
    if n >= max(CONV_WIDTHS):
        return x
    out = np.zeros((max(CONV_WIDTHS), HIDDEN))
    if n:
        out[:n] = x
    return out


def _make_windows(x: np.ndarray) -> dict[int, np.ndarray]:
    """Contiguous (positions, width*channels) convolution input per width."""
    xp = _pad(x)
    return {
        w: np.ascontiguousarray(
            sliding_window_view(xp, (w, HIDDEN)).reshape(-1, w * HIDDEN)
        )
        for w in CONV_WIDTHS
    }


def _side_forward_on(windows: dict[int, np.ndarray], params: ScorerParams):
    acts = {}
    argmaxes = {}
    pooled_parts = []
    for w in CONV_WIDTHS:
        raw = windows[w] @ params.conv[w].reshape(N_FILTERS, -1).T
        act = np.maximum(raw, 0.0)
        acts[w] = act
        argmaxes[w] = act.argmax(axis=0)
        pooled_parts.append(act.max(axis=0))
    m = np.concatenate(pooled_parts)
    assert m.shape == (POOLED,), m.shape
    vec = m @ params.dense
    assert vec.shape == (OUT_DIM,), vec.shape
    return vec, (windows, acts, argmaxes, m)


def _side_forward(x: np.ndarray, params: ScorerParams):
    """(512-dim vector, cache) for one side's node representations."""
    return _side_forward_on(_make_windows(x), params)


def _side_backward(dvec: np.ndarray, cache, params: ScorerParams, grads: "ScorerGrads") -> None:
    windows, acts, argmaxes, m = cache
    grads.dense += np.outer(m, dvec)
    dm = params.dense @ dvec
    for idx, w in enumerate(CONV_WIDTHS):
        dpool = dm[idx * N_FILTERS : (idx + 1) * N_FILTERS]
        act = acts[w]
        draw = np.zeros_like(act)
        rows = argmaxes[w]
        cols = np.arange(N_FILTERS)
        alive = act[rows, cols] > 0.0
        draw[rows[alive], cols[alive]] = dpool[alive]
        grads.conv[w] += (draw.T @ windows[w]).reshape(N_FILTERS, w, HIDDEN)


@dataclass
class ScorerGrads:
    conv: dict[int, np.ndarray] = field(default_factory=dict)
    dense: np.ndarray = None  # type: ignore[assignment]

    @classmethod
    def zeros(cls) -> "ScorerGrads":
        return cls(
            conv={w: np.zeros((N_FILTERS, w, HIDDEN)) for w in CONV_WIDTHS},
            dense=np.zeros((POOLED, OUT_DIM)),
        )

    def flat(self) -> np.ndarray:
        parts = [self.conv[w].ravel() for w in CONV_WIDTHS] + [self.dense.ravel()]
        return np.concatenate(parts)

    def scale(self, factor: float) -> None:
        for w in CONV_WIDTHS:
            self.conv[w] *= factor
        self.dense *= factor


# -- pair scoring -----------------------------------------------------------


def pair_node_features(
    model: QaModel, delta: DeltaGraph, message: str
) -> tuple[np.ndarray, np.ndarray]:
    """GCN node representations for both sides; empty sides give 0 x 256."""
    code = line_graph(delta, seed=model.seed)
    if code.n:
        x_code, _ = _forward_cached(code, model.code_gcn)
    else:
        x_code = np.zeros((0, HIDDEN))
    text = text_graph(message, seed=model.seed)
    if text.n:
        x_text, _ = _forward_cached(text, model.text_gcn)
    else:
        x_text = np.zeros((0, HIDDEN))
    return x_code, x_text


def _distance_on(
    model: QaModel, win_code: dict[int, np.ndarray], win_text: dict[int, np.ndarray]
):
    p, cache_p = _side_forward_on(win_code, model.scorer)
    q, cache_q = _side_forward_on(win_text, model.scorer)
    d = float(np.sqrt(np.sum((p - q) ** 2)))
    return d, p, q, cache_p, cache_q


def _distance_and_sides(model: QaModel, x_code: np.ndarray, x_text: np.ndarray):
    return _distance_on(model, _make_windows(x_code), _make_windows(x_text))


def score_pair(
    delta: DeltaGraph,
    message: str,
    model: QaModel,
    mode: ScoreMode = ScoreMode.SIMILARITY,
) -> float:
    """Probability that the message fits the change.

    Literal mode returns sigmoid(distance) and so always lands in
    [0.5, 1); similarity mode returns sigmoid(-distance) in (0, 0.5].
    """
    if delta.is_empty() and not tokenize(message):
        raise EmptyInputs("both the delta and the message are empty")
    x_code, x_text = pair_node_features(model, delta, message)
    d, *_ = _distance_and_sides(model, x_code, x_text)
    return sigmoid(d) if mode == ScoreMode.PAPER_LITERAL else sigmoid(-d)


def _bce_loss_and_dd(d: float, label: int) -> tuple[float, float]:
    """Stable BCE for s = sigmoid(-d); returns (loss, dL/dd)."""
    u = -d
    loss = max(u, 0.0) - u * label + np.log1p(np.exp(-abs(u)))
    s = sigmoid(u)
    return float(loss), float(label - s)


def _example_grads(
    model: QaModel,
    win_code: dict[int, np.ndarray],
    win_text: dict[int, np.ndarray],
    label: int,
    grads: ScorerGrads,
) -> float:
    d, p, q, cache_p, cache_q = _distance_on(model, win_code, win_text)
    loss, dld = _bce_loss_and_dd(d, label)
    if d > 1e-12:
        unit = (p - q) / d
    else:
        unit = np.zeros(OUT_DIM)
    _side_backward(dld * unit, cache_p, model.scorer, grads)
    _side_backward(-dld * unit, cache_q, model.scorer, grads)
    return loss


def train_scorer(
    examples: Sequence[TrainExample],
    epochs: int,
    lr: float,
    model: Optional[QaModel] = None,
    seed: int = 0,
) -> tuple[QaModel, list[float]]:
    """Fit the shared scorer store by full-batch gradient descent.

    GCN parameters stay fixed here (they are trained on their own node
    classification tasks); node features are precomputed once per example.
    Returns the model plus the per-epoch mean loss trace.
    """
    labels = {ex.label for ex in examples}
    if labels != {0, 1}:
        raise DegenerateLabels(f"need both labels, got {sorted(labels)}")
    if model is None:
        model = init_model(seed)
    feats = []
    for ex in examples:
        x_code, x_text = pair_node_features(model, ex.delta, ex.message)
        feats.append((_make_windows(x_code), _make_windows(x_text)))
    losses = []
    for _ in range(epochs):
        grads = ScorerGrads.zeros()
        total = 0.0
        for (win_code, win_text), ex in zip(feats, examples):
            total += _example_grads(model, win_code, win_text, ex.label, grads)
        grads.scale(1.0 / len(examples))
        for w in CONV_WIDTHS:
            model.scorer.conv[w] -= lr * grads.conv[w]
        model.scorer.dense -= lr * grads.dense
        losses.append(total / len(examples))
    return model, losses


def scorer_accuracy(model: QaModel, examples: Sequence[TrainExample]) -> float:
    """Fraction predicted correctly; the decision threshold sits at the
    midpoint of the attainable similarity range (score 0.25, distance ln 3)."""
    correct = 0
    for ex in examples:
        s = score_pair(ex.delta, ex.message, model)
        correct += int((s >= DECISION_SCORE) == bool(ex.label))
    return correct / len(examples)


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    checked: int
    epsilon: float


def grad_check(
    model: QaModel,
    example: TrainExample,
    epsilon: float = 1e-5,
    sample_fraction: float = 0.01,
    seed: int = 0,
) -> GradCheckReport:
    """Analytic vs central-difference gradients of the BCE loss over a
    random sample of scorer parameters."""
    if not 1e-6 <= epsilon <= 1e-4:
        raise ValueError("epsilon must lie in [1e-6, 1e-4]")
    x_code, x_text = pair_node_features(model, example.delta, example.message)
    win_code = _make_windows(x_code)
    win_text = _make_windows(x_text)

    grads = ScorerGrads.zeros()
    _example_grads(model, win_code, win_text, example.label, grads)
    analytic = grads.flat()

    flat = model.scorer.flat()
    rng = np.random.default_rng(seed)
    n_sample = max(1, int(len(flat) * sample_fraction))
    indices = rng.choice(len(flat), size=n_sample, replace=False)

    def loss_at(values: np.ndarray) -> float:
        model.scorer.set_flat(values)
        d, *_ = _distance_on(model, win_code, win_text)
        return _bce_loss_and_dd(d, example.label)[0]

    # central differences carry ~eps_machine * |loss| / (2 epsilon) of
    # roundoff (about 4e-12 here), so differences below the floor are
    # measurement noise, not gradient disagreement
    floor = 1e-6
    max_rel = 0.0
    try:
        for idx in indices:
            orig = flat[idx]
            flat[idx] = orig + epsilon
            hi = loss_at(flat)
            flat[idx] = orig - epsilon
            lo = loss_at(flat)
            flat[idx] = orig
            numeric = (hi - lo) / (2.0 * epsilon)
            denom = max(abs(analytic[idx]), abs(numeric), floor)
            max_rel = max(max_rel, abs(analytic[idx] - numeric) / denom)
    finally:
        model.scorer.set_flat(flat)
    return GradCheckReport(max_rel_error=float(max_rel), checked=n_sample, epsilon=epsilon)


def rank_candidates(
    delta: DeltaGraph,
    candidates: Sequence[CandidateMessage],
    model: QaModel,
) -> list[CandidateMessage]:
    """Attach similarity scores and sort descending; ties keep input order."""
    if not candidates:
        raise ValueError("need at least one candidate")
    scored = [
        replace(c, rank_score=score_pair(delta, c.text, model)) for c in candidates
    ]
    return sorted(scored, key=lambda c: -c.rank_score)
