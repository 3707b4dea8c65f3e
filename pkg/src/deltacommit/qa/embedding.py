"""Deterministic token embeddings.

Each distinct token maps to a fixed 768-dim unit vector drawn from a
generator seeded by the token's content hash, so embeddings need no
model files and are reproducible across processes and platforms. A token
sequence embeds as the L2-normalized mean of its token vectors; an empty
sequence is the zero vector.

Any callable with this signature can stand in (an external embedding
service, for instance); the rest of the package only depends on the
(tokens) -> vector contract.
"""

from __future__ import annotations

import hashlib
from typing import Callable, Iterable, Sequence

import numpy as np

DIM = 768

Embedder = Callable[[Sequence[str]], np.ndarray]

_cache: dict[tuple[int, str], np.ndarray] = {}


def token_vector(token: str, seed: int = 0) -> np.ndarray:
    key = (seed, token)
    vec = _cache.get(key)
    if vec is None:
        h = hashlib.sha256(f"{seed}\x1f{token}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(h[:8], "big"))
        vec = rng.standard_normal(DIM)
        vec /= np.linalg.norm(vec)
        vec.flags.writeable = False
        _cache[key] = vec
    return vec


def embed_tokens(tokens: Sequence[str], seed: int = 0) -> np.ndarray:
    """L2-normalized mean of per-token unit vectors; zeros when empty."""
    toks = [t for t in tokens if t]
    if not toks:
        return np.zeros(DIM)
    acc = np.zeros(DIM)
    for t in toks:
        acc += token_vector(t, seed)
    acc /= len(toks)
    norm = np.linalg.norm(acc)
    if norm > 0:
        acc /= norm
    return acc


def embed_many(groups: Iterable[Sequence[str]], seed: int = 0) -> np.ndarray:
    rows = [embed_tokens(g, seed) for g in groups]
    if not rows:
        return np.zeros((0, DIM))
    return np.stack(rows)
