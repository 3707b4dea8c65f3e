"""Checkpoint serialization for the ranking model.

A checkpoint is a JSON container carrying the format version, the seed,
and every weight array as (shape, flat values). JSON floats round-trip
bit-exactly through Python's repr, so saving the same model twice yields
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import DeltaCommitError
from .gcn import GcnParams
from .scorer import CONV_WIDTHS, QaModel, ScorerParams

FORMAT = "deltacommit-qa"
VERSION = 1


class CheckpointError(DeltaCommitError):
    """The checkpoint file is unreadable or structurally wrong."""


def _pack(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": arr.ravel().tolist()}


def _unpack(obj: dict, name: str) -> np.ndarray:
    try:
        arr = np.array(obj["data"], dtype=float).reshape(obj["shape"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"bad array {name!r}: {exc}") from exc
    return arr


def save_checkpoint(model: QaModel, path: Union[str, Path]) -> None:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "seed": model.seed,
        "arrays": {
            "code_gcn.w1": _pack(model.code_gcn.w1),
            "code_gcn.w2": _pack(model.code_gcn.w2),
            "code_gcn.head": _pack(model.code_gcn.head),
            "text_gcn.w1": _pack(model.text_gcn.w1),
            "text_gcn.w2": _pack(model.text_gcn.w2),
            "text_gcn.head": _pack(model.text_gcn.head),
            "scorer.dense": _pack(model.scorer.dense),
            **{
                f"scorer.conv{w}": _pack(model.scorer.conv[w])
                for w in CONV_WIDTHS
            },
        },
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")


def load_checkpoint(path: Union[str, Path]) -> QaModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CheckpointError(f"{path} is not a {FORMAT} checkpoint")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')!r}")
    arrays = doc.get("arrays")
    if not isinstance(arrays, dict):
        raise CheckpointError("checkpoint has no arrays table")

    def arr(name: str) -> np.ndarray:
        if name not in arrays:
            raise CheckpointError(f"checkpoint missing array {name!r}")
        return _unpack(arrays[name], name)

    model = QaModel(
        code_gcn=GcnParams(arr("code_gcn.w1"), arr("code_gcn.w2"), arr("code_gcn.head")),
        text_gcn=GcnParams(arr("text_gcn.w1"), arr("text_gcn.w2"), arr("text_gcn.head")),
        scorer=ScorerParams(
            conv={w: arr(f"scorer.conv{w}") for w in CONV_WIDTHS},
            dense=arr("scorer.dense"),
        ),
        seed=int(doc.get("seed", 0)),
    )
    model.code_gcn.check_shapes()
    model.text_gcn.check_shapes()
    model.scorer.check_shapes()
    return model
