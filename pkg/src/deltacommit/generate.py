"""Candidate message generation.

Two backends produce candidates for a change:

* a deterministic template backend driven by delta statistics and salient
  tokens (no network, reproducible byte for byte), and
* an HTTP chat-completion client with zero/one/multi-shot prompts, where
  shot examples are the most similar training diffs under cosine
  similarity of term-weight vectors.

The term-weight embedder is deterministic (tf-idf over tokenized diffs);
an external embedding service can replace it behind the same build/query
functions.
"""

from __future__ import annotations

import enum
import json
import math
import os
import time
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import requests

from .corpus import CommitRecord
from .delta import DeltaGraph
from .errors import DeltaCommitError
from .metrics import tokenize

MAX_GEN_TOKENS = 80
PROMPT_TEMPLATE_IDS = ("complete", "relevant", "comprehensive")
DEFAULT_CHAR_BUDGET = 12000

STATEMENT_KIND_NAMES = frozenset(
    {"DECL", "ASSIGN", "IF", "WHILE", "RETURN", "CALL", "BINOP", "IDENT", "LITERAL", "FIELD_ACCESS"}
)


class Backend(enum.Enum):
    TEMPLATE = "template"
    LLM = "llm"


class PromptSetting(enum.Enum):
    NONE = "none"
    ZERO = "zero"
    ONE = "one"
    MULTI = "multi"


class EmptyCorpus(DeltaCommitError):
    """No records available to index."""


class TransportError(DeltaCommitError):
    def __init__(self, request_index: int, detail: str) -> None:
        super().__init__(f"request {request_index}: {detail}")
        self.request_index = request_index


class AuthError(DeltaCommitError):
    def __init__(self, request_index: int, status: int) -> None:
        super().__init__(f"request {request_index}: authentication failed ({status})")
        self.request_index = request_index


class MalformedResponse(DeltaCommitError):
    def __init__(self, request_index: int, detail: str) -> None:
        super().__init__(f"request {request_index}: {detail}")
        self.request_index = request_index


def clip_message(text: str, max_tokens: int = MAX_GEN_TOKENS) -> str:
    """First line only, clipped to a whitespace-token budget."""
    line = text.strip().splitlines()[0].strip() if text.strip() else ""
    tokens = line.split()
    return " ".join(tokens[:max_tokens])


@dataclass(frozen=True)
class CandidateMessage:
    text: str
    backend: Backend
    prompt_setting: PromptSetting = PromptSetting.NONE
    rank_score: Optional[float] = None

    def __post_init__(self):
        if not self.text or "\n" in self.text:
            raise ValueError("candidate text must be a non-empty single line")
        if len(self.text.split()) > MAX_GEN_TOKENS:
            raise ValueError("candidate text exceeds the token cap")


# -- template backend --------------------------------------------------------


def _display_method(signature: str) -> str:
    return signature.split("(", 1)[0] if signature else "code"


def _salient_signature(delta: DeltaGraph) -> str:
    counts: dict[str, int] = {}
    for pool in (delta.added_vertices, delta.deleted_vertices):
        for v in pool.values():
            if v.signature and "." in v.signature:
                counts[v.signature] = counts.get(v.signature, 0) + 1
    if not counts:
        return ""
    return min(counts, key=lambda s: (-counts[s], s))


def _statement_counts(delta: DeltaGraph) -> tuple[int, int]:
    def count(pool) -> int:
        return sum(1 for v in pool.values() if v.kind.value in STATEMENT_KIND_NAMES)

    return count(delta.added_vertices), count(delta.deleted_vertices)


def _operator_change(delta: DeltaGraph) -> Optional[tuple[str, str]]:
    added = sorted({v.code for v in delta.added_vertices.values() if v.kind.value == "BINOP"})
    removed = sorted({v.code for v in delta.deleted_vertices.values() if v.kind.value == "BINOP"})
    if len(added) == 1 and len(removed) == 1 and added != removed:
        return removed[0], added[0]
    return None


def _salient_tokens(delta: DeltaGraph, limit: int = 3) -> list[str]:
    counts: dict[str, int] = {}
    for pool in (delta.added_vertices, delta.deleted_vertices):
        for v in pool.values():
            if v.kind.value in ("IDENT", "CALL", "FIELD_ACCESS") and v.code:
                counts[v.code] = counts.get(v.code, 0) + 1
    ranked = sorted(counts, key=lambda t: (-counts[t], t))
    return ranked[:limit]


def template_generate(delta: DeltaGraph, n: int = 5) -> list[CandidateMessage]:
    """Deterministic candidates from delta statistics.

    An empty delta short-circuits to the fixed degenerate message. For
    non-empty deltas the template list is expanded in a fixed order and
    deduplicated; at most n (and at most the number of distinct
    expansions) candidates come back.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if delta.is_empty():
        return [CandidateMessage("no functional change detected", Backend.TEMPLATE)]

    method = _display_method(_salient_signature(delta))
    k_add, k_del = _statement_counts(delta)
    texts: list[str] = []

    op = _operator_change(delta)
    if op is not None:
        texts.append(f"update {method}: change condition '{op[0]}' to '{op[1]}'")
    texts.append(f"update {method}: add {k_add} statements, remove {k_del}")
    salient = _salient_tokens(delta)
    if salient:
        texts.append(f"update {method}: touch {', '.join(salient)}")
    if k_add and not k_del:
        texts.append(f"add logic to {method}")
    if k_del and not k_add:
        texts.append(f"remove logic from {method}")
    if k_add and k_del:
        texts.append(f"rework logic in {method}")
    texts.append(f"modify {method}")

    out: list[CandidateMessage] = []
    seen: set[str] = set()
    for text in texts:
        text = clip_message(text)
        if text and text not in seen:
            seen.add(text)
            out.append(CandidateMessage(text, Backend.TEMPLATE))
        if len(out) == n:
            break
    return out


# -- shot retrieval -----------------------------------------------------------


@dataclass(frozen=True)
class ShotEntry:
    repo: str
    sha: str
    path: str
    diff: str
    message: str
    vector: dict[str, float]  # L2-normalized term weights

    @property
    def record_id(self) -> tuple[str, str, str]:
        return (self.repo, self.sha, self.path)


@dataclass
class ShotIndex:
    entries: list[ShotEntry]
    idf: dict[str, float]
    n_docs: int

    def vector_for(self, diff: str) -> dict[str, float]:
        counts: dict[str, int] = {}
        for tok in tokenize(diff):
            counts[tok] = counts.get(tok, 0) + 1
        vec = {
            t: c * self.idf.get(t, math.log((1 + self.n_docs) / 1.0) + 1.0)
            for t, c in counts.items()
        }
        return _normalize(vec)


def _normalize(vec: dict[str, float]) -> dict[str, float]:
    norm = math.sqrt(sum(w * w for w in vec.values()))
    if norm == 0:
        return dict(vec)
    return {t: w / norm for t, w in vec.items()}


def cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if len(b) < len(a):
        a, b = b, a
    return sum(w * b.get(t, 0.0) for t, w in a.items())


def build_shot_index(records: Sequence[CommitRecord]) -> ShotIndex:
    """tf-idf vectors over tokenized diff texts, L2-normalized.

    idf is smoothed (log((1+N)/(1+df)) + 1) so every seen term keeps a
    positive weight even in single-document corpora.
    """
    if not records:
        raise EmptyCorpus("cannot index an empty train split")
    docs = [tokenize(r.diff_text) for r in records]
    df: dict[str, int] = {}
    for toks in docs:
        for t in set(toks):
            df[t] = df.get(t, 0) + 1
    n = len(records)
    idf = {t: math.log((1 + n) / (1 + d)) + 1.0 for t, d in df.items()}
    entries = []
    for rec, toks in zip(records, docs):
        counts: dict[str, int] = {}
        for t in toks:
            counts[t] = counts.get(t, 0) + 1
        vec = _normalize({t: c * idf[t] for t, c in counts.items()})
        entries.append(
            ShotEntry(rec.repo, rec.sha, rec.path, rec.diff_text, rec.message, vec)
        )
    return ShotIndex(entries=entries, idf=idf, n_docs=n)


def retrieve_shots(
    index: ShotIndex,
    query_diff: str,
    k: int,
    exclude: Optional[tuple[str, str, str]] = None,
) -> list[tuple[str, str]]:
    """Top-k (diff, message) pairs by cosine similarity to the query.

    Ties break on (repo, sha) lexicographically; k beyond the corpus size
    returns everything, sorted. Pass the querying record's id as exclude
    to keep it out of its own shot list.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    qvec = index.vector_for(query_diff)
    scored = [
        (-cosine(qvec, e.vector), e.repo, e.sha, e.path, e)
        for e in index.entries
        if exclude is None or e.record_id != exclude
    ]
    scored.sort(key=lambda t: t[:4])
    return [(t[4].diff, t[4].message) for t in scored[:k]]


# -- prompt construction -------------------------------------------------------


@dataclass(frozen=True)
class PromptSpec:
    setting: PromptSetting
    template_id: str = "complete"
    shots: tuple[tuple[str, str], ...] = ()  # (diff, message), best first
    reasoning_preamble: bool = True

    def __post_init__(self):
        if self.setting == PromptSetting.ZERO and self.shots:
            raise ValueError("zero-shot prompts take no examples")
        if self.setting == PromptSetting.ONE and len(self.shots) != 1:
            raise ValueError("one-shot prompts take exactly one example")
        if self.setting == PromptSetting.MULTI and not 2 <= len(self.shots) <= 5:
            raise ValueError("multi-shot prompts take 2 to 5 examples")
        if self.setting == PromptSetting.NONE:
            raise ValueError("prompt setting NONE is reserved for the template backend")
        if self.template_id not in PROMPT_TEMPLATE_IDS:
            raise ValueError(f"unknown template id {self.template_id!r}")


REASONING_PREAMBLE = (
    "Work step by step: first describe what the input diff changes, then "
    "state what the output message must convey, then write the message."
)


def load_prompt_template(template_id: str) -> str:
    path = resources.files("deltacommit").joinpath(f"data/prompts/{template_id}.txt")
    return path.read_text(encoding="utf-8").strip()


def _assemble(instruction: str, preamble: str, shots: Sequence[tuple[str, str]], diff: str) -> str:
    parts = [instruction]
    if preamble:
        parts.append(preamble)
    for shot_diff, shot_msg in shots:
        parts.append(f"DIFF:\n{shot_diff}\nMESSAGE: {shot_msg}")
    parts.append(f"DIFF:\n{diff}\nMESSAGE:")
    return "\n\n".join(parts)


def build_prompt(
    spec: PromptSpec, diff: str, char_budget: int = DEFAULT_CHAR_BUDGET
) -> str:
    """Deterministic prompt text under a character budget.

    Over budget, the lowest-similarity shot is dropped first (shots are
    ordered best first); once no shots remain the query diff is cut.
    """
    instruction = load_prompt_template(spec.template_id)
    preamble = REASONING_PREAMBLE if spec.reasoning_preamble else ""
    shots = list(spec.shots)
    prompt = _assemble(instruction, preamble, shots, diff)
    while len(prompt) > char_budget and shots:
        shots.pop()
        prompt = _assemble(instruction, preamble, shots, diff)
    if len(prompt) > char_budget:
        overshoot = len(prompt) - char_budget
        cut_diff = diff[: max(0, len(diff) - overshoot)]
        prompt = _assemble(instruction, preamble, shots, cut_diff)
    return prompt


# -- HTTP backend ---------------------------------------------------------------

ENV_ENDPOINT = "DELTACOMMIT_ENDPOINT"
ENV_TOKEN = "DELTACOMMIT_TOKEN"

PROMPT_SENTINEL = "{{PROMPT}}"
MAX_ATTEMPTS = 3


@dataclass(frozen=True)
class EndpointConfig:
    """Where and how to call the completion service.

    The request body is a JSON template with a sentinel string replaced by
    the prompt; the response text is located by a /-separated field path
    (integers index arrays), so non-OpenAI-shaped providers fit too.
    """

    url: str
    auth_token: str = ""
    model: str = ""
    request_template: Optional[dict] = None
    response_path: str = "choices/0/message/content"
    timeout: float = 30.0
    backoff: float = 0.5
    extra: dict = field(default_factory=dict)  # sampling params passed through

    @classmethod
    def from_env(cls, **overrides) -> "EndpointConfig":
        url = overrides.pop("url", os.environ.get(ENV_ENDPOINT, ""))
        token = overrides.pop("auth_token", os.environ.get(ENV_TOKEN, ""))
        return cls(url=url, auth_token=token, **overrides)

    def body(self, prompt: str) -> dict:
        if self.request_template is not None:
            return _fill(self.request_template, prompt)
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": PROMPT_SENTINEL}],
        }
        body.update(self.extra)
        return _fill(body, prompt)


def _fill(node, prompt: str):
    if isinstance(node, dict):
        return {k: _fill(v, prompt) for k, v in node.items()}
    if isinstance(node, list):
        return [_fill(v, prompt) for v in node]
    if isinstance(node, str) and PROMPT_SENTINEL in node:
        return node.replace(PROMPT_SENTINEL, prompt)
    return node


def _extract(payload, path: str, request_index: int) -> str:
    cur = payload
    for seg in path.split("/"):
        if isinstance(cur, list):
            try:
                cur = cur[int(seg)]
            except (ValueError, IndexError):
                raise MalformedResponse(request_index, f"no element {seg!r} in response")
        elif isinstance(cur, dict) and seg in cur:
            cur = cur[seg]
        else:
            raise MalformedResponse(request_index, f"missing field {seg!r} in response")
    if not isinstance(cur, str):
        raise MalformedResponse(request_index, "response text field is not a string")
    return cur


def llm_generate(
    prompt: str,
    config: EndpointConfig,
    n: int = 5,
    prompt_setting: PromptSetting = PromptSetting.ZERO,
) -> list[CandidateMessage]:
    """One request per candidate; first response line, token-capped.

    Transient failures (connection errors, 5xx) are retried up to
    MAX_ATTEMPTS with exponential backoff; 401/403 raise AuthError
    immediately. Errors identify the failing request index.
    """
    if not config.url:
        raise TransportError(0, "no endpoint URL configured")
    headers = {"Content-Type": "application/json"}
    if config.auth_token:
        headers["Authorization"] = f"Bearer {config.auth_token}"
    out: list[CandidateMessage] = []
    for i in range(n):
        payload = None
        last_error = "no attempt made"
        for attempt in range(MAX_ATTEMPTS):
            if attempt:
                time.sleep(config.backoff * (2 ** (attempt - 1)))
            try:
                resp = requests.post(
                    config.url,
                    json=config.body(prompt),
                    headers=headers,
                    timeout=config.timeout,
                )
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if resp.status_code in (401, 403):
                raise AuthError(i, resp.status_code)
            if resp.status_code >= 500:
                last_error = f"server returned {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise TransportError(i, f"unexpected status {resp.status_code}")
            try:
                payload = resp.json()
            except ValueError:
                raise MalformedResponse(i, "response body is not JSON")
            break
        if payload is None:
            raise TransportError(i, f"gave up after {MAX_ATTEMPTS} attempts: {last_error}")
        text = clip_message(_extract(payload, config.response_path, i))
        if not text:
            raise MalformedResponse(i, "response text is empty")
        out.append(CandidateMessage(text, Backend.LLM, prompt_setting))
    return out
