"""Text generation metrics: smoothed n-gram precision (BLEU style),
longest-common-subsequence F1 (ROUGE-L), and unigram-alignment score
(METEOR style, exact match only).

All three share one tokenizer (lowercase, split at whitespace and
punctuation boundaries) so scores are comparable. Sentence scores are
percentages in [0, 100]; corpus scores are arithmetic means.

Normative choices fixed here: every n-gram precision gets add-one
smoothing on numerator and denominator (a candidate with no n-grams of
some order contributes 1/1); ROUGE-L uses the balanced F-measure; the
alignment metric uses exact matching with the classic constants
(recall-weighted harmonic mean 10PR/(R+9P), penalty 0.5 * (chunks/m)^3).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

from .errors import DeltaCommitError

Text = Union[str, Sequence[str]]

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

# alignments larger than this fall back to a greedy chunk search
_EXACT_CHUNK_LIMIT = 12


class EmptyReference(DeltaCommitError):
    """The reference text has no tokens."""


class EmptyCorpus(DeltaCommitError):
    """No pairs to aggregate."""


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _tokens(text: Text) -> list[str]:
    if isinstance(text, str):
        return tokenize(text)
    return [t.lower() for t in text]


def _ngram_counts(tokens: list[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def bleu_norm(candidate: Text, reference: Text, max_n: int = 4) -> tuple[float, ...]:
    """Cumulative smoothed sentence scores for n = 1..max_n, as percentages.

    p_n = (clipped matches + 1) / (candidate n-grams + 1); brevity penalty
    exp(1 - r/c) when the candidate is shorter than the reference.
    """
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not ref:
        raise EmptyReference("reference has no tokens")
    if not cand:
        return tuple(0.0 for _ in range(max_n))
    c, r = len(cand), len(ref)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    log_precisions = []
    for n in range(1, max_n + 1):
        cand_grams = _ngram_counts(cand, n)
        ref_grams = _ngram_counts(ref, n)
        matches = sum(min(cnt, ref_grams.get(g, 0)) for g, cnt in cand_grams.items())
        total = sum(cand_grams.values())
        log_precisions.append(math.log((matches + 1) / (total + 1)))
    scores = []
    for k in range(1, max_n + 1):
        scores.append(100.0 * bp * math.exp(sum(log_precisions[:k]) / k))
    return tuple(scores)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        cur = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[len(b)]


def rouge_l(candidate: Text, reference: Text) -> float:
    """Balanced F-measure over the longest common subsequence, x100."""
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not ref:
        raise EmptyReference("reference has no tokens")
    if not cand:
        return 0.0
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(cand)
    r = lcs / len(ref)
    return 100.0 * 2.0 * p * r / (p + r)


def _match_need(cand: list[str], ref: list[str]) -> dict[str, int]:
    need = {}
    for w in set(cand):
        k = min(cand.count(w), ref.count(w))
        if k:
            need[w] = k
    return need


def _min_chunks_exact(cand: tuple[str, ...], ref: tuple[str, ...], need: dict[str, int]) -> int:
    """Fewest contiguous aligned runs over all maximum alignments.

    Exhaustive search with memoization: scan candidate positions left to
    right, either skipping an occurrence (when enough remain to satisfy
    the per-word quota) or opening a run of any feasible length.
    """
    total = sum(need.values())

    @lru_cache(maxsize=None)
    def best(i: int, avail_ref: frozenset, need_t: tuple) -> int:
        need_d = dict(need_t)
        remaining = sum(need_d.values())
        if remaining == 0:
            return 0
        if i >= len(cand):
            return 10**9  # quota not met on this branch
        w = cand[i]
        results = []
        later = sum(1 for j in range(i + 1, len(cand)) if cand[j] == w)
        if need_d.get(w, 0) == 0 or later >= need_d.get(w, 0):
            results.append(best(i + 1, avail_ref, need_t))
        if need_d.get(w, 0) > 0:
            for j in sorted(avail_ref):
                if ref[j] != w:
                    continue
                # open a run at (i, j) and try every feasible length
                length = 0
                used_ref = []
                nd = dict(need_d)
                while (
                    i + length < len(cand)
                    and j + length < len(ref)
                    and (j + length) in avail_ref
                    and cand[i + length] == ref[j + length]
                    and nd.get(cand[i + length], 0) > 0
                ):
                    nd[cand[i + length]] -= 1
                    used_ref.append(j + length)
                    length += 1
                    results.append(
                        1
                        + best(
                            i + length,
                            avail_ref - frozenset(used_ref),
                            tuple(sorted(nd.items())),
                        )
                    )
        return min(results) if results else 10**9

    res = best(0, frozenset(range(len(ref))), tuple(sorted(need.items())))
    best.cache_clear()
    return res if res < 10**9 else total


def _min_chunks_greedy(cand: list[str], ref: list[str], need: dict[str, int]) -> int:
    """Longest-common-run-first approximation for long inputs."""
    avail_c = set(range(len(cand)))
    avail_r = set(range(len(ref)))
    nd = dict(need)
    chunks = 0
    while sum(nd.values()) > 0:
        best_run = None  # (length, i, j)
        for i in sorted(avail_c):
            if nd.get(cand[i], 0) == 0:
                continue
            for j in sorted(avail_r):
                if ref[j] != cand[i]:
                    continue
                length = 0
                trial = dict(nd)
                while (
                    i + length in avail_c
                    and j + length in avail_r
                    and i + length < len(cand)
                    and j + length < len(ref)
                    and cand[i + length] == ref[j + length]
                    and trial.get(cand[i + length], 0) > 0
                ):
                    trial[cand[i + length]] -= 1
                    length += 1
                if length and (best_run is None or length > best_run[0]):
                    best_run = (length, i, j)
        if best_run is None:
            break
        length, i, j = best_run
        for k in range(length):
            avail_c.discard(i + k)
            avail_r.discard(j + k)
            nd[cand[i + k]] -= 1
        chunks += 1
    return chunks


def meteor(candidate: Text, reference: Text) -> float:
    """Unigram alignment score: recall-weighted harmonic mean with a
    fragmentation penalty; exact token matching only."""
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not ref:
        raise EmptyReference("reference has no tokens")
    if not cand:
        return 0.0
    need = _match_need(cand, ref)
    m = sum(need.values())
    if m == 0:
        return 0.0
    if m <= _EXACT_CHUNK_LIMIT and len(cand) <= 2 * _EXACT_CHUNK_LIMIT:
        chunks = _min_chunks_exact(tuple(cand), tuple(ref), need)
    else:
        chunks = _min_chunks_greedy(cand, ref, need)
    p = m / len(cand)
    r = m / len(ref)
    f_mean = 10.0 * p * r / (r + 9.0 * p)
    penalty = 0.5 * (chunks / m) ** 3
    return 100.0 * f_mean * (1.0 - penalty)


@dataclass(frozen=True)
class MetricReport:
    bleu1: float
    bleu2: float
    bleu3: float
    bleu4: float
    meteor: float
    rouge_l: float
    n: int

    def as_dict(self) -> dict:
        return {
            "bleu1": self.bleu1,
            "bleu2": self.bleu2,
            "bleu3": self.bleu3,
            "bleu4": self.bleu4,
            "meteor": self.meteor,
            "rouge_l": self.rouge_l,
            "n": self.n,
        }


def sentence_report(candidate: Text, reference: Text) -> MetricReport:
    b = bleu_norm(candidate, reference)
    return MetricReport(
        bleu1=b[0],
        bleu2=b[1],
        bleu3=b[2],
        bleu4=b[3],
        meteor=meteor(candidate, reference),
        rouge_l=rouge_l(candidate, reference),
        n=1,
    )


def corpus_report(pairs: Sequence[tuple[Text, Text]]) -> MetricReport:
    """Arithmetic mean of sentence scores over (candidate, reference) pairs."""
    if not pairs:
        raise EmptyCorpus("no pairs to score")
    reports = [sentence_report(c, r) for c, r in pairs]
    n = len(reports)
    return MetricReport(
        bleu1=sum(r.bleu1 for r in reports) / n,
        bleu2=sum(r.bleu2 for r in reports) / n,
        bleu3=sum(r.bleu3 for r in reports) / n,
        bleu4=sum(r.bleu4 for r in reports) / n,
        meteor=sum(r.meteor for r in reports) / n,
        rouge_l=sum(r.rouge_l for r in reports) / n,
        n=n,
    )
