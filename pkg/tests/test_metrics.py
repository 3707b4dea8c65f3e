"""Metric formula tests with brute-force oracles.

LCS is checked against exhaustive subsequence enumeration; the alignment
metric's chunk count against enumeration of all injective match
mappings. Expected values are frozen from hand evaluation of the stated
formulas.
"""

import itertools
import math

import pytest

from deltacommit.metrics import (
    EmptyCorpus,
    EmptyReference,
    MetricReport,
    bleu_norm,
    corpus_report,
    meteor,
    rouge_l,
    sentence_report,
    tokenize,
)


# -- oracles ------------------------------------------------------------------


def lcs_bruteforce(a, b):
    """Longest common subsequence by enumerating subsequences of a."""
    best = 0
    for r in range(len(a), 0, -1):
        for comb in itertools.combinations(range(len(a)), r):
            sub = [a[i] for i in comb]
            it = iter(b)
            if all(tok in it for tok in sub):
                return r
    return best


def chunks_of_mapping(mapping):
    """mapping: list of (cand_pos, ref_pos) sorted by cand_pos."""
    mapping = sorted(mapping)
    chunks = 0
    prev = None
    for c, r in mapping:
        if prev is None or c != prev[0] + 1 or r != prev[1] + 1:
            chunks += 1
        prev = (c, r)
    return chunks


def meteor_bruteforce(cand_text, ref_text):
    """Enumerate every maximum injective alignment; minimal chunk count."""
    cand, ref = tokenize(cand_text), tokenize(ref_text)
    need = {}
    for w in set(cand):
        k = min(cand.count(w), ref.count(w))
        if k:
            need[w] = k
    m = sum(need.values())
    if not ref:
        raise EmptyReference("reference empty")
    if m == 0:
        return 0.0
    per_word = []
    for w, k in sorted(need.items()):
        c_pos = [i for i, t in enumerate(cand) if t == w]
        r_pos = [j for j, t in enumerate(ref) if t == w]
        options = []
        for cs in itertools.combinations(c_pos, k):
            for rs in itertools.permutations(r_pos, k):
                options.append(list(zip(cs, rs)))
        per_word.append(options)
    best_chunks = None
    for combo in itertools.product(*per_word):
        mapping = [pair for word_pairs in combo for pair in word_pairs]
        ch = chunks_of_mapping(mapping)
        if best_chunks is None or ch < best_chunks:
            best_chunks = ch
    p = m / len(cand)
    r = m / len(ref)
    f_mean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (best_chunks / m) ** 3
    return 100.0 * f_mean * (1 - penalty)


# -- tests ---------------------------------------------------------------------


class TestTokenizer:
    def test_lowercase_and_punctuation_boundaries(self):
        assert tokenize("Fix NPE, in lock-graph!") == [
            "fix", "npe", ",", "in", "lock", "-", "graph", "!",
        ]

    def test_no_whitespace_in_tokens(self):
        for tok in tokenize("a  b\tc\nd"):
            assert not any(ch.isspace() for ch in tok)


class TestBleu:
    def test_identical_pair(self):
        scores = bleu_norm("fix null pointer", "fix null pointer")
        assert scores[0] == 100.0
        # smoothing keeps every precision at (m+1)/(h+1) = 1 here, so all
        # cumulative scores stay at 100
        assert scores == (100.0, 100.0, 100.0, 100.0)

    def test_brevity_penalty(self):
        scores = bleu_norm("fix null pointer", "fix null pointer bug")
        expected = 100.0 * math.exp(1.0 - 4.0 / 3.0)
        assert scores[0] == pytest.approx(expected, abs=1e-9)

    def test_zero_overlap_strictly_positive(self):
        scores = bleu_norm("aa bb cc", "dd ee ff")
        expected_b1 = 100.0 * (0 + 1) / (3 + 1)  # BP = 1, smoothing only
        assert scores[0] == pytest.approx(expected_b1, abs=1e-9)
        assert all(s > 0 for s in scores)

    def test_empty_candidate_scores_zero(self):
        assert bleu_norm("", "fix it") == (0.0, 0.0, 0.0, 0.0)

    def test_empty_reference_raises(self):
        with pytest.raises(EmptyReference):
            bleu_norm("fix it", "")

    def test_monotone_matched_extension(self):
        # appending a matched token to a short candidate never lowers BLEU-1
        ref = "fix null pointer bug"
        prev = bleu_norm("fix", ref)[0]
        for cand in ("fix null", "fix null pointer", "fix null pointer bug"):
            cur = bleu_norm(cand, ref)[0]
            assert cur >= prev - 1e-12
            prev = cur

    def test_range(self):
        import random

        rng = random.Random(0)
        vocab = ["a", "b", "c", "d"]
        for _ in range(200):
            cand = " ".join(rng.choice(vocab) for _ in range(rng.randrange(1, 8)))
            ref = " ".join(rng.choice(vocab) for _ in range(rng.randrange(1, 8)))
            for s in bleu_norm(cand, ref):
                assert 0.0 <= s <= 100.0


class TestRougeL:
    def test_identical(self):
        assert rouge_l("a b c d", "a b c d") == 100.0

    def test_swap_example(self):
        assert rouge_l("a b c d", "a c b d") == pytest.approx(75.0, abs=1e-9)

    def test_disjoint(self):
        assert rouge_l("a b", "c d") == 0.0

    def test_exhaustive_dp_vs_bruteforce(self):
        # all pairs of token lists up to length 5 over a binary alphabet
        # (the acceptance suite pushes this to length 7)
        from deltacommit.metrics import _lcs_length

        lists = []
        for n in range(0, 6):
            lists.extend(itertools.product("ab", repeat=n))
        for a in lists:
            for b in lists:
                assert _lcs_length(list(a), list(b)) == lcs_bruteforce(list(a), list(b))

    def test_empty_reference_raises(self):
        with pytest.raises(EmptyReference):
            rouge_l("a", "")


class TestMeteor:
    def test_zero_overlap(self):
        assert meteor("x y", "a b") == 0.0

    def test_identical_two_tokens(self):
        assert meteor("a b", "a b") == pytest.approx(93.75, abs=1e-12)

    def test_swapped_pair(self):
        assert meteor("b a", "a b") == pytest.approx(50.0, abs=1e-12)

    def test_exhaustive_alignment_oracle(self):
        import random

        rng = random.Random(1)
        vocab = ["a", "b", "c"]
        for _ in range(150):
            cand = " ".join(rng.choice(vocab) for _ in range(rng.randrange(1, 6)))
            ref = " ".join(rng.choice(vocab) for _ in range(rng.randrange(1, 6)))
            assert meteor(cand, ref) == pytest.approx(
                meteor_bruteforce(cand, ref), abs=1e-9
            ), (cand, ref)

    def test_long_input_falls_back_gracefully(self):
        cand = " ".join(f"w{i}" for i in range(60))
        ref = " ".join(f"w{i}" for i in range(60))
        assert meteor(cand, ref) == pytest.approx(100.0 * (1 - 0.5 * (1 / 60) ** 3))

    def test_empty_reference_raises(self):
        with pytest.raises(EmptyReference):
            meteor("a", "")


class TestCorpusReport:
    def test_single_pair_passthrough(self):
        rep = corpus_report([("fix it now", "fix it now")])
        single = sentence_report("fix it now", "fix it now")
        assert rep == MetricReport(**{**single.as_dict(), "n": 1})

    def test_mean_of_extremes(self):
        rep = corpus_report([("a b", "a b"), ("x y", "a b")])
        assert rep.rouge_l == pytest.approx(50.0)
        assert rep.meteor == pytest.approx(93.75 / 2)
        assert rep.n == 2

    def test_mean_matches_recompute(self):
        import random

        rng = random.Random(2)
        vocab = ["fix", "add", "remove", "cache", "null", "check"]
        pairs = []
        for _ in range(10):
            c = " ".join(rng.choice(vocab) for _ in range(rng.randrange(1, 7)))
            r = " ".join(rng.choice(vocab) for _ in range(rng.randrange(1, 7)))
            pairs.append((c, r))
        rep = corpus_report(pairs)
        mean_rouge = sum(rouge_l(c, r) for c, r in pairs) / len(pairs)
        assert rep.rouge_l == pytest.approx(mean_rouge, abs=1e-12)

    def test_empty_corpus_raises(self):
        with pytest.raises(EmptyCorpus):
            corpus_report([])

    def test_report_values_in_range(self):
        rep = corpus_report([("a b c", "c b a"), ("fix bug", "fix bug")])
        for v in rep.as_dict().values():
            assert 0 <= v <= 100 or v == 2  # n field
