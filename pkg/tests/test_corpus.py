"""Corpus loading, rule filtering, and split behavior."""

import json

import pytest

from deltacommit.corpus import (
    BOT,
    JAVA_ONLY,
    MERGE_REVERT,
    NON_ASCII_MAJORITY,
    NON_VERB_START,
    PARSE_FAIL,
    TOO_LONG,
    TOO_SHORT,
    CommitRecord,
    Corpus,
    FilterConfig,
    FormatError,
    InvalidRatio,
    filter_commit,
    filter_corpus,
    filter_message,
    load_corpus,
    load_lexicon,
    parse_filter_config,
    split_corpus,
)


def record(**kw):
    base = dict(
        repo="demo/alpha",
        sha="c0ffee",
        path="A.java",
        message_raw="fix null pointer in graph builder",
        old_text="class A { void f() { int x = 1; } }",
        new_text="class A { void f() { int x = 2; } }",
        diff_text="-int x = 1;\n+int x = 2;\n",
    )
    base.update(kw)
    return CommitRecord(**base)


def write_jsonl(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")


def record_dict(**kw):
    r = record(**kw)
    return {
        "repo": r.repo,
        "sha": r.sha,
        "path": r.path,
        "message_raw": r.message_raw,
        "old_text": r.old_text,
        "new_text": r.new_text,
        "diff_text": r.diff_text,
    }


class TestLoad:
    def test_message_truncated_to_first_line(self, tmp_path):
        p = tmp_path / "c.jsonl"
        write_jsonl(p, [record_dict(message_raw="fix bug\n\ndetails...")])
        corpus = load_corpus(p)
        assert corpus.records[0].message == "fix bug"
        assert "\n" not in corpus.records[0].message

    def test_empty_file(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text("")
        assert len(load_corpus(p)) == 0

    def test_missing_texts_skipped_and_counted(self, tmp_path):
        p = tmp_path / "c.jsonl"
        rows = [record_dict() for _ in range(9)]
        rows.append(record_dict(old_text="", new_text=""))
        write_jsonl(p, rows)
        corpus = load_corpus(p)
        assert len(corpus) == 9 and corpus.skipped_lines == 1

    def test_too_many_malformed_lines(self, tmp_path):
        p = tmp_path / "c.jsonl"
        rows = [record_dict(), {"nonsense": 1}]
        write_jsonl(p, rows)
        with pytest.raises(FormatError):
            load_corpus(p)


class TestCommitRules:
    def test_non_java_rejected(self):
        verdict = filter_commit(record(path="A.py"))
        assert not verdict.accepted and verdict.reasons == (JAVA_ONLY,)

    def test_parseable_java_accepted(self):
        assert filter_commit(record()).accepted

    def test_unparseable_new_text_rejected(self):
        verdict = filter_commit(record(new_text="class { broken"))
        assert verdict.reasons == (PARSE_FAIL,)

    def test_added_file_with_empty_old_text_ok(self):
        assert filter_commit(record(old_text="")).accepted


class TestMessageRules:
    def test_merge_prefix(self):
        verdict = filter_message("Merge branch 'master'")
        assert verdict.reasons == (MERGE_REVERT,)

    def test_accepted_imperative(self):
        assert filter_message("fix npe in lock graph when roots empty").accepted

    def test_wip_fires_two_rules(self):
        verdict = filter_message("wip")
        assert verdict.reasons == (TOO_SHORT, NON_VERB_START)

    def test_too_long(self):
        msg = "update " + " ".join(f"a{i}" for i in range(31))
        assert TOO_LONG in filter_message(msg).reasons

    def test_bot_marker(self):
        assert BOT in filter_message("update deps [bot] bump").reasons
        assert BOT in filter_message("(#1234)").reasons
        assert BOT not in filter_message("fix crash on empty roots (#1234)").reasons

    def test_non_ascii_majority(self):
        assert NON_ASCII_MAJORITY in filter_message("修复 空指针 异常").reasons
        assert filter_message("fix unicode in ünïcode path").accepted

    def test_revert_and_rollback_prefixes(self):
        assert MERGE_REVERT in filter_message("Revert \"add cache\"").reasons
        assert MERGE_REVERT in filter_message("rollback bad deploy now").reasons

    def test_accepted_iff_no_reasons(self):
        for msg in ("add cache layer", "wip", "Merge branch 'x'"):
            verdict = filter_message(msg)
            assert verdict.accepted == (not verdict.reasons)

    def test_config_overrides(self, tmp_path):
        cfg_path = tmp_path / "rules.cfg"
        cfg_path.write_text("min_tokens = 1\nmax_tokens = 5\n")
        cfg = parse_filter_config(cfg_path)
        assert filter_message("fix it", cfg).accepted
        assert TOO_LONG in filter_message("fix a b c d e f", cfg).reasons

    def test_config_lexicon_override(self, tmp_path):
        lex = tmp_path / "verbs.txt"
        lex.write_text("zap\n")
        cfg_path = tmp_path / "rules.cfg"
        cfg_path.write_text(f"lexicon_path = {lex}\n")
        cfg = parse_filter_config(cfg_path)
        assert filter_message("zap the bug", cfg).accepted
        assert NON_VERB_START in filter_message("fix the bug", cfg).reasons

    def test_config_unknown_key(self, tmp_path):
        cfg_path = tmp_path / "rules.cfg"
        cfg_path.write_text("max_words = 5\n")
        with pytest.raises(FormatError):
            parse_filter_config(cfg_path)

    def test_lexicon_contains_the_basics(self):
        lex = load_lexicon()
        assert {"fix", "add", "remove", "update", "refactor"} <= lex
        assert len(lex) >= 60


class TestFilterCorpus:
    def test_idempotent(self):
        corpus = Corpus(records=[record(sha=f"s{i}") for i in range(5)])
        once, counts1 = filter_corpus(corpus)
        twice, counts2 = filter_corpus(once)
        assert [r.sha for r in once.records] == [r.sha for r in twice.records]
        assert counts2 == {}


class TestSplit:
    def make(self, n=10, repos=1):
        return Corpus(
            records=[
                record(sha=f"sha{i}", repo=f"repo{i % repos}") for i in range(n)
            ]
        )

    def test_all_train(self):
        c = split_corpus(self.make(), (1.0, 0.0, 0.0), seed=1)
        assert all(v == "train" for v in c.split.values())

    def test_deterministic(self):
        c = self.make(50)
        s1 = split_corpus(c, (0.8, 0.1, 0.1), seed=7).split
        s2 = split_corpus(c, (0.8, 0.1, 0.1), seed=7).split
        assert s1 == s2

    def test_floor_then_distribute_sizes(self):
        c = split_corpus(self.make(10), (0.8, 0.1, 0.1), seed=3)
        names = list(c.split.values())
        assert (names.count("train"), names.count("valid"), names.count("test")) == (8, 1, 1)

    def test_ratio_validation(self):
        with pytest.raises(InvalidRatio):
            split_corpus(self.make(), (0.5, 0.2, 0.2), seed=0)
        with pytest.raises(InvalidRatio):
            split_corpus(self.make(), (1.2, -0.1, -0.1), seed=0)

    def test_by_repo_keeps_repos_whole(self):
        c = self.make(30, repos=5)
        out = split_corpus(c, (0.6, 0.2, 0.2), seed=2, by_repo=True)
        repo_splits = {}
        for i, r in enumerate(out.records):
            repo_splits.setdefault(r.repo, set()).add(out.split[i])
        assert all(len(s) == 1 for s in repo_splits.values())

    def test_disjoint_and_exhaustive_across_seeds(self):
        c = self.make(50)
        for seed in range(50):
            out = split_corpus(c, (0.7, 0.2, 0.1), seed=seed)
            assert set(out.split) == set(range(50))
            assert set(out.split.values()) <= {"train", "valid", "test"}
