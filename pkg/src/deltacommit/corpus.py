"""Commit corpus loading, quality filtering, and split assignment.

Records arrive as JSON Lines, one commit-file pair per line. Messages are
truncated to their first line on load. Quality filtering is rule based:
six auditable rules approximate "does this message say what/why" checks,
with thresholds and the verb lexicon overridable through a config file.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

from .cpg import EmptyUnit, MiniJavaSyntaxError, SourceUnit, parse_source
from .errors import DeltaCommitError

log = logging.getLogger(__name__)

RECORD_FIELDS = ("repo", "sha", "path", "message_raw", "old_text", "new_text", "diff_text")
SPLIT_NAMES = ("train", "valid", "test")

# rule identifiers
JAVA_ONLY = "JAVA_ONLY"
PARSE_FAIL = "PARSE_FAIL"
TOO_SHORT = "TOO_SHORT"
TOO_LONG = "TOO_LONG"
MERGE_REVERT = "MERGE_REVERT"
BOT = "BOT"
NON_VERB_START = "NON_VERB_START"
NON_ASCII_MAJORITY = "NON_ASCII_MAJORITY"


class FormatError(DeltaCommitError):
    """The corpus file does not look like a record stream."""


class InvalidRatio(DeltaCommitError):
    """Split ratios must be non-negative and sum to 1."""


@dataclass(frozen=True)
class CommitRecord:
    repo: str
    sha: str
    path: str
    message_raw: str
    old_text: str
    new_text: str
    diff_text: str
    message: str = ""

    def __post_init__(self):
        if not self.message:
            object.__setattr__(self, "message", first_line(self.message_raw))

    @property
    def record_id(self) -> tuple[str, str, str]:
        return (self.repo, self.sha, self.path)


def first_line(message_raw: str) -> str:
    return message_raw.splitlines()[0].strip() if message_raw else ""


@dataclass(frozen=True)
class FilterVerdict:
    accepted: bool
    reasons: tuple[str, ...]

    @classmethod
    def from_reasons(cls, reasons: Iterable[str]) -> "FilterVerdict":
        rs = tuple(reasons)
        return cls(accepted=not rs, reasons=rs)


@dataclass
class Corpus:
    records: list[CommitRecord] = field(default_factory=list)
    split: dict[int, str] = field(default_factory=dict)  # record index -> split name
    skipped_lines: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def subset(self, name: str) -> list[CommitRecord]:
        return [r for i, r in enumerate(self.records) if self.split.get(i) == name]


def load_corpus(path: Union[str, Path]) -> Corpus:
    """Parse a JSONL record file; skip and count malformed lines.

    A line is malformed if it is not a JSON object, misses a field, or has
    both text versions empty. More than 10% malformed lines means the file
    itself is wrong, which raises FormatError instead.
    """
    corpus = Corpus()
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    total = 0
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        total += 1
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError("not an object")
            fields = {name: obj[name] for name in RECORD_FIELDS}
            if any(not isinstance(v, str) for v in fields.values()):
                raise ValueError("non-string field")
            if not fields["old_text"] and not fields["new_text"]:
                raise ValueError("both text versions empty")
        except (ValueError, KeyError) as exc:
            corpus.skipped_lines += 1
            log.warning("%s:%d skipped: %s", path, lineno, exc)
            continue
        corpus.records.append(CommitRecord(**fields))
    if total and corpus.skipped_lines / total > 0.10:
        raise FormatError(
            f"{corpus.skipped_lines}/{total} malformed lines in {path}; wrong file?"
        )
    return corpus


# -- filtering -------------------------------------------------------------


def builtin_lexicon_path() -> Path:
    return Path(str(resources.files("deltacommit").joinpath("data/verbs.txt")))


def load_lexicon(path: Union[str, Path, None] = None) -> frozenset[str]:
    p = Path(path) if path else builtin_lexicon_path()
    verbs = set()
    for line in p.read_text(encoding="utf-8").splitlines():
        word = line.strip().lower()
        if word and not word.startswith("#"):
            verbs.add(word)
    return frozenset(verbs)


@dataclass(frozen=True)
class FilterConfig:
    min_tokens: int = 3
    max_tokens: int = 30
    reject_prefixes: tuple[str, ...] = ("merge", "revert", "rollback")
    lexicon: frozenset[str] = field(default_factory=load_lexicon)


def parse_filter_config(path: Union[str, Path]) -> FilterConfig:
    """Read a key=value override file (min_tokens, max_tokens,
    reject_prefixes as comma list, lexicon_path)."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    cfg = FilterConfig()
    known = {"min_tokens", "max_tokens", "reject_prefixes", "lexicon_path"}
    unknown = set(values) - known
    if unknown:
        raise FormatError(f"{path}: unknown filter config keys {sorted(unknown)}")
    if "min_tokens" in values:
        cfg = replace(cfg, min_tokens=int(values["min_tokens"]))
    if "max_tokens" in values:
        cfg = replace(cfg, max_tokens=int(values["max_tokens"]))
    if "reject_prefixes" in values:
        prefixes = tuple(
            p.strip().lower() for p in values["reject_prefixes"].split(",") if p.strip()
        )
        cfg = replace(cfg, reject_prefixes=prefixes)
    if "lexicon_path" in values:
        cfg = replace(cfg, lexicon=load_lexicon(values["lexicon_path"]))
    return cfg


def _parses(text: str, path: str) -> bool:
    if not text.strip():
        return True  # missing version (file added/removed) is an empty graph
    try:
        parse_source(SourceUnit(path, text))
        return True
    except (MiniJavaSyntaxError, EmptyUnit):
        return False


def filter_commit(
    rec: CommitRecord, parse_check: Callable[[str, str], bool] = _parses
) -> FilterVerdict:
    """Commit-level rules: JAVA_ONLY on the path extension, then PARSE_FAIL
    when a non-empty version does not parse. Non-java files skip the parse
    check entirely (there is nothing meaningful to parse)."""
    reasons = []
    if not rec.path.endswith(".java"):
        reasons.append(JAVA_ONLY)
        return FilterVerdict.from_reasons(reasons)
    if not (parse_check(rec.old_text, rec.path) and parse_check(rec.new_text, rec.path)):
        reasons.append(PARSE_FAIL)
    return FilterVerdict.from_reasons(reasons)


_BOT_REF_RE = re.compile(r"\(#\d+\)")


def filter_message(message: str, config: Optional[FilterConfig] = None) -> FilterVerdict:
    """Message-level rules, evaluated in a fixed order.

    BOT fires on "[bot]" anywhere or on messages that are nothing but a
    pull-request reference like "(#1234)".
    """
    cfg = config or FilterConfig()
    tokens = message.split()
    reasons = []
    if len(tokens) < cfg.min_tokens:
        reasons.append(TOO_SHORT)
    if len(tokens) > cfg.max_tokens:
        reasons.append(TOO_LONG)
    lowered = message.lower()
    if any(lowered.startswith(p) for p in cfg.reject_prefixes):
        reasons.append(MERGE_REVERT)
    if "[bot]" in lowered or _BOT_REF_RE.fullmatch(message.strip()):
        reasons.append(BOT)
    if not tokens or tokens[0].lower() not in cfg.lexicon:
        reasons.append(NON_VERB_START)
    if message and sum(1 for ch in message if ord(ch) > 127) > 0.5 * len(message):
        reasons.append(NON_ASCII_MAJORITY)
    return FilterVerdict.from_reasons(reasons)


def filter_corpus(
    corpus: Corpus, config: Optional[FilterConfig] = None
) -> tuple[Corpus, dict[str, int]]:
    """Keep records passing both rule sets; return rejection counts by rule."""
    kept = []
    counts: dict[str, int] = {}
    for rec in corpus.records:
        verdict_c = filter_commit(rec)
        verdict_m = filter_message(rec.message, config)
        reasons = verdict_c.reasons + verdict_m.reasons
        if reasons:
            for r in reasons:
                counts[r] = counts.get(r, 0) + 1
        else:
            kept.append(rec)
    return Corpus(records=kept, skipped_lines=corpus.skipped_lines), counts


# -- splitting ---------------------------------------------------------------


def _stable_hash(seed: int, *parts: str) -> int:
    raw = "\x1f".join((str(seed),) + parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(raw).digest()[:8], "big")


def _sizes(n: int, ratios: tuple[float, float, float]) -> list[int]:
    """Floor each share, then hand leftovers to the largest fractional parts
    (ties resolved in train/valid/test order)."""
    raw = [n * r for r in ratios]
    base = [int(x) for x in raw]
    rest = n - sum(base)
    order = sorted(range(3), key=lambda i: (-(raw[i] - base[i]), i))
    for i in range(rest):
        base[order[i]] += 1
    return base


def split_corpus(
    corpus: Corpus,
    ratios: tuple[float, float, float],
    seed: int,
    by_repo: bool = False,
) -> Corpus:
    """Assign every record to train/valid/test, deterministically in seed.

    The shuffle key is a stable hash of (repo, sha), with the path as a
    tie-break so multi-file commits have a total order. With by_repo set,
    whole repositories go to a single split.
    """
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidRatio(f"ratios {ratios} must be non-negative and sum to 1")
    n = len(corpus.records)
    split: dict[int, str] = {}
    if by_repo:
        repos = sorted(
            {r.repo for r in corpus.records},
            key=lambda repo: (_stable_hash(seed, repo), repo),
        )
        counts = {repo: sum(1 for r in corpus.records if r.repo == repo) for repo in repos}
        targets = [n * r for r in ratios]
        assigned: dict[str, str] = {}
        filled = [0.0, 0.0, 0.0]
        for repo in repos:
            slot = next((i for i in range(3) if filled[i] < targets[i]), 2)
            assigned[repo] = SPLIT_NAMES[slot]
            filled[slot] += counts[repo]
        for i, rec in enumerate(corpus.records):
            split[i] = assigned[rec.repo]
    else:
        order = sorted(
            range(n),
            key=lambda i: (
                _stable_hash(seed, corpus.records[i].repo, corpus.records[i].sha),
                corpus.records[i].path,
                i,
            ),
        )
        sizes = _sizes(n, ratios)
        bounds = (sizes[0], sizes[0] + sizes[1])
        for pos, idx in enumerate(order):
            if pos < bounds[0]:
                split[idx] = "train"
            elif pos < bounds[1]:
                split[idx] = "valid"
            else:
                split[idx] = "test"
    return Corpus(records=list(corpus.records), split=split, skipped_lines=corpus.skipped_lines)
