"""End-to-end orchestration: extract -> delta -> generate -> rank.

Each commit record flows through parsing, delta construction,
linearization, candidate generation, and optional ranking. Failures stay
per-commit: a record that cannot be parsed is emitted with SKIPPED
status, a backend failure with FAILED status, and the stream continues.

Commit-level work runs on a bounded thread pool; results are emitted in
input order regardless of completion order, so runs are reproducible for
the deterministic template backend.
"""

from __future__ import annotations

import concurrent.futures
import json
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

from .corpus import CommitRecord, Corpus, load_corpus
from .cpg import CpgGraph, EmptyUnit, MiniJavaSyntaxError, SourceUnit, build_cpg, empty_graph
from .delta import DeltaGraph, build_delta, linearize
from .errors import DeltaCommitError
from .generate import (
    Backend,
    CandidateMessage,
    EndpointConfig,
    PromptSetting,
    PromptSpec,
    ShotIndex,
    build_prompt,
    build_shot_index,
    llm_generate,
    retrieve_shots,
    template_generate,
)
from .qa import QaModel, load_checkpoint, rank_candidates

STATUS_OK = "ok"
STATUS_SKIPPED = "skipped"
STATUS_FAILED = "failed"


class ConfigError(DeltaCommitError):
    """The run configuration is inconsistent or incomplete."""


class NotARepo(DeltaCommitError):
    """The extract target is not a git repository."""


class GitCommandFailed(DeltaCommitError):
    def __init__(self, args: Sequence[str], stderr: str) -> None:
        super().__init__(f"git {' '.join(args)} failed: {stderr.strip()}")
        self.stderr = stderr


@dataclass
class RunConfig:
    backend: Backend = Backend.TEMPLATE
    shots: int = 0
    prompt_template: str = "complete"
    n_candidates: int = 5
    max_input_len: int = 512
    max_gen_len: int = 80
    seed: int = 0
    workers: int = 1
    checkpoint_path: Optional[str] = None
    shots_corpus_path: Optional[str] = None
    endpoint: Optional[EndpointConfig] = None
    char_budget: int = 12000
    emit_timing: bool = False

    def validate(self) -> None:
        if self.n_candidates < 1:
            raise ConfigError("n_candidates must be at least 1")
        if self.max_input_len < 3:
            raise ConfigError("max_input_len must be at least 3")
        if self.max_gen_len < 1:
            raise ConfigError("max_gen_len must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.shots < 0:
            raise ConfigError("shots must be non-negative")
        if self.backend == Backend.LLM:
            if self.endpoint is None or not self.endpoint.url:
                raise ConfigError("llm backend requires an endpoint URL")
            if self.shots > 0 and not self.shots_corpus_path:
                raise ConfigError("shot retrieval requires a shots corpus")
        if self.shots > 5:
            raise ConfigError("at most 5 shots are supported")


@dataclass
class PipelineResult:
    status: str
    repo: str
    sha: str
    path: str
    chosen: Optional[str] = None
    candidates: list[dict] = field(default_factory=list)
    delta_stats: dict = field(default_factory=dict)
    linearized_tokens: int = 0
    truncated: bool = False
    reason: Optional[str] = None
    elapsed_ms: Optional[float] = None

    def to_json(self, emit_timing: bool = False) -> str:
        doc = {
            "status": self.status,
            "repo": self.repo,
            "sha": self.sha,
            "path": self.path,
            "chosen": self.chosen,
            "candidates": self.candidates,
            "delta_stats": self.delta_stats,
            "linearized_tokens": self.linearized_tokens,
            "truncated": self.truncated,
            "reason": self.reason,
        }
        if emit_timing:
            doc["elapsed_ms"] = self.elapsed_ms
        return json.dumps(doc, sort_keys=True)


def graphs_for_record(record: CommitRecord) -> tuple[CpgGraph, CpgGraph]:
    """CPGs of both versions; a missing version is the empty graph."""

    def build(text: str) -> CpgGraph:
        if not text.strip():
            return empty_graph(record.path)
        return build_cpg(SourceUnit(record.path, text))

    return build(record.old_text), build(record.new_text)


@dataclass
class _Context:
    config: RunConfig
    model: Optional[QaModel] = None
    index: Optional[ShotIndex] = None


def _setting_for(shots: int) -> PromptSetting:
    if shots == 0:
        return PromptSetting.ZERO
    if shots == 1:
        return PromptSetting.ONE
    return PromptSetting.MULTI


def generate_candidates(
    record: CommitRecord,
    delta: DeltaGraph,
    ctx: _Context,
) -> list[CandidateMessage]:
    cfg = ctx.config
    if cfg.backend == Backend.TEMPLATE:
        return template_generate(delta, cfg.n_candidates)
    diff = record.diff_text or linearize(delta, cfg.max_input_len).to_text()
    shots: tuple = ()
    if cfg.shots > 0 and ctx.index is not None:
        shots = tuple(retrieve_shots(ctx.index, diff, cfg.shots, exclude=record.record_id))
    setting = _setting_for(len(shots))
    spec = PromptSpec(setting=setting, template_id=cfg.prompt_template, shots=shots)
    prompt = build_prompt(spec, diff, cfg.char_budget)
    assert cfg.endpoint is not None  # validated
    return llm_generate(prompt, cfg.endpoint, cfg.n_candidates, setting)


def process_record(record: CommitRecord, ctx: _Context) -> PipelineResult:
    start = time.perf_counter()
    base = dict(repo=record.repo, sha=record.sha, path=record.path)
    try:
        g_old, g_new = graphs_for_record(record)
    except (MiniJavaSyntaxError, EmptyUnit) as exc:
        return PipelineResult(status=STATUS_SKIPPED, reason=str(exc), **base)
    delta = build_delta(g_old, g_new)
    lin = linearize(delta, ctx.config.max_input_len)
    try:
        candidates = generate_candidates(record, delta, ctx)
    except DeltaCommitError as exc:
        return PipelineResult(status=STATUS_FAILED, reason=str(exc), **base)
    if ctx.model is not None:
        candidates = rank_candidates(delta, candidates, ctx.model)
    return PipelineResult(
        status=STATUS_OK,
        chosen=candidates[0].text,
        candidates=[
            {
                "text": c.text,
                "backend": c.backend.value,
                "prompt_setting": c.prompt_setting.value,
                "rank_score": c.rank_score,
            }
            for c in candidates
        ],
        delta_stats=delta.stats(),
        linearized_tokens=len(lin.tokens),
        truncated=lin.truncated,
        elapsed_ms=(time.perf_counter() - start) * 1000.0,
        **base,
    )


def run_pipeline(
    config: RunConfig, records: Sequence[CommitRecord]
) -> Iterator[PipelineResult]:
    """Process records on a worker pool; yield results in input order."""
    config.validate()
    ctx = _Context(config=config)
    if config.checkpoint_path:
        ctx.model = load_checkpoint(config.checkpoint_path)
    if config.backend == Backend.LLM and config.shots > 0:
        shot_corpus = load_corpus(config.shots_corpus_path)
        ctx.index = build_shot_index(shot_corpus.records)
    if config.workers == 1:
        for rec in records:
            yield process_record(rec, ctx)
        return
    with concurrent.futures.ThreadPoolExecutor(max_workers=config.workers) as pool:
        yield from pool.map(lambda r: process_record(r, ctx), records)


@dataclass
class RunSummary:
    ok: int = 0
    skipped: int = 0
    failed: int = 0

    def add(self, result: PipelineResult) -> None:
        if result.status == STATUS_OK:
            self.ok += 1
        elif result.status == STATUS_SKIPPED:
            self.skipped += 1
        else:
            self.failed += 1

    @property
    def total(self) -> int:
        return self.ok + self.skipped + self.failed


# -- git extraction -----------------------------------------------------------


def _git(repo: Union[str, Path], *args: str) -> str:
    proc = subprocess.run(
        ["git", "-C", str(repo), *args],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise GitCommandFailed(args, proc.stderr)
    return proc.stdout


def _git_show(repo: Union[str, Path], spec: str) -> str:
    proc = subprocess.run(
        ["git", "-C", str(repo), "show", spec],
        capture_output=True,
        text=True,
    )
    return proc.stdout if proc.returncode == 0 else ""


def extract_commits(
    repo: Union[str, Path],
    rev_range: str = "HEAD",
    repo_name: Optional[str] = None,
) -> tuple[list[dict], int]:
    """CommitRecord dicts for every modified .java file in the range.

    Merge commits are skipped and counted (second return value). Blob
    contents come from git plumbing; a missing side (added or deleted
    file) yields an empty string.
    """
    probe = subprocess.run(
        ["git", "-C", str(repo), "rev-parse", "--git-dir"],
        capture_output=True,
        text=True,
    )
    if probe.returncode != 0:
        raise NotARepo(f"{repo} is not a git repository")
    name = repo_name or Path(repo).resolve().name

    shas = _git(repo, "rev-list", "--reverse", rev_range).split()
    records: list[dict] = []
    merges = 0
    for sha in shas:
        parents = _git(repo, "rev-list", "--parents", "-n", "1", sha).split()[1:]
        if len(parents) > 1:
            merges += 1
            continue
        message_raw = _git(repo, "log", "-1", "--format=%B", sha)
        status_out = _git(
            repo, "diff-tree", "-r", "--root", "--no-commit-id", "--name-status", sha
        )
        for line in status_out.splitlines():
            if not line.strip():
                continue
            status, _, path = line.partition("\t")
            if not path.endswith(".java"):
                continue
            new_text = "" if status.startswith("D") else _git_show(repo, f"{sha}:{path}")
            old_text = _git_show(repo, f"{sha}^:{path}") if parents else ""
            diff_text = _git(repo, "show", "--format=", "--patch", sha, "--", path)
            records.append(
                {
                    "repo": name,
                    "sha": sha,
                    "path": path,
                    "message_raw": message_raw,
                    "old_text": old_text,
                    "new_text": new_text,
                    "diff_text": diff_text,
                }
            )
    return records, merges


def write_records(records: Iterable[dict], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


# -- QA training --------------------------------------------------------------


@dataclass
class TrainQaConfig:
    seed: int = 0
    gcn_epochs: int = 60
    gcn_lr: float = 0.05
    scorer_epochs: int = 120
    scorer_lr: float = 2.0


@dataclass
class TrainQaReport:
    checkpoint_path: str
    final_loss: float
    train_accuracy: float
    examples: int


def load_labeled_examples(path: Union[str, Path]) -> list["TrainExample"]:
    """Read {delta: <interchange object>, message, label} JSONL records."""
    from .delta import delta_from_dict
    from .qa import TrainExample

    examples = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            delta = delta_from_dict(obj["delta"])
            message = obj["message"]
            label = int(obj["label"])
            if label not in (0, 1) or not isinstance(message, str):
                raise ValueError("label must be 0/1 and message a string")
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad labeled record: {exc}") from exc
        examples.append(TrainExample(delta=delta, message=message, label=label))
    return examples


def train_qa(
    labeled_path: Union[str, Path],
    checkpoint_path: Union[str, Path],
    config: Optional[TrainQaConfig] = None,
) -> TrainQaReport:
    """Pretrain both GCN encoders, fit the scorer, write a checkpoint.

    GCN pretraining is skipped (not fatal) when its node labels are
    degenerate; scorer training with single-class labels is an error.
    """
    import logging

    from .qa import (
        DegenerateLabels,
        gcn_pretrain,
        init_model,
        line_graph,
        save_checkpoint,
        scorer_accuracy,
        text_graph,
        train_scorer,
    )

    log = logging.getLogger(__name__)
    cfg = config or TrainQaConfig()
    examples = load_labeled_examples(labeled_path)
    if not examples:
        raise ConfigError(f"no labeled examples in {labeled_path}")
    model = init_model(cfg.seed)

    code_graphs = [line_graph(ex.delta, seed=cfg.seed) for ex in examples]
    try:
        gcn_pretrain(code_graphs, cfg.gcn_epochs, cfg.gcn_lr, params=model.code_gcn)
    except DegenerateLabels as exc:
        log.warning("code GCN pretraining skipped: %s", exc)
    text_graphs = [text_graph(ex.message, seed=cfg.seed) for ex in examples]
    try:
        gcn_pretrain(text_graphs, cfg.gcn_epochs, cfg.gcn_lr, params=model.text_gcn)
    except DegenerateLabels as exc:
        log.warning("text GCN pretraining skipped: %s", exc)

    model, losses = train_scorer(
        examples, epochs=cfg.scorer_epochs, lr=cfg.scorer_lr, model=model
    )
    save_checkpoint(model, checkpoint_path)
    return TrainQaReport(
        checkpoint_path=str(checkpoint_path),
        final_loss=losses[-1] if losses else float("nan"),
        train_accuracy=scorer_accuracy(model, examples),
        examples=len(examples),
    )
