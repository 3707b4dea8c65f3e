"""Command-line front end.

Subcommands: extract, delta, generate, rank, evaluate, train-qa. Each one
also works standalone on interchange files, so the stages can be driven
and tested in isolation.

Exit codes: 0 success, 1 usage or config error, 2 environment error
(git, endpoint), 3 total failure (no commit succeeded).

Environment: DELTACOMMIT_ENDPOINT, DELTACOMMIT_TOKEN, DELTACOMMIT_WORKERS.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .corpus import (
    FilterConfig,
    FormatError,
    InvalidRatio,
    filter_corpus,
    load_corpus,
    parse_filter_config,
)
from .cpg import (
    EmptyUnit,
    GraphIntegrityError,
    MiniJavaSyntaxError,
    SourceUnit,
    build_cpg,
    export_cpg,
    import_cpg,
)
from .cpg.interchange import FormatError as InterchangeFormatError
from .delta import build_delta, export_delta, import_delta, linearize
from .errors import DeltaCommitError
from .generate import (
    AuthError,
    Backend,
    EndpointConfig,
    TransportError,
    ENV_ENDPOINT,
    ENV_TOKEN,
)
from .metrics import EmptyCorpus, EmptyReference, corpus_report, sentence_report
from .pipeline import (
    ConfigError,
    GitCommandFailed,
    NotARepo,
    RunConfig,
    RunSummary,
    TrainQaConfig,
    extract_commits,
    run_pipeline,
    train_qa,
    write_records,
)
from .qa import DegenerateLabels, load_checkpoint, rank_candidates
from .generate import CandidateMessage, PromptSetting

ENV_WORKERS = "DELTACOMMIT_WORKERS"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ENV = 2
EXIT_TOTAL_FAILURE = 3

USAGE_ERRORS = (
    ConfigError,
    FormatError,
    InterchangeFormatError,
    InvalidRatio,
    DegenerateLabels,
    GraphIntegrityError,
    MiniJavaSyntaxError,
    EmptyUnit,
    EmptyReference,
    EmptyCorpus,
    ValueError,
)
ENV_ERRORS = (NotARepo, GitCommandFailed, TransportError, AuthError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_graph(path: str):
    if path.endswith(".json"):
        return import_cpg(path)
    text = Path(path).read_text(encoding="utf-8")
    return build_cpg(SourceUnit(path, text))


def _out_stream(path: Optional[str]):
    return open(path, "w", encoding="utf-8") if path else sys.stdout


def cmd_extract(args) -> int:
    records, merges = extract_commits(args.repo, args.rev_range)
    write_records(records, args.output)
    print(
        f"extracted {len(records)} records ({merges} merge commits skipped) -> {args.output}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_delta(args) -> int:
    g_old = _load_graph(args.old)
    g_new = _load_graph(args.new)
    delta = build_delta(g_old, g_new)
    if args.output:
        export_delta(delta, args.output)
    if args.linearize or not args.output:
        line = linearize(delta, args.max_input_len)
        print(line.to_text())
    print(json.dumps(delta.stats(), sort_keys=True), file=sys.stderr)
    return EXIT_OK


def _run_config_from(args) -> RunConfig:
    endpoint = None
    if args.backend == "llm":
        endpoint = EndpointConfig.from_env(model=args.model)
        if args.endpoint_url:
            endpoint = EndpointConfig(
                url=args.endpoint_url,
                auth_token=os.environ.get(ENV_TOKEN, ""),
                model=args.model,
            )
    workers = args.workers or int(os.environ.get(ENV_WORKERS, "1"))
    return RunConfig(
        backend=Backend(args.backend),
        shots=args.shots,
        prompt_template=args.prompt_template,
        n_candidates=args.n_candidates,
        max_input_len=args.max_input_len,
        seed=args.seed,
        workers=workers,
        checkpoint_path=args.checkpoint,
        shots_corpus_path=args.shots_corpus,
        endpoint=endpoint,
        emit_timing=args.timing,
    )


def cmd_generate(args) -> int:
    config = _run_config_from(args)
    if args.corpus:
        corpus = load_corpus(args.corpus)
        records = corpus.records
        if args.filter_config or args.apply_filters:
            cfg = parse_filter_config(args.filter_config) if args.filter_config else FilterConfig()
            filtered, counts = filter_corpus(corpus, cfg)
            records = filtered.records
            print(f"filter rejections: {json.dumps(counts, sort_keys=True)}", file=sys.stderr)
        summary = RunSummary()
        out = _out_stream(args.output)
        try:
            for result in run_pipeline(config, records):
                summary.add(result)
                out.write(result.to_json(config.emit_timing) + "\n")
        finally:
            if out is not sys.stdout:
                out.close()
        print(
            f"ok={summary.ok} skipped={summary.skipped} failed={summary.failed}",
            file=sys.stderr,
        )
        return EXIT_OK if summary.ok > 0 else EXIT_TOTAL_FAILURE
    if not args.delta:
        raise ConfigError("generate needs --corpus or --delta")
    delta = import_delta(args.delta)
    from .generate import template_generate

    if config.backend != Backend.TEMPLATE:
        raise ConfigError("--delta input supports the template backend only")
    candidates = template_generate(delta, config.n_candidates)
    if config.checkpoint_path:
        model = load_checkpoint(config.checkpoint_path)
        candidates = rank_candidates(delta, candidates, model)
    out = _out_stream(args.output)
    try:
        for c in candidates:
            out.write(
                json.dumps(
                    {"text": c.text, "backend": c.backend.value, "rank_score": c.rank_score},
                    sort_keys=True,
                )
                + "\n"
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_rank(args) -> int:
    delta = import_delta(args.delta)
    model = load_checkpoint(args.checkpoint)
    texts = [
        line.strip()
        for line in Path(args.candidates).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    if not texts:
        raise ConfigError(f"no candidates in {args.candidates}")
    candidates = [
        CandidateMessage(t, Backend.TEMPLATE, PromptSetting.NONE) for t in texts
    ]
    ranked = rank_candidates(delta, candidates, model)
    out = _out_stream(args.output)
    try:
        for c in ranked:
            out.write(json.dumps({"text": c.text, "rank_score": c.rank_score}) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_evaluate(args) -> int:
    pairs = []
    for lineno, line in enumerate(
        Path(args.pairs).read_text(encoding="utf-8").splitlines(), 1
    ):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            pairs.append((obj["candidate"], obj["reference"]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"{args.pairs}:{lineno}: bad pair: {exc}") from exc
    out = _out_stream(args.output)
    try:
        if args.per_sentence:
            for cand, ref in pairs:
                out.write(json.dumps(sentence_report(cand, ref).as_dict(), sort_keys=True) + "\n")
        else:
            out.write(json.dumps(corpus_report(pairs).as_dict(), sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_train_qa(args) -> int:
    cfg = TrainQaConfig(
        seed=args.seed,
        gcn_epochs=args.gcn_epochs,
        gcn_lr=args.gcn_lr,
        scorer_epochs=args.epochs,
        scorer_lr=args.lr,
    )
    report = train_qa(args.labeled, args.output, cfg)
    print(
        f"checkpoint {report.checkpoint_path}: final loss {report.final_loss:.6f}, "
        f"train accuracy {report.train_accuracy:.3f} on {report.examples} examples"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="deltacommit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="mine commit records from a git repository")
    p.add_argument("repo")
    p.add_argument("--rev-range", default="HEAD")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("delta", help="build a delta graph between two versions")
    p.add_argument("--old", required=True, help=".java source or .json interchange graph")
    p.add_argument("--new", required=True)
    p.add_argument("-o", "--output", help="write the delta interchange JSON here")
    p.add_argument("--linearize", action="store_true")
    p.add_argument("--max-input-len", type=int, default=512)
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("generate", help="generate (and optionally rank) messages")
    p.add_argument("--corpus", help="JSONL commit records to process")
    p.add_argument("--delta", help="single delta interchange file")
    p.add_argument("--backend", choices=["template", "llm"], default="template")
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--prompt-template", default="complete")
    p.add_argument("--n-candidates", type=int, default=5)
    p.add_argument("--max-input-len", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=0, help=f"default ${ENV_WORKERS} or 1")
    p.add_argument("--checkpoint", help="QA checkpoint for ranking")
    p.add_argument("--shots-corpus", help="JSONL records used for shot retrieval")
    p.add_argument("--endpoint-url", help=f"default ${ENV_ENDPOINT}")
    p.add_argument("--model", default="")
    p.add_argument("--filter-config", help="key=value overrides for quality filters")
    p.add_argument("--apply-filters", action="store_true")
    p.add_argument("--timing", action="store_true", help="include elapsed_ms in results")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("rank", help="rank a candidate list against a delta")
    p.add_argument("--delta", required=True)
    p.add_argument("--candidates", required=True, help="text file, one message per line")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("evaluate", help="score candidate/reference pairs")
    p.add_argument("pairs", help='JSONL of {"candidate", "reference"}')
    p.add_argument("--per-sentence", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("train-qa", help="train the ranking model")
    p.add_argument("labeled", help="JSONL of {delta, message, label}")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=120)
    p.add_argument("--lr", type=float, default=2.0)
    p.add_argument("--gcn-epochs", type=int, default=60)
    p.add_argument("--gcn-lr", type=float, default=0.05)
    p.set_defaults(func=cmd_train_qa)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except ENV_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DeltaCommitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())
