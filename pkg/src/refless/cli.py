"""Command-line interface.

Subcommands: remap-fit, score, evaluate, w2w, sweep, lm-train, lm-score.
Exit status contract: 0 success, 1 runtime/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .evaluation import (
    W2WReport,
    dictionary_size_sweep,
    segment_correlation,
    system_correlation,
    w2w_statistic,
)
from .io import (
    fmt6,
    read_dataset,
    read_lexicon_file,
    read_scores,
    write_report,
    write_scores,
)
from .lm import NgramLanguageModel, load_external_lm_scores, load_lm, save_lm
from .metrics import CosineScorer, MoverScorer, score_batch
from .remap import fit_pipeline, load_transform, parse_pipeline_spec, save_transform
from .vectors import compute_idf, load_embedding_space, load_sentence_vectors, tokenize

_PATH_ARGS = (
    "dataset",
    "src_emb",
    "tgt_emb",
    "lexicon",
    "transform",
    "lm_model",
    "lm_scores",
    "corpus",
    "input",
    "scores",
    "src_sent_vectors",
    "tgt_sent_vectors",
)


def _pipeline_arg(value: str):
    try:
        return parse_pipeline_spec(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _sizes_arg(value: str):
    try:
        sizes = [int(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed size list {value!r}") from None
    if not sizes:
        raise argparse.ArgumentTypeError("size list is empty")
    return sizes


def _add_embedding_args(sub):
    sub.add_argument("--src-emb", required=True, help="source-side word-vector text file")
    sub.add_argument("--tgt-emb", required=True, help="target-side word-vector text file")


def _add_metric_args(sub):
    sub.add_argument("--metric", choices=("mover", "cosine"), default="mover")
    sub.add_argument("--ngram", type=int, choices=(1, 2), default=1, help="mover n-gram order")
    sub.add_argument("--transform", help="fitted transform file (remap-fit output)")
    sub.add_argument("--lm-model", help="trained language-model file")
    sub.add_argument("--lm-scores", help="external per-segment LM score TSV")
    sub.add_argument("--lm-weight", type=float, default=0.1)
    sub.add_argument(
        "--remap-after-pooling",
        action="store_true",
        help="re-map pooled n-gram embeddings instead of token embeddings",
    )
    sub.add_argument(
        "--idf",
        choices=("dataset", "none"),
        default="dataset",
        help="IDF weighting source (dataset sentences, or uniform weights)",
    )
    sub.add_argument("--no-lowercase", dest="lowercase", action="store_false")
    sub.add_argument("--src-sent-vectors", help="external source sentence-vector dump (cosine)")
    sub.add_argument("--tgt-sent-vectors", help="external hypothesis sentence-vector dump (cosine)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refless",
        description="Reference-free MT evaluation with cross-lingual embeddings.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("remap-fit", help="fit a re-mapping pipeline on a lexicon")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--lexicon-kind", choices=("word", "sentence"), default="word")
    _add_embedding_args(p)
    p.add_argument("--pipeline", type=_pipeline_arg, default=["clp"],
                   help="composition spec, e.g. 'clp' or 'clp.umd' (rightmost applied first)")
    p.add_argument("--normalize", action="store_true", help="L2-normalize rows before CLP fits")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_remap_fit)

    p = commands.add_parser("score", help="score a dataset")
    p.add_argument("--dataset", required=True)
    _add_embedding_args(p)
    _add_metric_args(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("tsv", "structured"), default="tsv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = commands.add_parser("evaluate", help="correlate scores with human judgments")
    p.add_argument("--scores", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--level", choices=("segment", "system", "both"), default="segment")
    p.add_argument("--statistic", choices=("pearson", "kendall"), default="pearson")
    p.add_argument("--format", choices=("tsv", "structured"), default="tsv")
    p.add_argument("--no-lowercase", dest="lowercase", action="store_false")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = commands.add_parser("w2w", help="word-by-word preference statistic")
    p.add_argument("--dataset", required=True)
    _add_embedding_args(p)
    _add_metric_args(p)
    p.add_argument("--format", choices=("tsv", "structured"), default="tsv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_w2w)

    p = commands.add_parser("sweep", help="correlation vs lexicon size")
    p.add_argument("--sizes", type=_sizes_arg, required=True, help="comma-separated sizes")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--lexicon-kind", choices=("word", "sentence"), default="word")
    p.add_argument("--dataset", required=True)
    _add_embedding_args(p)
    _add_metric_args(p)
    p.add_argument("--pipeline", type=_pipeline_arg, default=["clp"])
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--statistic", choices=("pearson", "kendall"), default="pearson")
    p.add_argument("--level", choices=("segment", "system"), default="segment")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("tsv", "structured"), default="tsv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = commands.add_parser("lm-train", help="train the n-gram language model")
    p.add_argument("--corpus", required=True, help="UTF-8 text, one sentence per line")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--discount", type=float, default=0.75)
    p.add_argument("--no-lowercase", dest="lowercase", action="store_false")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lm_train)

    p = commands.add_parser("lm-score", help="score sentences with a trained model")
    p.add_argument("--lm-model", dest="lm_model", required=True)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="TSV '<id>\\t<sentence>' lines")
    source.add_argument("--dataset", help="score dataset hypotheses, keyed by segment_id")
    p.add_argument("--no-lowercase", dest="lowercase", action="store_false")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lm_score)

    return parser


def _check_input_paths(args) -> None:
    for name in _PATH_ARGS:
        value = getattr(args, name, None)
        if value is not None and not os.path.exists(value):
            raise FileNotFoundError(f"input file does not exist: {value}")


def _load_spaces(args, table=None):
    src = load_embedding_space(args.src_emb)
    tgt = load_embedding_space(args.tgt_emb)
    if table is not None and getattr(args, "idf", "dataset") == "dataset":
        src_docs, seen = [], set()
        tgt_docs = []
        for r in table.records:
            if r.segment_id not in seen:
                seen.add(r.segment_id)
                src_docs.append(list(r.source))
                if r.reference is not None:
                    tgt_docs.append(list(r.reference))
            tgt_docs.append(list(r.hypothesis))
        src = src.with_idf(compute_idf(src_docs), len(src_docs))
        tgt = tgt.with_idf(compute_idf(tgt_docs), len(tgt_docs))
    return src, tgt


def _build_scorer(args, src, tgt):
    pipeline = load_transform(args.transform) if args.transform else None
    lm = load_lm(args.lm_model) if args.lm_model else None
    lm_scores = load_external_lm_scores(args.lm_scores) if args.lm_scores else None
    if args.metric == "mover":
        return MoverScorer(
            src, tgt,
            ngram_order=args.ngram,
            pipeline=pipeline,
            lm=lm,
            lm_scores=lm_scores,
            lm_weight=args.lm_weight,
            remap_after_pooling=args.remap_after_pooling,
        )
    sentence_source = "external" if args.src_sent_vectors or args.tgt_sent_vectors else "pooled"
    return CosineScorer(
        src, tgt,
        pipeline=pipeline,
        lm=lm,
        lm_scores=lm_scores,
        lm_weight=args.lm_weight,
        sentence_source=sentence_source,
    )


def cmd_remap_fit(args) -> int:
    lexfile = read_lexicon_file(args.lexicon, kind=args.lexicon_kind)
    src, tgt = _load_spaces(args)
    pipe = fit_pipeline(
        args.pipeline, lexfile.lexicon, src, tgt, clp_normalize=args.normalize
    )
    save_transform(pipe, args.out)
    print(f"fitted {pipe.spec_string()} on {pipe.n_pairs_} pairs")
    print(f"residual before: {fmt6(pipe.residual_before_)}")
    print(f"residual after: {fmt6(pipe.residual_after_)}")
    return 0


def cmd_score(args) -> int:
    table = read_dataset(args.dataset, lowercase=args.lowercase)
    src, tgt = _load_spaces(args, table)
    scorer = _build_scorer(args, src, tgt)
    kwargs = {}
    if getattr(scorer, "sentence_source", "pooled") == "external":
        if not (args.src_sent_vectors and args.tgt_sent_vectors):
            raise ValueError("external sentence scoring needs both --src-sent-vectors and --tgt-sent-vectors")
        kwargs["external_source_vectors"] = load_sentence_vectors(args.src_sent_vectors)
        kwargs["external_target_vectors"] = load_sentence_vectors(args.tgt_sent_vectors)
    scores = score_batch(table.records, scorer, workers=args.workers, **kwargs)
    write_scores(scores, args.out, args.format)
    n_ok = sum(1 for s in scores if s.scorable)
    print(f"scored {len(scores)} segments: {n_ok} scorable, {len(scores) - n_ok} unscorable")
    return 0


def cmd_evaluate(args) -> int:
    scores = read_scores(args.scores)
    table = read_dataset(args.dataset, lowercase=args.lowercase)
    reports = []
    if args.level in ("segment", "both"):
        reports.append(segment_correlation(scores, table.records, args.statistic))
    if args.level in ("system", "both"):
        reports.append(system_correlation(scores, table.records, args.statistic))
    write_report(reports, args.out, args.format)
    for report in reports:
        for row in report.rows:
            print(f"{report.level}\t{report.statistic}\t{row.language_pair}\t{row.n}\t{fmt6(row.value)}")
        total = sum(row.n for row in report.rows)
        print(f"{report.level}\t{report.statistic}\taverage\t{total}\t{fmt6(report.average)}")
    return 0


def cmd_w2w(args) -> int:
    if args.lm_scores:
        raise ValueError(
            "--lm-scores is keyed by hypothesis segment id and cannot score "
            "w2w/reference candidates; use --lm-model instead"
        )
    table = read_dataset(args.dataset, lowercase=args.lowercase)
    src, tgt = _load_spaces(args, table)
    scorer = _build_scorer(args, src, tgt)
    groups: dict[str, list] = {}
    for r in table.records:
        if r.w2w_variant is not None and r.reference is not None:
            pair = r.language_pair or "all"
            groups.setdefault(pair, []).append((r.source, r.w2w_variant, r.reference))
    if not groups:
        raise ValueError("dataset has no rows with both w2w and reference columns")
    rows = tuple((pair, w2w_statistic(scorer, groups[pair])) for pair in sorted(groups))
    report = W2WReport(rows=rows)
    write_report(report, args.out, args.format)
    for pair, res in rows:
        print(f"{pair}\t{res.n_used}\t{res.n_excluded}\t{100.0 * res.value:.1f}")
    return 0


def cmd_sweep(args) -> int:
    table = read_dataset(args.dataset, lowercase=args.lowercase)
    lexicon = read_lexicon_file(args.lexicon, kind=args.lexicon_kind).lexicon
    src, tgt = _load_spaces(args, table)
    scorer = _build_scorer(args, src, tgt)
    sweep = dictionary_size_sweep(
        args.sizes,
        lexicon,
        src,
        tgt,
        table.records,
        scorer,
        steps=args.pipeline,
        clp_normalize=args.normalize,
        statistic=args.statistic,
        level=args.level,
        seed=args.seed,
    )
    write_report(sweep, args.out, args.format)
    for size, value in sweep.rows:
        print(f"{size}\t{fmt6(value)}")
    return 0


def _read_corpus(path, lowercase: bool) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [tokenize(line, lowercase) for line in fh if line.strip()]


def cmd_lm_train(args) -> int:
    corpus = _read_corpus(args.corpus, args.lowercase)
    if not corpus:
        raise ValueError(f"corpus {args.corpus} contains no sentences")
    model = NgramLanguageModel(order=args.order, discount=args.discount).fit(corpus)
    save_lm(model, args.out)
    n_held = len(corpus) // 10
    if n_held >= 1:
        train_part, held_part = corpus[:-n_held], corpus[-n_held:]
        probe = NgramLanguageModel(order=args.order, discount=args.discount).fit(train_part)
        print(f"perplexity (train split, {len(train_part)} sentences): {fmt6(probe.perplexity(train_part))}")
        print(f"perplexity (held-out split, {len(held_part)} sentences): {fmt6(probe.perplexity(held_part))}")
    else:
        print(f"perplexity (training corpus): {fmt6(model.perplexity(corpus))}")
    return 0


def cmd_lm_score(args) -> int:
    model = load_lm(args.lm_model)
    entries = []
    if args.dataset:
        table = read_dataset(args.dataset, lowercase=args.lowercase)
        seen = set()
        for r in table.records:
            if r.segment_id in seen:
                raise ValueError(
                    f"duplicate segment id {r.segment_id!r}: segment-keyed LM scores "
                    "need a single-system dataset"
                )
            seen.add(r.segment_id)
            entries.append((r.segment_id, list(r.hypothesis)))
    else:
        with open(args.input, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip() or line.startswith("#"):
                    continue
                fields = line.rstrip("\n").split("\t")
                if len(fields) != 2:
                    raise ValueError(f"{args.input}:{lineno}: expected 2 tab-separated fields")
                entries.append((fields[0], tokenize(fields[1], args.lowercase)))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("# refless-lm-scores v1\n")
        for sid, tokens in entries:
            fh.write(f"{sid}\t{fmt6(model.score_sentence(tokens).avg_log_prob)}\n")
    print(f"scored {len(entries)} sentences")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _check_input_paths(args)
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
