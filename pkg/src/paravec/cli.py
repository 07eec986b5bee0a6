"""Command-line entry point.

Every TSV output starts with a ``#`` provenance line (tool version, argv,
seed) that the loaders in this package skip.  All randomness flows from
``--seed`` flags, and no output contains timestamps, so identical invocations
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import shlex
import sys
from contextlib import contextmanager

from . import __version__, corpus, encoders, evaluation, filters, kernels, lexicon, stats, store, trainer


def _provenance(argv: list[str], seed: int | None) -> str:
    # --threads is execution environment, not semantics: outputs must be
    # byte-identical across thread counts, so it stays out of the record
    recorded = []
    skip_next = False
    for arg in argv:
        if skip_next:
            skip_next = False
            continue
        if arg == "--threads":
            skip_next = True
            continue
        if arg.startswith("--threads="):
            continue
        recorded.append(arg)
    seed_text = "-" if seed is None else str(seed)
    return f"# paravec {__version__} argv={shlex.join(recorded)} seed={seed_text}"


@contextmanager
def _out_stream(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            yield handle


def _load_scored(path: str) -> tuple[list[corpus.ParaphrasePair], list[float]]:
    """Read a `filter` output: pair columns plus the score in the last column."""
    pairs = []
    scores = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) not in (3, 4):
                raise corpus.CorpusFormatError(
                    f"{path}:{lineno}: expected 3 or 4 columns, got {len(cols)}"
                )
            try:
                score = float(cols[-1])
            except ValueError:
                raise corpus.CorpusFormatError(
                    f"{path}:{lineno}: unparsable score {cols[-1]!r}"
                ) from None
            logprob = None
            if len(cols) == 4:
                logprob = float(cols[2])
            pairs.append(
                corpus.ParaphrasePair(
                    reference=corpus.tokenize(cols[0]),
                    translation=corpus.tokenize(cols[1]),
                    translation_logprob=logprob,
                )
            )
            scores.append(score)
    return pairs, scores


def _report_skips(reader_skips: int) -> None:
    if reader_skips:
        print(f"skipped {reader_skips} degenerate pair(s)", file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_stats(args, argv) -> int:
    if args.pairs:
        pair_list, skipped = corpus.load_pairs(args.pairs)
        _report_skips(skipped)
        data = pair_list
        sentences = [p.reference for p in pair_list]
    else:
        data = corpus.load_sentences(args.text)
        sentences = data
    if args.idf_text:
        idf = stats.build_idf(corpus.load_sentences(args.idf_text))
    else:
        idf = stats.build_idf(sentences)
    parses = corpus.load_parsed(args.parses) if args.parses else None
    encoder = encoders.load_model(args.scorer) if args.scorer else None
    report = stats.corpus_report(data, idf, parses=parses, encoder=encoder)

    def fmt(v):
        return "" if v is None else f"{v:.4f}"

    print(f"corpus          : {args.name}")
    print(f"sentences       : {report.n_sentences}")
    print(f"avg length      : {report.avg_length:.4f} ({report.std_length:.4f})")
    print(f"avg idf         : {report.avg_idf:.4f} ({report.std_idf:.4f})")
    if report.avg_para_score is not None:
        print(f"avg para score  : {report.avg_para_score:.4f} ({report.std_para_score:.4f})")
    print(f"vocab entropy   : {report.vocab_entropy_bits:.4f}")
    if report.parse_entropy_bits is not None:
        print(f"parse entropy   : {report.parse_entropy_bits:.4f}")
    with _out_stream(args.out) as out:
        out.write(_provenance(argv, None) + "\n")
        row = [
            args.name,
            fmt(report.avg_length),
            fmt(report.std_length),
            fmt(report.avg_idf),
            fmt(report.std_idf),
            fmt(report.avg_para_score),
            fmt(report.std_para_score),
            fmt(report.vocab_entropy_bits),
            fmt(report.parse_entropy_bits),
            str(report.n_sentences),
        ]
        out.write("\t".join(row) + "\n")
    return 0


def _cmd_filter(args, argv) -> int:
    pair_list, skipped = corpus.load_pairs(args.pairs)
    _report_skips(skipped)
    if args.criterion == filters.PARA:
        if not args.scorer:
            raise ValueError("--criterion para requires --scorer")
        encoder = encoders.load_model(args.scorer)
        score = lambda p: filters.paraphrase_score(p, encoder)
    elif args.criterion == filters.OVERLAP:
        score = lambda p: filters.trigram_overlap(p.reference, p.translation)
    else:
        score = filters.translation_score
    with _out_stream(args.out) as out:
        out.write(_provenance(argv, None) + "\n")
        for pair in pair_list:
            out.write(f"{corpus.format_pair(pair)}\t{score(pair)!r}\n")
    return 0


def _cmd_split_deciles(args, argv) -> int:
    pairs, scores = _load_scored(args.scored)
    split = filters.split_deciles(scores)
    bin_of = split.bin_of()
    with _out_stream(args.out) as out:
        out.write(_provenance(argv, None) + "\n")
        for i, (pair, score) in enumerate(zip(pairs, scores)):
            out.write(f"{corpus.format_pair(pair)}\t{score!r}\t{bin_of[i]}\n")
    for b, members in enumerate(split.bins):
        lo = min(scores[i] for i in members)
        hi = max(scores[i] for i in members)
        print(f"bin {b}: n={len(members)} min={lo:.4f} max={hi:.4f}", file=sys.stderr)
    return 0


def _cmd_sample(args, argv) -> int:
    pairs, scores = _load_scored(args.scored)
    bins = [int(b) for b in args.bins.split(",")]
    if any(b < 0 or b > 9 for b in bins):
        raise ValueError("--bins entries must be in 0..9")
    sample, shortfall = filters.sample_training_set(
        pairs, scores, bins, args.max_len, args.n, args.seed
    )
    if shortfall:
        print(f"only {len(sample)} eligible pairs; short by {shortfall}", file=sys.stderr)
    with _out_stream(args.out) as out:
        out.write(_provenance(argv, args.seed) + "\n")
        for pair in sample:
            out.write(corpus.format_pair(pair) + "\n")
    return 0


def _build_encoder(args, pair_list) -> encoders.Encoder:
    both_sides = [p.reference for p in pair_list] + [p.translation for p in pair_list]
    word_store = None
    trigram_store = None
    if args.encoder in (encoders.WORD_AVG, encoders.ADDITIVE, encoders.CONCAT):
        if args.init_embeddings:
            word_store = store.load_pretrained(args.init_embeddings, kind=store.WORD)
        else:
            vocab = store.build_vocab(both_sides, store.WORD, args.min_count)
            word_store = store.init_matrix(vocab, args.dim, args.seed)
    if args.encoder in (encoders.TRIGRAM_AVG, encoders.ADDITIVE, encoders.CONCAT):
        vocab = store.build_vocab(both_sides, store.CHAR_TRIGRAM, args.min_count)
        dim = word_store.dim if (args.encoder == encoders.ADDITIVE and word_store) else args.dim
        trigram_store = store.init_matrix(vocab, dim, args.seed + 1)
    return encoders.Encoder(kind=args.encoder, word_store=word_store, trigram_store=trigram_store)


def _cmd_train(args, argv) -> int:
    pair_list, skipped = corpus.load_pairs(args.pairs)
    _report_skips(skipped)
    encoder = _build_encoder(args, pair_list)
    config = trainer.TrainingConfig(
        margin=args.margin,
        batch_size=args.batch,
        megabatch_multiplier=args.megabatch,
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        symmetric_loss=args.symmetric_loss,
        include_translations=args.include_translations,
        update_embeddings=not args.freeze_embeddings,
    )
    result = trainer.train(pair_list, encoder, config)
    encoders.save_model(args.out, result.encoder)
    with _out_stream(args.loss_log) as out:
        out.write(_provenance(argv, args.seed) + "\n")
        for log in result.epochs:
            out.write(f"{log.epoch}\t{log.mean_loss!r}\t{log.mean_negative_cosine!r}\n")
    return 0


def _cmd_embed(args, argv) -> int:
    encoder = encoders.load_model(args.model)
    sentences = corpus.load_sentences(args.input)
    vectors = encoders.encode_batch(sentences, encoder)
    with _out_stream(args.out) as out:
        out.write(_provenance(argv, None) + "\n")
        for row in vectors:
            out.write("\t".join(repr(float(v)) for v in row) + "\n")
    return 0


def _cmd_similarity(args, argv) -> int:
    encoder = encoders.load_model(args.model)
    rows = []
    with open(args.input, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise corpus.CorpusFormatError(
                    f"{args.input}:{lineno}: expected 2 columns, got {len(cols)}"
                )
            rows.append((corpus.tokenize(cols[0]), corpus.tokenize(cols[1])))
    with _out_stream(args.out) as out:
        out.write(_provenance(argv, None) + "\n")
        for a, b in rows:
            c = encoders.cosine(encoders.encode(a, encoder), encoders.encode(b, encoder))
            out.write(f"{c:.6f}\n")
    return 0


def _cmd_eval_sts(args, argv) -> int:
    encoder = encoders.load_model(args.model)
    groups = corpus.load_sts(args.manifest)
    report = evaluation.evaluate_sts(groups, encoder)
    with _out_stream(args.out) as out:
        out.write(_provenance(argv, None) + "\n")
        seen_years: list[str] = []
        for year, name, n, r in report.rows:
            if year not in seen_years:
                seen_years.append(year)
            out.write(f"{year}\t{name}\t{n}\t{r:.4f}\n")
        for year in seen_years:
            n_sets = sum(1 for row in report.rows if row[0] == year)
            out.write(f"{year}\tMEAN\t{n_sets}\t{report.year_means[year]:.4f}\n")
        out.write(f"ALL\tMEAN\t{len(report.rows)}\t{report.grand_mean:.4f}\n")
    return 0


def _cmd_build_lexicon(args, argv) -> int:
    pair_list, skipped = corpus.load_pairs(args.pairs)
    _report_skips(skipped)
    scorer = encoders.load_model(args.scorer)
    counts = lexicon.count_pmi(
        pair_list, scorer, min_para_score=args.min_para, max_len=args.max_len
    )
    print(
        f"counted {counts.n_pairs_counted} pairs, filtered {counts.n_pairs_filtered}",
        file=sys.stderr,
    )
    entries = lexicon.build_lexicon(counts, min_joint=args.min_joint)
    with _out_stream(args.out) as out:
        out.write(_provenance(argv, None) + "\n")
        for e in entries:
            out.write(f"{e.u}\t{e.v}\t{e.pmi_adjusted!r}\t{e.pmi_cross!r}\t{e.joint_count}\n")
    return 0


def _cmd_eval_simlex(args, argv) -> int:
    entries = lexicon.read_lexicon(args.lexicon)
    gold = lexicon.read_word_pairs(args.gold)
    rho = lexicon.eval_simlex(entries, gold)
    with _out_stream(args.out) as out:
        out.write(_provenance(argv, None) + "\n")
        out.write(f"spearman_rho\t{rho:.4f}\n")
    return 0


def _cmd_gradcheck(args, argv) -> int:
    report = trainer.gradient_check(dim=args.dim, seed=args.seed, instances=args.instances)
    worst = 0.0
    for (kind, symmetric), err in report.items():
        mode = "symmetric" if symmetric else "one-sided"
        print(f"{kind:12s} {mode:10s} max_rel_err={err:.3e}")
        worst = max(worst, err)
    print(f"overall max_rel_err={worst:.3e}")
    if worst >= 1e-4:
        print("error: analytic gradients disagree with finite differences", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paravec",
        description="Paraphrase-pair corpus statistics, filtering, sentence-embedding "
        "training, STS evaluation, and PMI lexicon extraction.",
    )
    parser.add_argument("--version", action="version", version=f"paravec {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="cap worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[common], help="corpus comparison statistics")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pairs", help="pairs TSV")
    src.add_argument("--text", help="plain sentences, one per line")
    p.add_argument("--name", default="corpus", help="corpus label for the TSV row")
    p.add_argument("--idf-text", help="sentences to build the IDF table from")
    p.add_argument("--parses", help="parsed corpus: sentence TAB bracketed parse")
    p.add_argument("--scorer", help="model file for the paraphrase-score column")
    p.add_argument("--out", help="TSV row output (default stdout)")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("filter", parents=[common], help="score pairs by one criterion")
    p.add_argument("--criterion", required=True, choices=filters.CRITERIA)
    p.add_argument("--pairs", required=True)
    p.add_argument("--scorer", help="model file (required for --criterion para)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("split-deciles", parents=[common], help="bin scored pairs into tenths")
    p.add_argument("--scored", required=True, help="output of `paravec filter`")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_split_deciles)

    p = sub.add_parser("sample", parents=[common], help="sample a training set from top bins")
    p.add_argument("--scored", required=True, help="output of `paravec filter`")
    p.add_argument("--bins", default="8,9", help="comma-separated decile bins (0=lowest)")
    p.add_argument("--max-len", type=int, default=30)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("train", parents=[common], help="train sentence embeddings")
    p.add_argument("--pairs", required=True)
    p.add_argument("--encoder", default=encoders.WORD_AVG, choices=encoders.ENCODER_KINDS)
    p.add_argument("--dim", type=int, default=300, help="embedding dim per store")
    p.add_argument("--margin", type=float, default=0.4)
    p.add_argument("--batch", type=int, default=100)
    p.add_argument("--megabatch", type=int, default=1, help="mega-batch multiplier M")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--init-embeddings", help="pretrained word embeddings (text format)")
    p.add_argument("--symmetric-loss", action="store_true")
    p.add_argument(
        "--include-translations",
        action="store_true",
        help="let translation sides join the negative pool",
    )
    p.add_argument("--freeze-embeddings", action="store_true")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--loss-log", help="per-epoch loss TSV (default stdout)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("embed", parents=[common], help="encode sentences to vectors")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="sentences, one per line")
    p.add_argument("--out", help="vector TSV (default stdout)")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("similarity", parents=[common], help="cosine of sentence pairs")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="TSV: sentence_a TAB sentence_b")
    p.add_argument("--out", help="default stdout")
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("eval-sts", parents=[common], help="Pearson r per STS dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True, help="TSV: path TAB year TAB name")
    p.add_argument("--out", help="default stdout")
    p.set_defaults(func=_cmd_eval_sts)

    p = sub.add_parser("build-lexicon", parents=[common], help="extract a PMI paraphrase lexicon")
    p.add_argument("--pairs", required=True)
    p.add_argument("--scorer", required=True, help="word-averaging model file")
    p.add_argument("--min-para", type=float, default=0.35)
    p.add_argument("--max-len", type=int, default=30)
    p.add_argument("--min-joint", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_lexicon)

    p = sub.add_parser("eval-simlex", parents=[common], help="Spearman rho of a lexicon")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--gold", required=True, help="TSV: word1 TAB word2 TAB similarity")
    p.add_argument("--out", help="default stdout")
    p.set_defaults(func=_cmd_eval_simlex)

    p = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--instances", type=int, default=20)
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    kernels.set_threads(args.threads)
    return args.func(args, argv)


def main() -> None:
    try:
        code = run(sys.argv[1:])
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)
    sys.exit(code)


if __name__ == "__main__":
    main()
