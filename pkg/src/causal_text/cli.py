"""The ``causal-text`` command.

Subcommands:

  run     run a scenario experiment and emit manifest + .dat plot files
  ingest  parse review/user JSON-lines into the row-file format
  vocab   build a vocabulary from a review file

Exit code 0 on success, 2 on configuration errors.  Every run echoes its full
configuration (defaults included) to ``manifest.json`` in the output
directory.
"""

from __future__ import annotations

import argparse
import sys

from . import harness, ingest as ingest_mod
from .data import dump_rows, load_rows
from .errors import EmptyDatasetError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causal-text")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment grid")
    run.add_argument("--scenario", choices=("md", "me"), required=True)
    run.add_argument("--source", choices=("synthetic", "yelp"), required=True)
    run.add_argument("--sizes", type=int, nargs="+",
                     default=[10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6],
                     help="dataset sizes (default: the desk-scale grid)")
    run.add_argument("--replicates", type=int, default=10)
    run.add_argument("--m-imputations", type=int, default=20)
    run.add_argument("--vocab-min-count", type=int, default=1000,
                     choices=sorted(harness.VOCAB_PROFILES))
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True)
    run.add_argument("--rows", help="row file from `ingest` (required for --source yelp)")
    run.add_argument("--zeta", type=float, default=0.5)
    run.add_argument("--eta", type=float, default=0.1)
    run.add_argument("--clamp-epsilon", type=float, default=0.01)
    run.add_argument("--l2-lambda", type=float, default=1e-4)
    run.add_argument("--max-iter", type=int, default=100)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--allow-large", action="store_true",
                     help="permit sizes above 10^6")

    ing = sub.add_parser("ingest", help="parse review/user JSON-lines")
    ing.add_argument("--reviews", required=True)
    ing.add_argument("--users", required=True)
    ing.add_argument("--out", required=True)
    ing.add_argument("--vocab", help="existing vocabulary file (else built here)")
    ing.add_argument("--min-count", type=int, default=1000)
    ing.add_argument("--sample", type=int, default=10 ** 6)

    voc = sub.add_parser("vocab", help="build a vocabulary from reviews")
    voc.add_argument("--reviews", required=True)
    voc.add_argument("--min-count", type=int, required=True)
    voc.add_argument("--sample", type=int, default=10 ** 6)
    voc.add_argument("--out", help="output file (default: stdout)")
    return parser


def _cmd_run(args) -> int:
    try:
        config = harness.ExperimentConfig(
            scenario=args.scenario, source=args.source, sizes=tuple(args.sizes),
            replicates=args.replicates, m_imputations=args.m_imputations,
            vocab_min_count=args.vocab_min_count, seed=args.seed,
            zeta=args.zeta, eta=args.eta, clamp_epsilon=args.clamp_epsilon,
            l2_lambda=args.l2_lambda, max_iter=args.max_iter, jobs=args.jobs,
            allow_large=args.allow_large)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    yelp_data = None
    if args.source == "yelp":
        if not args.rows:
            print("error: --source yelp needs --rows ROWFILE (see `causal-text ingest`)",
                  file=sys.stderr)
            return 2
        yelp_data = load_rows(args.rows, provenance="yelp")
    result = harness.run_experiment(config, yelp_data=yelp_data)
    written = harness.write_outputs(result, config, args.out)
    for path in written:
        print(path)
    return 0


def _cmd_ingest(args) -> int:
    import os

    try:
        if args.vocab:
            vocab = ingest_mod.load_vocab(args.vocab)
        else:
            vocab = ingest_mod.build_vocab(ingest_mod.iter_jsonl(args.reviews),
                                           sample_size=args.sample,
                                           min_count=args.min_count)
        data, summary = ingest_mod.ingest_corpus(args.reviews, args.users, vocab)
    except (EmptyDatasetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    rows_path = os.path.join(args.out, "rows.tsv")
    vocab_path = os.path.join(args.out, "vocab.txt")
    dump_rows(data, rows_path)
    ingest_mod.save_vocab(vocab, vocab_path)
    print(rows_path)
    print(vocab_path)
    print(f"rows={summary.n_rows} vocab={len(vocab)} "
          f"dropped_three_star={summary.n_dropped_three_star} "
          f"skipped_malformed={summary.n_skipped_malformed} "
          f"skipped_unknown_user={summary.n_skipped_unknown_user}")
    print(f"fraction_positive={summary.fraction_positive:.4f} "
          f"fraction_useful={summary.fraction_useful:.4f} "
          f"fraction_high_flag_authors={summary.fraction_high_flag_authors:.4f}")
    return 0


def _cmd_vocab(args) -> int:
    try:
        vocab = ingest_mod.build_vocab(ingest_mod.iter_jsonl(args.reviews),
                                       sample_size=args.sample,
                                       min_count=args.min_count)
    except (EmptyDatasetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        ingest_mod.save_vocab(vocab, args.out)
        print(args.out)
    else:
        for token in vocab.tokens:
            print(token)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "ingest":
        return _cmd_ingest(args)
    return _cmd_vocab(args)


if __name__ == "__main__":
    sys.exit(main())
