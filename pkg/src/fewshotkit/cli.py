"""Command-line surface: ingest, eval, report, selftest.

Exit codes: 0 success, 1 usage error (bad flags), 2 data error (validation,
incompatible dataset, malformed results).  ``--config FILE`` pre-fills eval
flags from a TOML table; explicit flags win.  The env var ``FSK_WORKERS``
sets the default worker count.
"""

from __future__ import annotations

import argparse
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that signals usage errors instead of calling sys.exit(2)."""

    def error(self, message):
        raise _UsageError(message)


_EVAL_CONFIG_KEYS = {"data", "head", "ways", "shots", "queries", "episodes", "seed",
                     "lambda", "knn", "tau", "transform", "workers", "out"}


def _build_parser() -> _Parser:
    from .bench import HEADS
    from .heads.metric import TRANSFORM_KINDS

    parser = _Parser(prog="fsk", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fsk {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_ing = sub.add_parser("ingest", help="validate a dataset and write canonical FSEB")
    p_ing.add_argument("--input", required=True)
    p_ing.add_argument("--format", required=True, choices=("csv", "binary"))
    p_ing.add_argument("--output", required=True)

    default_workers = int(os.environ.get("FSK_WORKERS", "1"))
    p_eval = sub.add_parser("eval", help="benchmark one head over sampled episodes")
    p_eval.add_argument("--config", help="TOML file pre-filling the flags below")
    p_eval.add_argument("--data", help="FSEB dataset path")
    p_eval.add_argument("--head", choices=HEADS)
    p_eval.add_argument("--ways", type=int, default=5)
    p_eval.add_argument("--shots", type=int, default=1)
    p_eval.add_argument("--queries", type=int, default=15)
    p_eval.add_argument("--episodes", type=int, default=5000)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p_eval.add_argument("--knn", type=int, default=3)
    p_eval.add_argument("--tau", type=float, default=1.0)
    p_eval.add_argument("--transform", choices=TRANSFORM_KINDS, default="none")
    p_eval.add_argument("--workers", type=int, default=default_workers)
    p_eval.add_argument("--out", help="append the result to this JSONL file")

    p_rep = sub.add_parser("report", help="render benchmark tables and figures")
    p_rep.add_argument("--in", dest="in_path", required=True)
    p_rep.add_argument("--format", choices=("text", "markdown", "json"), default="text")
    p_rep.add_argument("--figures", help="directory for per-dataset accuracy PNGs")
    p_rep.add_argument("--out", help="also write the rendered report to this file")

    sub.add_parser("selftest", help="run the built-in brute-force oracle suites")
    return parser


def _apply_config_file(args, argv):
    """Fill eval flags from TOML; values given on the command line win."""
    with open(args.config, "rb") as fh:
        table = tomllib.load(fh)
    unknown = set(table) - _EVAL_CONFIG_KEYS
    if unknown:
        raise _UsageError(f"unknown config keys: {sorted(unknown)}")
    explicit = {a.split("=", 1)[0].lstrip("-").replace("-", "_")
                for a in argv if a.startswith("--")}
    rename = {"lambda": "lam"}
    for key, value in table.items():
        dest = rename.get(key, key)
        if key in explicit or dest in explicit:
            continue
        setattr(args, dest, value)
    return args


def _cmd_ingest(args) -> int:
    from .store import DatasetFormatError, load_dataset, save_dataset
    try:
        dataset = load_dataset(args.input, format=args.format)
        save_dataset(dataset, args.output)
    except (DatasetFormatError, OSError) as exc:
        print(f"fsk ingest: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"wrote {args.output}: {len(dataset)} records, "
          f"{dataset.num_classes} classes, shape {dataset.shape.kind} "
          f"{dataset.shape.dim}x{dataset.shape.height}x{dataset.shape.width}")
    return EXIT_OK


def _cmd_eval(args, argv) -> int:
    from .bench import RunConfig, persist_result, run_benchmark
    from .episodes import EpisodeSpec, InsufficientClassesError
    from .store import DatasetFormatError, load_dataset

    if args.config:
        try:
            args = _apply_config_file(args, argv)
        except OSError as exc:
            print(f"fsk eval: {exc}", file=sys.stderr)
            return EXIT_DATA
        except tomllib.TOMLDecodeError as exc:
            raise _UsageError(f"bad config file: {exc}") from None
    if not args.data or not args.head:
        raise _UsageError("--data and --head are required (flag or config file)")
    try:
        dataset = load_dataset(args.data, format="binary")
        spec = EpisodeSpec(args.ways, args.shots, args.queries)
        config = RunConfig(head=args.head, spec=spec, episodes=args.episodes,
                           base_seed=args.seed, lam=args.lam, knn=args.knn,
                           tau=args.tau, transform=args.transform, workers=args.workers)
        if args.head == "deepemd" and dataset.shape.positions == 1:
            print("warning: pooled embeddings; deepemd reduces to cosine "
                  "nearest-class-mean on 1x1 grids", file=sys.stderr)
        if args.head in ("protonet", "simpleshot", "laplacianshot") \
                and dataset.shape.positions > 1:
            print("warning: grid embeddings; vector heads mean-pool over "
                  "positions", file=sys.stderr)
        result = run_benchmark(dataset, config)
    except (DatasetFormatError, InsufficientClassesError) as exc:
        print(f"fsk eval: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    print(f"{result.dataset} | {result.head} | {result.ways}-way {result.shots}-shot "
          f"{result.queries}-query | {result.episodes} episodes | "
          f"acc {100.0 * result.mean_acc:.2f}% \u00b1{100.0 * result.ci95:.2f} "
          f"| {result.wall_s:.1f}s")
    if args.out:
        persist_result(result, args.out)
        print(f"appended to {args.out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    from .bench import ResultFormatError, load_results
    from .reporting import emit_report, render_figures
    try:
        results = load_results(args.in_path)
        if not results:
            raise ResultFormatError(f"no results in {args.in_path}")
        text = emit_report(results, format=args.format)
    except (ResultFormatError, ValueError, OSError) as exc:
        print(f"fsk report: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(text, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.figures:
        for path in render_figures(results, args.figures):
            print(f"figure: {path}")
    return EXIT_OK


def _cmd_selftest() -> int:
    from .selftest import run_selftest
    return EXIT_OK if run_selftest() else EXIT_DATA


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand == "ingest":
            return _cmd_ingest(args)
        if args.subcommand == "eval":
            return _cmd_eval(args, argv)
        if args.subcommand == "report":
            return _cmd_report(args)
        return _cmd_selftest()
    except _UsageError as exc:
        print(f"fsk: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse --help / --version
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
