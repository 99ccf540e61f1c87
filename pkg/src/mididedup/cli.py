"""Command line front end for the dedup pipeline.

Progress and counts go to standard error; machine-readable results only
ever land in files, so the commands compose cleanly in shell pipelines.

Exit codes: 0 on success, 1 for usage or configuration problems, 2 for
data problems (unreadable corpus, malformed artifacts, corrupt stores).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline
from .detectors import METHOD_CHROMA
from .embeddings import StoreFormatError
from .pipeline import ConfigError, PipelineConfig, load_config
from .smf import MidiParseError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

DEFAULT_OUT_DIR = "dedup_out"

_METHOD_ALIASES = {"chroma": METHOD_CHROMA, "dtw": METHOD_CHROMA}


def _log(message: str) -> None:
    sys.stderr.write(message + "\n")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; our contract reserves 2 for
    # data errors, so route usage problems to exit code 1
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH",
                   help="JSON pipeline configuration")
    p.add_argument("--out-dir", metavar="DIR",
                   help=f"artifact directory (default: {DEFAULT_OUT_DIR})")
    p.add_argument("--threads", type=int, metavar="N",
                   help="worker threads for pair scoring")
    p.add_argument("--seed", type=int, metavar="N",
                   help="seed for synthetic generation")


def _parse_methods(values: list[str]) -> tuple[str, ...]:
    methods = []
    for chunk in values:
        for name in chunk.split(","):
            name = name.strip()
            if not name:
                continue
            methods.append(_METHOD_ALIASES.get(name, name))
    return tuple(dict.fromkeys(methods))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mididedup",
                     description="near-duplicate detection for MIDI corpora")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("scan", help="index a corpus")
    p.add_argument("corpus", nargs="?", help="corpus root directory")
    _add_common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("features", help="compute per-piece features")
    p.add_argument("corpus", nargs="?")
    _add_common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("detect", help="score candidate duplicate pairs")
    p.add_argument("corpus", nargs="?")
    p.add_argument("--methods", nargs="+", metavar="NAME",
                   help="detectors to run (hash entropy chroma_dtw embedding; "
                        "comma lists accepted)")
    p.add_argument("--store", metavar="PREFIX",
                   help="embedding store prefix (PREFIX.json / PREFIX.bin)")
    _add_common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score edges against ground truth")
    p.add_argument("--truth", metavar="PATH",
                   help="ground truth JSON (default: derive from paths)")
    p.add_argument("--edges", action="append", metavar="PATH", default=[],
                   help="extra edge files to union in (repeatable)")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cluster", help="group predicted pairs, emit filter list")
    p.add_argument("--edges", action="append", metavar="PATH", default=[])
    _add_common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("dedup", help="scan, detect, eval, cluster in one run")
    p.add_argument("corpus", nargs="?")
    p.add_argument("--methods", nargs="+", metavar="NAME")
    p.add_argument("--store", metavar="PREFIX")
    p.add_argument("--truth", metavar="PATH")
    _add_common(p)
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("synth-bench", help="generate a benchmark corpus")
    p.add_argument("dest", help="directory for the generated corpus")
    p.add_argument("--bases", type=int, default=200, metavar="N")
    p.add_argument("--variants", type=int, default=3, metavar="N")
    _add_common(p)
    p.set_defaults(func=cmd_synth_bench)
    return parser


def _resolve_corpus(args, config: PipelineConfig) -> str:
    corpus = getattr(args, "corpus", None) or config.corpus_root
    if not corpus:
        raise ConfigError("no corpus root given (argument or config corpus_root)")
    return corpus


def cmd_scan(args, config: PipelineConfig) -> int:
    index = pipeline.stage_scan(_resolve_corpus(args, config), args.out_dir)
    s = index.summary()
    _log(f"indexed {s['files']} files: {s['parsed']} parsed, "
         f"{s['failed']} failed -> {Path(args.out_dir) / pipeline.INDEX_FILE}")
    return EXIT_OK


def cmd_features(args, config: PipelineConfig) -> int:
    features = pipeline.stage_features(_resolve_corpus(args, config),
                                       args.out_dir)
    _log(f"wrote features for {len(features)} pieces "
         f"-> {Path(args.out_dir) / pipeline.FEATURES_FILE}")
    return EXIT_OK


def cmd_detect(args, config: PipelineConfig) -> int:
    edges = pipeline.stage_detect(_resolve_corpus(args, config), args.out_dir,
                                  config, store_prefix=args.store)
    _log(f"wrote {len(edges)} edges "
         f"-> {Path(args.out_dir) / pipeline.EDGES_FILE}")
    return EXIT_OK


def _format_thresholds(report) -> str:
    return " ".join(f"{m}={report.threshold_used[m]:.3f}"
                    for m in report.method_set)


def cmd_eval(args, config: PipelineConfig) -> int:
    report = pipeline.stage_eval(args.out_dir, config,
                                 truth_path=args.truth,
                                 extra_edges=args.edges)
    _log(f"ndcg={report.ndcg_mean:.4f} mrr={report.mrr_mean:.4f} "
         f"p={report.precision:.4f} r={report.recall:.4f} "
         f"f1={report.f1:.4f} fn={report.fn_count} "
         f"thresholds: {_format_thresholds(report)}")
    return EXIT_OK


def cmd_cluster(args, config: PipelineConfig) -> int:
    _, counts = pipeline.stage_cluster(args.out_dir, config,
                                       extra_edges=args.edges)
    _log(f"{counts['clusters']} clusters, "
         f"{counts['filtered']} files on the filter list")
    return EXIT_OK


def cmd_dedup(args, config: PipelineConfig) -> int:
    report, counts = pipeline.stage_dedup(
        _resolve_corpus(args, config), args.out_dir, config,
        store_prefix=args.store, truth_path=args.truth)
    _log(f"p={report.precision:.4f} r={report.recall:.4f} "
         f"fn={report.fn_count} thresholds: {_format_thresholds(report)}")
    _log(f"{{'clusters': {counts['clusters']}, "
         f"'duplicates': {counts['filtered']}}}")
    return EXIT_OK


def cmd_synth_bench(args, config: PipelineConfig) -> int:
    if args.bases < 1 or args.variants < 0:
        raise ConfigError("--bases must be >= 1 and --variants >= 0")
    n = pipeline.stage_synth_bench(args.dest, config,
                                   n_bases=args.bases,
                                   n_variants=args.variants)
    _log(f"wrote {n} pieces under {args.dest}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else PipelineConfig()
        config = pipeline.apply_overrides(config, threads=args.threads,
                                          seed=args.seed)
        if getattr(args, "methods", None):
            config = replace(config, methods=_parse_methods(args.methods))
        if getattr(args, "store", None) is None and config.store:
            if hasattr(args, "store"):
                args.store = config.store
        if args.out_dir is None:
            args.out_dir = config.out_dir or DEFAULT_OUT_DIR
    except FileNotFoundError as exc:
        sys.stderr.write(f"mididedup: config error: {exc}\n")
        return EXIT_USAGE
    except ConfigError as exc:
        sys.stderr.write(f"mididedup: config error: {exc}\n")
        return EXIT_USAGE
    try:
        return args.func(args, config)
    except ConfigError as exc:
        sys.stderr.write(f"mididedup: config error: {exc}\n")
        return EXIT_USAGE
    except (MidiParseError, StoreFormatError, FileNotFoundError,
            KeyError, ValueError, OSError) as exc:
        sys.stderr.write(f"mididedup: data error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
