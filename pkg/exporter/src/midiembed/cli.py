"""Command line entry point: embed a corpus, write the store.

Exit codes: 0 success, 1 usage or model problems, 2 corpus problems.
Per-file failures (unreadable MIDI, empty files) never abort the run;
they are recorded in ``export_skipped.txt`` next to the store.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .midi import MidiReadError, read_midi
from .model import MODELS, ModelError, POOLINGS, embed_piece
from .store import store_paths, write_store

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

MIDI_EXTENSIONS = (".mid", ".midi")
SKIP_FILE = "export_skipped.txt"


@dataclass(frozen=True)
class ExportJob:
    corpus_root: str
    model: str
    out_prefix: str
    pooling: str = "mean_tokens"

    @property
    def model_tag(self) -> str:
        return f"{self.model}:{self.pooling}"


@dataclass
class ExportResult:
    ids: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)


def iter_midi_ids(root: str) -> list[str]:
    """Relative forward-slash paths of MIDI files under root, sorted."""
    if not os.path.isdir(root):
        raise FileNotFoundError(f"corpus root not found: {root}")
    ids = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in filenames:
            if name.lower().endswith(MIDI_EXTENSIONS):
                rel = os.path.relpath(os.path.join(dirpath, name), root)
                ids.append(rel.replace(os.sep, "/"))
    return sorted(ids)


def export_embeddings(job: ExportJob) -> ExportResult:
    """Embed every readable MIDI file under the corpus root.

    Writes ``<out_prefix>.json`` / ``<out_prefix>.bin`` plus the skip
    list, and returns what landed where. Raises ModelError before
    touching any file when the model or pooling name is unknown.
    """
    if job.model not in MODELS:
        raise ModelError(f"unknown model {job.model!r} "
                         f"(available: {', '.join(sorted(MODELS))})")
    if job.pooling not in POOLINGS:
        raise ModelError(f"unknown pooling {job.pooling!r} "
                         f"(available: {', '.join(POOLINGS)})")
    dim = MODELS[job.model][0]
    result = ExportResult()
    rows = []
    for pid in iter_midi_ids(job.corpus_root):
        path = os.path.join(job.corpus_root, *pid.split("/"))
        try:
            with open(path, "rb") as fh:
                content = read_midi(fh.read())
            rows.append(embed_piece(content, job.model, job.pooling))
            result.ids.append(pid)
        except (MidiReadError, ValueError, OSError) as exc:
            result.skipped.append((pid, str(exc)))
    vectors = (np.stack(rows) if rows
               else np.zeros((0, dim), dtype=np.float32))
    json_path, _ = store_paths(job.out_prefix)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    write_store(job.out_prefix, result.ids, vectors, job.model_tag)
    skip_path = json_path.parent / SKIP_FILE
    with open(skip_path, "w") as fh:
        for pid, reason in result.skipped:
            fh.write(f"{pid}\t{reason}\n")
    return result


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="midiembed",
                     description="export MIDI embedding stores")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)
    p = sub.add_parser("export", help="embed a corpus into a store")
    p.add_argument("--corpus", required=True, metavar="DIR")
    p.add_argument("--model", required=True, metavar="NAME")
    p.add_argument("--pooling", choices=POOLINGS, default="mean_tokens")
    p.add_argument("--out", required=True, metavar="PREFIX",
                   help="store prefix (writes PREFIX.json and PREFIX.bin)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(corpus_root=args.corpus, model=args.model,
                    out_prefix=args.out, pooling=args.pooling)
    try:
        result = export_embeddings(job)
    except ModelError as exc:
        sys.stderr.write(f"midiembed: model error: {exc}\n")
        return EXIT_USAGE
    except (FileNotFoundError, OSError) as exc:
        sys.stderr.write(f"midiembed: corpus error: {exc}\n")
        return EXIT_DATA
    json_path, bin_path = store_paths(job.out_prefix)
    sys.stderr.write(
        f"embedded {len(result.ids)} files "
        f"({len(result.skipped)} skipped) -> {json_path}, {bin_path}\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
