"""Corpus scanning: find MIDI files, parse them, index the outcome."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from .model import Piece
from .smf import MidiParseError, parse_midi

MIDI_EXTENSIONS = (".mid", ".midi")

STATUS_OK = "ok"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class IndexEntry:
    id: str
    byte_size: int
    note_count: int
    parse_status: str
    error: str = ""


@dataclass(frozen=True)
class CorpusIndex:
    root: str
    entries: tuple[IndexEntry, ...]

    @property
    def ok_ids(self) -> list[str]:
        return [e.id for e in self.entries if e.parse_status == STATUS_OK]

    def summary(self) -> dict:
        failed = sum(1 for e in self.entries if e.parse_status != STATUS_OK)
        return {"files": len(self.entries), "parsed": len(self.entries) - failed,
                "failed": failed}


def iter_midi_paths(root: str) -> list[str]:
    """Relative forward-slash paths of .mid/.midi files, sorted."""
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


def load_piece(root: str, id: str) -> Piece:
    with open(os.path.join(root, *id.split("/")), "rb") as f:
        return parse_midi(f.read(), id)


def scan_corpus(root: str) -> CorpusIndex:
    """Parse every MIDI file under ``root``; failures are recorded, not fatal."""
    entries = []
    for id in iter_midi_paths(root):
        path = os.path.join(root, *id.split("/"))
        size = os.path.getsize(path)
        try:
            with open(path, "rb") as f:
                piece = parse_midi(f.read(), id)
            entries.append(IndexEntry(id, size, len(piece.notes), STATUS_OK))
        except (MidiParseError, OSError) as exc:
            entries.append(IndexEntry(id, size, 0, STATUS_FAILED, str(exc)))
    return CorpusIndex(root=root, entries=tuple(entries))


def write_index(index: CorpusIndex, path: str) -> None:
    records = [{"id": e.id, "bytes": e.byte_size, "notes": e.note_count,
                "status": e.parse_status} for e in index.entries]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(records, f, indent=1)
        f.write("\n")


def read_index(path: str, root: str = "") -> CorpusIndex:
    with open(path, encoding="utf-8") as f:
        records = json.load(f)
    entries = tuple(IndexEntry(r["id"], r["bytes"], r["notes"], r["status"])
                    for r in records)
    ids = [e.id for e in entries]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate ids in {path}")
    return CorpusIndex(root=root, entries=entries)
