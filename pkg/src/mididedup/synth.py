"""Synthetic benchmark corpora with known duplicate structure.

Each base piece gets its own artist directory and a handful of
variants, named so the path-derived ground truth ("artist/title" after
stripping one numeric suffix) matches the written manifest exactly:

    artist007/song.mid      base
    artist007/song.2.mid    first variant
    artist007/song.3.mid    second variant

Every variant applies exactly one perturbation kind, cycled round-robin
across the corpus so all kinds get even coverage; the manifest records
which kind acted with which drawn parameters. Generation is fully
determined by the seed: every piece, kind draw, and retry consumes its
own derived counter stream, so corpora are bit-identical across runs
and platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .augment import (
    KIND_ORDER,
    MAX_VARIANT_ATTEMPTS,
    AugmentationSpec,
    DegenerateVariantError,
    apply_with_provenance,
    eligible_kinds,
)
from .model import NoteEvent, Piece
from .rng import CounterRng, derive_seed
from .smf import write_midi

MAJOR_SCALE = (0, 2, 4, 5, 7, 9, 11)
DRUM_PITCHES = (35, 36, 38, 40, 42, 44, 46, 49, 51)
DURATION_CHOICES = (1, 2, 3, 4, 6, 8)  # sixteenths
TIMESIG_CHOICES = ((4, 4), (4, 4), (3, 4))

_GEN_STREAM = 1


@dataclass(frozen=True)
class BenchEntry:
    id: str
    group: str
    base_id: str | None
    applied: tuple[dict, ...]  # [{kind, params}] records, empty for bases

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "group": self.group,
            "base_id": self.base_id,
            "applied": list(self.applied),
        }


def generate_piece(piece_id: str, rng: CounterRng) -> Piece:
    """A short diatonic multi-track piece, 8 to 32 bars long."""
    bars = rng.randint(8, 32)
    n_tracks = rng.randint(1, 6)
    num, den = rng.choice(TIMESIG_CHOICES)
    bar_beats = Fraction(num * 4, den)
    slots_per_bar = int(bar_beats * 4)
    bpm = float(rng.randint(70, 160))
    root = rng.randint(0, 11)

    # track 0 is always pitched so every piece can transpose
    drum_track = None
    if n_tracks >= 2 and rng.u01() < 0.3:
        drum_track = n_tracks - 1
    programs = {}
    octaves = {}
    densities = {}
    for t in range(n_tracks):
        programs[t] = rng.randint(0, 127)
        octaves[t] = rng.randint(3, 6)
        densities[t] = rng.randint(1, 4)

    notes = []
    for bar in range(bars):
        bar_start = bar * bar_beats
        for t in range(n_tracks):
            for _ in range(densities[t]):
                slot = rng.randint(0, slots_per_bar - 1)
                onset = bar_start + Fraction(slot, 4)
                dur = Fraction(rng.choice(DURATION_CHOICES), 4)
                vel = rng.randint(45, 110)
                if t == drum_track:
                    pitch = rng.choice(DRUM_PITCHES)
                    notes.append(NoteEvent(
                        onset=onset, duration=dur, pitch=pitch, velocity=vel,
                        program=0, is_drum=True, track_index=t))
                else:
                    octv = octaves[t] + rng.randint(-1, 1)
                    pitch = root + 12 * octv + rng.choice(MAJOR_SCALE)
                    pitch = max(0, min(127, pitch))
                    notes.append(NoteEvent(
                        onset=onset, duration=dur, pitch=pitch, velocity=vel,
                        program=programs[t], is_drum=False, track_index=t))
    notes.sort(key=lambda n: (n.onset, n.track_index, n.pitch,
                              n.duration, n.velocity, n.program))
    # same-pitch overlaps within a track cannot survive a MIDI round
    # trip (the second note-on cuts the first short), so keep the
    # earliest note and drop later conflicting draws
    kept = []
    busy_until: dict[tuple[int, int], Fraction] = {}
    for n in notes:
        key = (n.track_index, n.pitch)
        end = busy_until.get(key)
        if end is not None and n.onset < end:
            continue
        busy_until[key] = n.end
        kept.append(n)
    return Piece(
        id=piece_id,
        notes=tuple(kept),
        tempo_map=((Fraction(0), bpm),),
        time_signatures=((Fraction(0), num, den),),
    )


def make_variant(base: Piece, variant_id: str, seed: int, base_index: int,
                 variant_index: int,
                 kind_index: int) -> tuple[Piece, list[dict]]:
    """One single-kind variant plus its {kind, params} provenance.

    The kind is ``KIND_ORDER[kind_index]`` advanced to the next kind the
    piece supports; draws that empty the piece retry on a fresh stream.
    """
    kinds = eligible_kinds(base)
    if not kinds:
        raise ValueError(f"piece {base.id!r} supports no augmentation")
    for off in range(len(KIND_ORDER)):
        kind = KIND_ORDER[(kind_index + off) % len(KIND_ORDER)]
        if kind in kinds:
            break
    for attempt in range(MAX_VARIANT_ATTEMPTS):
        spec = AugmentationSpec(
            enabled=(kind,),
            rng_seed=derive_seed(seed, base_index, variant_index, attempt),
        )
        try:
            piece, applied = apply_with_provenance(base, spec)
        except DegenerateVariantError:
            continue
        return Piece(
            id=variant_id,
            notes=piece.notes,
            tempo_map=piece.tempo_map,
            time_signatures=piece.time_signatures,
            ticks_per_quarter=piece.ticks_per_quarter,
        ), applied
    raise RuntimeError(
        f"no usable variant for {base.id!r} after {MAX_VARIANT_ATTEMPTS} tries")


def synth_benchmark(out_dir: str | Path, *, n_bases: int = 200,
                    n_variants: int = 3, seed: int = 42) -> list[BenchEntry]:
    """Write the benchmark corpus and its manifest under ``out_dir``.

    Returns the manifest entries (also saved as bench.json), sorted by id.
    """
    if n_bases < 1 or n_variants < 0:
        raise ValueError("need at least one base and non-negative variants")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries: list[BenchEntry] = []
    for i in range(n_bases):
        artist = f"artist{i:03d}"
        group = f"{artist}/song"
        base_id = f"{artist}/song.mid"
        rng = CounterRng(derive_seed(seed, i), _GEN_STREAM)
        base = generate_piece(base_id, rng)
        (out_dir / artist).mkdir(exist_ok=True)
        (out_dir / base_id).write_bytes(write_midi(base))
        entries.append(BenchEntry(id=base_id, group=group,
                                  base_id=None, applied=()))
        for v in range(n_variants):
            vid = f"{artist}/song.{v + 2}.mid"
            piece, applied = make_variant(base, vid, seed, i, v,
                                          kind_index=i * n_variants + v)
            (out_dir / vid).write_bytes(write_midi(piece))
            entries.append(BenchEntry(id=vid, group=group,
                                      base_id=base_id,
                                      applied=tuple(applied)))
    entries.sort(key=lambda e: e.id)
    write_bench_manifest(out_dir / "bench.json", entries)
    return entries


def write_bench_manifest(path: str | Path,
                         entries: Sequence[BenchEntry]) -> None:
    with open(path, "w") as fh:
        json.dump([e.to_json() for e in entries], fh, indent=1)
        fh.write("\n")


def read_bench_manifest(path: str | Path) -> list[BenchEntry]:
    with open(path) as fh:
        rows = json.load(fh)
    return [BenchEntry(id=r["id"], group=r["group"],
                       base_id=r["base_id"],
                       applied=tuple(r["applied"])) for r in rows]
