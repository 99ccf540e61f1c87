"""Controlled perturbations for building duplicate-detection benchmarks.

An AugmentationSpec names the perturbation kinds to apply plus their
parameter ranges and a seed. Application is fully deterministic: each
kind draws from its own counter-based substream (derived from the spec
seed and the kind's fixed position), so enabling or disabling one kind
never changes another kind's draws. Within a kind the draw order is
fixed: notes in canonical order, tracks and bars ascending.

A variant may come out identical to its input (for example a transpose
that draws 0); that is legal. Only a variant with no notes left is an
error. Drum tracks are exempt from every pitch-changing kind, and
out-of-range values clamp rather than wrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .encoding import (
    DRUM_PROGRAM,
    MAX_DURATION,
    BarGrid,
    OctupleToken,
    encode_octuple,
    round_half_up,
)
from .model import NoteEvent, Piece
from .rng import CounterRng, derive_seed

KIND_ORDER = (
    "onset_shift",
    "duration_shift",
    "velocity_shift",
    "octave_shift",
    "inst_order",
    "inst_mapping",
    "inst_drop",
    "bar_drop",
    "bar_shift",
    "note_drop",
    "pitch_transpose",
)

ONSET_SHIFT_BOUND = 2      # sixteenths
DURATION_SHIFT_BOUND = 4   # sixteenths
VELOCITY_SHIFT_BOUND = 3
OCTAVE_CHOICES = (-24, -12, 0, 12, 24)
DROP_RATE = 0.15           # bar_drop and note_drop
BAR_SHIFT_RANGE = (1, 4)
TRANSPOSE_BOUND = 6

CHUNK_TOKENS = 1024
FIRE_RATE = 0.5            # chance each enabled kind fires in make_variant_set
MAX_VARIANT_ATTEMPTS = 16

# octuple tokens carry no track identity, so reordering tracks can never
# change the canonical serialization; these variants stay hash-identical
TOKEN_PRESERVING_KINDS = frozenset({"inst_order"})

_SIXTEENTH = Fraction(1, 4)

# rng stream ids (documented draw contract)
_KIND_STREAM = 3
_PICK_STREAM = 4


class DegenerateVariantError(ValueError):
    """The transform removed every note."""


def _check_range(name: str, value: tuple[int, int], bound_lo: int,
                 bound_hi: int) -> None:
    lo, hi = value
    if lo > hi:
        raise ValueError(f"{name} range reversed: {value}")
    if lo < bound_lo or hi > bound_hi:
        raise ValueError(f"{name} outside [{bound_lo}, {bound_hi}]: {value}")


@dataclass(frozen=True)
class AugmentationSpec:
    """Which perturbations to run and with what parameters.

    Ranges are inclusive and may narrow (never widen) the defaults, so a
    pinned range like ``pitch_transpose=(6, 6)`` makes that kind fully
    deterministic.
    """

    enabled: tuple[str, ...] = ()
    rng_seed: int = 0
    onset_shift: tuple[int, int] = (-ONSET_SHIFT_BOUND, ONSET_SHIFT_BOUND)
    duration_shift: tuple[int, int] = (-DURATION_SHIFT_BOUND, DURATION_SHIFT_BOUND)
    velocity_shift: tuple[int, int] = (-VELOCITY_SHIFT_BOUND, VELOCITY_SHIFT_BOUND)
    octave_choices: tuple[int, ...] = OCTAVE_CHOICES
    inst_drop_fraction: float = 0.5   # strict upper bound on dropped share
    bar_drop_rate: float = DROP_RATE
    bar_shift: tuple[int, int] = BAR_SHIFT_RANGE
    note_drop_rate: float = DROP_RATE
    pitch_transpose: tuple[int, int] = (-TRANSPOSE_BOUND, TRANSPOSE_BOUND)

    def __post_init__(self) -> None:
        seen = set()
        for kind in self.enabled:
            if kind not in KIND_ORDER:
                raise ValueError(f"unknown augmentation kind {kind!r}")
            if kind in seen:
                raise ValueError(f"duplicate augmentation kind {kind!r}")
            seen.add(kind)
        _check_range("onset_shift", self.onset_shift,
                     -ONSET_SHIFT_BOUND, ONSET_SHIFT_BOUND)
        _check_range("duration_shift", self.duration_shift,
                     -DURATION_SHIFT_BOUND, DURATION_SHIFT_BOUND)
        _check_range("velocity_shift", self.velocity_shift,
                     -VELOCITY_SHIFT_BOUND, VELOCITY_SHIFT_BOUND)
        _check_range("bar_shift", self.bar_shift, *BAR_SHIFT_RANGE)
        _check_range("pitch_transpose", self.pitch_transpose,
                     -TRANSPOSE_BOUND, TRANSPOSE_BOUND)
        if not self.octave_choices:
            raise ValueError("octave_choices must not be empty")
        bad = [c for c in self.octave_choices if c not in OCTAVE_CHOICES]
        if bad:
            raise ValueError(f"octave_choices outside {OCTAVE_CHOICES}: {bad}")
        if not 0.0 < self.inst_drop_fraction <= 0.5:
            raise ValueError("inst_drop_fraction must be in (0, 0.5]")
        for name, rate in (("bar_drop_rate", self.bar_drop_rate),
                           ("note_drop_rate", self.note_drop_rate)):
            if not 0.0 < rate < 1.0:
                raise ValueError(f"{name} must be in (0, 1)")


def _clamp(v: int, lo: int, hi: int) -> int:
    return lo if v < lo else hi if v > hi else v


def _note_key(n: NoteEvent):
    return (n.onset, n.track_index, n.pitch, n.duration, n.velocity, n.program)


def _tracks(piece: Piece) -> list[int]:
    return sorted({n.track_index for n in piece.notes})


def _pitched_tracks(piece: Piece) -> list[int]:
    return sorted({n.track_index for n in piece.notes if not n.is_drum})


# Each transform returns (notes, params) or None when the kind cannot act
# on this piece (for example a reorder with a single track).


def _onset_shift(piece: Piece, rng: CounterRng, spec: AugmentationSpec):
    lo, hi = spec.onset_shift
    notes = []
    for n in piece.notes:
        d = rng.randint(lo, hi)
        onset = n.onset + d * _SIXTEENTH
        if onset < 0:
            onset = Fraction(0)
        notes.append(replace(n, onset=onset))
    return notes, {"range": [lo, hi]}


def _duration_shift(piece: Piece, rng: CounterRng, spec: AugmentationSpec):
    lo, hi = spec.duration_shift
    notes = []
    for n in piece.notes:
        d = rng.randint(lo, hi)
        dur = n.duration + d * _SIXTEENTH
        if dur < _SIXTEENTH:
            dur = _SIXTEENTH
        notes.append(replace(n, duration=dur))
    return notes, {"range": [lo, hi]}


def _velocity_shift(piece: Piece, rng: CounterRng, spec: AugmentationSpec):
    lo, hi = spec.velocity_shift
    notes = []
    for n in piece.notes:
        d = rng.randint(lo, hi)
        notes.append(replace(n, velocity=_clamp(n.velocity + d, 1, 127)))
    return notes, {"range": [lo, hi]}


def _octave_shift(piece: Piece, rng: CounterRng, spec: AugmentationSpec):
    tracks = _pitched_tracks(piece)
    if not tracks:
        return None
    shifts = {t: rng.choice(spec.octave_choices) for t in tracks}
    notes = []
    for n in piece.notes:
        if n.is_drum or shifts.get(n.track_index, 0) == 0:
            notes.append(n)
        else:
            notes.append(replace(
                n, pitch=_clamp(n.pitch + shifts[n.track_index], 0, 127)))
    return notes, {"by_track": {str(t): s for t, s in shifts.items()}}


def _inst_order(piece: Piece, rng: CounterRng, spec: AugmentationSpec):
    ids = _tracks(piece)
    if len(ids) < 2:
        return None
    target = list(ids)
    rng.shuffle(target)
    mapping = dict(zip(ids, target))
    notes = [replace(n, track_index=mapping[n.track_index]) for n in piece.notes]
    return notes, {"order": target}


def _inst_mapping(piece: Piece, rng: CounterRng, spec: AugmentationSpec):
    tracks = _pitched_tracks(piece)
    if not tracks:
        return None
    programs = {t: rng.randint(0, 127) for t in tracks}
    notes = []
    for n in piece.notes:
        if n.is_drum:
            notes.append(n)
        else:
            notes.append(replace(n, program=programs[n.track_index]))
    return notes, {"programs": {str(t): p for t, p in programs.items()}}


def _inst_drop(piece: Piece, rng: CounterRng, spec: AugmentationSpec):
    ids = _tracks(piece)
    n = len(ids)
    if spec.inst_drop_fraction >= 0.5:
        k_max = (n - 1) // 2  # strictly under half
    else:
        k_max = min((n - 1) // 2, math.ceil(n * spec.inst_drop_fraction) - 1)
    if k_max < 1:
        return None
    k = rng.randint(1, k_max)
    order = list(ids)
    rng.shuffle(order)
    dropped = set(order[:k])
    notes = [x for x in piece.notes if x.track_index not in dropped]
    return notes, {"dropped": sorted(dropped)}


def _bar_drop(piece: Piece, rng: CounterRng, spec: AugmentationSpec):
    grid = BarGrid(piece.time_signatures)
    bars = sorted({grid.locate(n.onset)[0] for n in piece.notes})
    dropped = {b for b in bars if rng.u01() < spec.bar_drop_rate}
    notes = [n for n in piece.notes if grid.locate(n.onset)[0] not in dropped]
    return notes, {"rate": spec.bar_drop_rate, "dropped_bars": sorted(dropped)}


def _bar_shift(piece: Piece, rng: CounterRng, spec: AugmentationSpec):
    nbars = rng.randint(*spec.bar_shift)
    shift = nbars * BarGrid(piece.time_signatures).bar_length_at(Fraction(0))
    notes = [replace(n, onset=n.onset + shift) for n in piece.notes]
    return notes, {"bars": nbars}


def _note_drop(piece: Piece, rng: CounterRng, spec: AugmentationSpec):
    notes = [n for n in piece.notes if rng.u01() >= spec.note_drop_rate]
    return notes, {"rate": spec.note_drop_rate,
                   "dropped_count": len(piece.notes) - len(notes)}


def _pitch_transpose(piece: Piece, rng: CounterRng, spec: AugmentationSpec):
    if not _pitched_tracks(piece):
        return None
    s = rng.randint(*spec.pitch_transpose)
    notes = []
    for n in piece.notes:
        if n.is_drum or s == 0:
            notes.append(n)
        else:
            notes.append(replace(n, pitch=_clamp(n.pitch + s, 0, 127)))
    return notes, {"amount": s}


_TRANSFORMS = {
    "onset_shift": _onset_shift,
    "duration_shift": _duration_shift,
    "velocity_shift": _velocity_shift,
    "octave_shift": _octave_shift,
    "inst_order": _inst_order,
    "inst_mapping": _inst_mapping,
    "inst_drop": _inst_drop,
    "bar_drop": _bar_drop,
    "bar_shift": _bar_shift,
    "note_drop": _note_drop,
    "pitch_transpose": _pitch_transpose,
}

assert tuple(_TRANSFORMS) == KIND_ORDER


def apply_with_provenance(piece: Piece,
                          spec: AugmentationSpec) -> tuple[Piece, list[dict]]:
    """Run every enabled kind in canonical order; returns the variant plus
    one {kind, params} record per kind that acted."""
    if not piece.notes:
        raise ValueError("cannot augment an empty piece")
    current = piece
    applied: list[dict] = []
    for idx, kind in enumerate(KIND_ORDER):
        if kind not in spec.enabled:
            continue
        rng = CounterRng(derive_seed(spec.rng_seed, idx), _KIND_STREAM)
        result = _TRANSFORMS[kind](current, rng, spec)
        if result is None:
            continue
        notes, params = result
        if not notes:
            raise DegenerateVariantError(f"degenerate variant: {kind} removed every note")
        current = current.with_notes(sorted(notes, key=_note_key))
        applied.append({"kind": kind, "params": params})
    return current, applied


def apply_augmentation(piece: Piece, spec: AugmentationSpec) -> Piece:
    """Deterministic variant of ``piece`` under ``spec``. The output may
    equal the input; an output with no notes raises DegenerateVariantError."""
    variant, _ = apply_with_provenance(piece, spec)
    return variant


def make_variant_set(piece: Piece, n: int,
                     seed: int = 0) -> list[tuple[Piece, dict]]:
    """n independent variants, each from its own derived seed.

    Per variant, every kind fires independently with probability 0.5;
    the provenance record lists the seed, the kinds that acted and their
    drawn parameters. Seeds that produce an empty variant are resampled.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    out = []
    for i in range(n):
        for attempt in range(MAX_VARIANT_ATTEMPTS):
            sub = derive_seed(seed, i, attempt)
            pick = CounterRng(sub, _PICK_STREAM)
            enabled = tuple(k for k in KIND_ORDER if pick.u01() < FIRE_RATE)
            spec = AugmentationSpec(enabled=enabled, rng_seed=derive_seed(sub, 1))
            try:
                variant, applied = apply_with_provenance(piece, spec)
            except DegenerateVariantError:
                continue
            out.append((variant, {"rng_seed": sub, "applied": applied}))
            break
        else:
            raise DegenerateVariantError(
                f"no viable variant for {piece.id!r} after "
                f"{MAX_VARIANT_ATTEMPTS} attempts")
    return out


def neighbor_segments(piece: Piece, seed: int = 0) -> tuple[Piece, Piece]:
    """Two sub-pieces backing distinct 1024-token chunks of the encoding.

    The token sequence is split into consecutive chunks of 1024 (the last
    may be shorter); two distinct chunks are drawn and each is mapped back
    to the notes whose tokens fall inside it.
    """
    seq = encode_octuple(piece)
    tokens = seq.tokens
    n_chunks = math.ceil(len(tokens) / CHUNK_TOKENS)
    if n_chunks < 2:
        raise ValueError(
            f"insufficient length: {len(tokens)} tokens yield {n_chunks} chunk(s)")
    rng = CounterRng(seed, _PICK_STREAM)
    first = rng.randint(0, n_chunks - 1)
    second = rng.randint(0, n_chunks - 2)
    if second >= first:
        second += 1
    index_of = {tok: i for i, tok in enumerate(tokens)}
    grid = BarGrid(piece.time_signatures)

    def chunk_of(note: NoteEvent) -> int:
        bar, position = grid.position_slot(note.onset)
        tok = OctupleToken(
            bar=bar,
            position=position,
            program=DRUM_PROGRAM if note.is_drum else note.program,
            pitch=note.pitch,
            duration=min(max(round_half_up(note.duration * 4), 1), MAX_DURATION),
            velocity=note.velocity,
            tempo_bpm=round_half_up(piece.tempo_at(note.onset)),
            timesig=piece.timesig_at(note.onset),
        )
        return index_of[tok] // CHUNK_TOKENS

    def sub_piece(chunk: int, tag: str) -> Piece:
        notes = tuple(n for n in piece.notes if chunk_of(n) == chunk)
        return replace(piece, id=f"{piece.id}#{tag}", notes=notes)

    return sub_piece(first, f"seg{first}"), sub_piece(second, f"seg{second}")


def eligible_kinds(piece: Piece,
                   spec: AugmentationSpec | None = None) -> tuple[str, ...]:
    """Kinds that can act on this piece (enough tracks, pitched notes...)."""
    spec = spec or AugmentationSpec()
    n_tracks = len(_tracks(piece))
    has_pitched = bool(_pitched_tracks(piece))
    if spec.inst_drop_fraction >= 0.5:
        drop_max = (n_tracks - 1) // 2
    else:
        drop_max = min((n_tracks - 1) // 2,
                       math.ceil(n_tracks * spec.inst_drop_fraction) - 1)
    out = []
    for kind in KIND_ORDER:
        if kind in ("octave_shift", "inst_mapping", "pitch_transpose"):
            if not has_pitched:
                continue
        elif kind == "inst_order":
            if n_tracks < 2:
                continue
        elif kind == "inst_drop":
            if drop_max < 1:
                continue
        out.append(kind)
    return tuple(out)
