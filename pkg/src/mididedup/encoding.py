"""Canonical Octuple-style tokenization and its hashable serialization.

Each note becomes one 8-field token on a sixteenth-note grid.  The token
list is deduplicated and canonically sorted, so track order, note order
and doubled notes cannot affect the serialization, which is the MD5
preimage for hash-based duplicate detection.

Quantization rules (all exact rational arithmetic, then one rounding):

* position within bar is measured in sixteenths from the bar start and
  rounded half-up (``floor(x + 1/2)``), then folded ``mod 16`` — the grid
  has 16 slots per bar regardless of meter;
* duration is rounded half-up to sixteenth steps and clamped to [1, 64];
* tempo is the bpm active at onset, rounded half-up to a whole number;
* a time-signature change that lands mid-bar starts a new bar.

Serialization: one token per line, the 9 integers
``bar,position,program,pitch,duration,velocity,tempo,ts_num,ts_den``
joined by commas, lines joined by LF, no trailing newline, ASCII.  The
empty sequence serializes to the empty string.  This format is a
compatibility contract; see README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .model import Piece

POSITION_SLOTS = 16
MAX_DURATION = 64
DRUM_PROGRAM = 128


def round_half_up(x: Fraction | float) -> int:
    """floor(x + 1/2); unlike round() this never ties-to-even."""
    if isinstance(x, Fraction):
        return math.floor(x + Fraction(1, 2))
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class OctupleToken:
    bar: int
    position: int          # sixteenth slot, folded to [0, 16)
    program: int           # 0-127, or 128 for drums
    pitch: int
    duration: int          # sixteenth steps, [1, 64]
    velocity: int
    tempo_bpm: int
    timesig: tuple[int, int]

    def as_fields(self) -> tuple[int, ...]:
        return (self.bar, self.position, self.program, self.pitch,
                self.duration, self.velocity, self.tempo_bpm,
                self.timesig[0], self.timesig[1])


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[OctupleToken, ...]
    source_id: str


class BarGrid:
    """Bar indexing induced by a piece's time-signature map."""

    def __init__(self, time_signatures):
        # segments: (start_beat, bar_len_beats, first_bar_index)
        self.segments = []
        bar_index = 0
        sigs = list(time_signatures)
        for i, (beat, num, den) in enumerate(sigs):
            bar_len = Fraction(num * 4, den)
            self.segments.append((beat, bar_len, bar_index))
            if i + 1 < len(sigs):
                span = sigs[i + 1][0] - beat
                bar_index += max(1, math.ceil(span / bar_len))

    def locate(self, onset: Fraction) -> tuple[int, Fraction]:
        """(bar index, offset within bar in beats) for an onset."""
        seg = self.segments[0]
        for s in self.segments:
            if s[0] <= onset:
                seg = s
            else:
                break
        start, bar_len, first_bar = seg
        k = (onset - start) // bar_len
        return first_bar + int(k), onset - start - k * bar_len

    def position_slot(self, onset: Fraction) -> tuple[int, int]:
        """(bar index, sixteenth slot in [0, 16)) for an onset."""
        bar, offset = self.locate(onset)
        return bar, round_half_up(offset * 4) % POSITION_SLOTS

    def bar_length_at(self, beat: Fraction) -> Fraction:
        seg = self.segments[0]
        for s in self.segments:
            if s[0] <= beat:
                seg = s
            else:
                break
        return seg[1]


def encode_octuple(piece: Piece) -> TokenSequence:
    grid = BarGrid(piece.time_signatures)
    tokens = set()
    for note in piece.notes:
        bar, position = grid.position_slot(note.onset)
        duration = min(max(round_half_up(note.duration * 4), 1), MAX_DURATION)
        tokens.add(OctupleToken(
            bar=bar,
            position=position,
            program=DRUM_PROGRAM if note.is_drum else note.program,
            pitch=note.pitch,
            duration=duration,
            velocity=note.velocity,
            tempo_bpm=round_half_up(piece.tempo_at(note.onset)),
            timesig=piece.timesig_at(note.onset),
        ))
    ordered = sorted(tokens, key=OctupleToken.as_fields)
    return TokenSequence(tokens=tuple(ordered), source_id=piece.id)


def serialize_tokens(seq: TokenSequence) -> bytes:
    lines = [",".join(str(v) for v in tok.as_fields()) for tok in seq.tokens]
    return "\n".join(lines).encode("ascii")
