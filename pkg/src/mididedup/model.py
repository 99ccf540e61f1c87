"""Note-level representation of a parsed MIDI file.

Timing lives in the beat domain (quarter-note units) as exact
``fractions.Fraction`` values, with denominators dividing the source
file's ticks-per-quarter.  Keeping beats rational makes the downstream
sixteenth-grid quantization bit-reproducible; floats would let equal
files drift apart and break hash matching.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction

DEFAULT_BPM = 120.0
DEFAULT_TIMESIG = (4, 4)
VALID_DENOMINATORS = (1, 2, 4, 8, 16, 32)


@dataclass(frozen=True)
class NoteEvent:
    """One sounded note.

    ``onset`` and ``duration`` are in beats (quarter notes); ``duration``
    is strictly positive.  ``is_drum`` follows the MIDI channel-10
    convention; drum notes keep their program for bookkeeping but are
    exempt from pitched transforms.
    """

    onset: Fraction
    duration: Fraction
    pitch: int
    velocity: int
    program: int
    is_drum: bool = False
    track_index: int = 0

    def __post_init__(self):
        if not (0 <= self.pitch <= 127):
            raise ValueError(f"pitch {self.pitch} out of range")
        if not (1 <= self.velocity <= 127):
            raise ValueError(f"velocity {self.velocity} out of range")
        if not (0 <= self.program <= 127):
            raise ValueError(f"program {self.program} out of range")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.onset < 0:
            raise ValueError("onset must be >= 0")

    @property
    def end(self) -> Fraction:
        return self.onset + self.duration


@dataclass(frozen=True)
class Piece:
    """A parsed MIDI file: notes plus tempo / time-signature maps.

    ``tempo_map`` holds (beat, bpm) pairs and ``time_signatures``
    (beat, numerator, denominator) triples, both sorted by beat with a
    guaranteed entry at beat 0 (120 bpm and 4/4 are inserted when the
    file does not state them, matching the SMF defaults).
    """

    id: str
    notes: tuple[NoteEvent, ...]
    tempo_map: tuple[tuple[Fraction, float], ...] = ((Fraction(0), DEFAULT_BPM),)
    time_signatures: tuple[tuple[Fraction, int, int], ...] = field(
        default=((Fraction(0), 4, 4),)
    )
    ticks_per_quarter: int = 480

    def __post_init__(self):
        if self.ticks_per_quarter <= 0:
            raise ValueError("ticks_per_quarter must be > 0")
        for maps, name in ((self.tempo_map, "tempo_map"),
                           (self.time_signatures, "time_signatures")):
            if not maps:
                raise ValueError(f"{name} must be non-empty")
            if maps[0][0] != 0:
                raise ValueError(f"{name} must start at beat 0")
            beats = [m[0] for m in maps]
            if beats != sorted(beats):
                raise ValueError(f"{name} must be sorted by beat")
        for _, bpm in self.tempo_map:
            if bpm <= 0:
                raise ValueError("bpm must be > 0")
        for _, num, den in self.time_signatures:
            if num < 1 or den not in VALID_DENOMINATORS:
                raise ValueError(f"bad time signature {num}/{den}")

    def with_notes(self, notes) -> "Piece":
        return replace(self, notes=tuple(notes))

    def tempo_at(self, beat: Fraction) -> float:
        bpm = self.tempo_map[0][1]
        for b, value in self.tempo_map:
            if b <= beat:
                bpm = value
            else:
                break
        return bpm

    def timesig_at(self, beat: Fraction) -> tuple[int, int]:
        sig = self.time_signatures[0][1:]
        for b, num, den in self.time_signatures:
            if b <= beat:
                sig = (num, den)
            else:
                break
        return sig


def total_note_count(piece: Piece) -> int:
    return len(piece.notes)


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _frac(s: str) -> Fraction:
    num, den = s.split("/")
    return Fraction(int(num), int(den))


def piece_to_text(piece: Piece) -> str:
    """Serialize to the internal text dump (JSON with exact rationals)."""
    doc = {
        "id": piece.id,
        "ticks_per_quarter": piece.ticks_per_quarter,
        "tempo_map": [[_frac_str(b), bpm] for b, bpm in piece.tempo_map],
        "time_signatures": [[_frac_str(b), n, d] for b, n, d in piece.time_signatures],
        "notes": [
            [_frac_str(n.onset), _frac_str(n.duration), n.pitch, n.velocity,
             n.program, int(n.is_drum), n.track_index]
            for n in piece.notes
        ],
    }
    return json.dumps(doc, separators=(",", ":"))


def piece_from_text(text: str) -> Piece:
    doc = json.loads(text)
    notes = tuple(
        NoteEvent(onset=_frac(o), duration=_frac(d), pitch=p, velocity=v,
                  program=pr, is_drum=bool(dr), track_index=t)
        for o, d, p, v, pr, dr, t in doc["notes"]
    )
    return Piece(
        id=doc["id"],
        notes=notes,
        tempo_map=tuple((_frac(b), float(bpm)) for b, bpm in doc["tempo_map"]),
        time_signatures=tuple((_frac(b), n, d) for b, n, d in doc["time_signatures"]),
        ticks_per_quarter=doc["ticks_per_quarter"],
    )
