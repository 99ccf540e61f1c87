"""Standard MIDI File (format 0/1) reader and a minimal writer.

The reader works on raw bytes and reports failures as
:class:`MidiParseError` carrying the byte offset where decoding stopped.
Only the events the note model needs are materialized: note on/off,
program change, set-tempo and time-signature metas.  Everything else
(control changes, sysex, other metas, unknown chunk types) is skipped by
length, which the SMF spec explicitly allows.

Conventions and edge handling:

* note-on with velocity 0 is a note-off;
* overlapping same-pitch notes on one channel: the earlier note is closed
  at the later note-on (last-on-wins) — stacked duplicate notes in noisy
  corpora otherwise inflate durations;
* note-ons still open at end-of-track are closed at the end-of-track tick;
* zero-duration notes are dropped;
* program state is tracked per (track, channel) with GM default 0; a
  note's program is its channel's program at onset time within its track;
* format 2 files and SMPTE time divisions are rejected.
"""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction

from .model import DEFAULT_BPM, NoteEvent, Piece

META_TEMPO = 0x51
META_TIMESIG = 0x58
META_END_OF_TRACK = 0x2F
DRUM_CHANNEL = 9


class MidiParseError(ValueError):
    """Malformed SMF data.  ``offset`` is the absolute byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class _Reader:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def error(self, message: str) -> MidiParseError:
        return MidiParseError(message, self.pos)

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise self.error(f"unexpected end of data, wanted {n} bytes")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        b = self.take(2)
        return (b[0] << 8) | b[1]

    def u32(self) -> int:
        b = self.take(4)
        return (b[0] << 24) | (b[1] << 16) | (b[2] << 8) | b[3]

    def vlq(self) -> int:
        """Variable-length quantity, big-endian 7-bit groups."""
        value = 0
        for _ in range(4):
            byte = self.u8()
            value = (value << 7) | (byte & 0x7F)
            if not byte & 0x80:
                return value
        raise self.error("variable-length quantity longer than 4 bytes")


def parse_midi(data: bytes, id: str) -> Piece:
    """Parse SMF bytes into a :class:`Piece` with beat-domain timing."""
    r = _Reader(data)
    if r.take(4) != b"MThd":
        r.pos = 0
        raise r.error("missing MThd header")
    header_len = r.u32()
    if header_len < 6:
        raise r.error(f"header length {header_len} < 6")
    fmt = r.u16()
    ntrks = r.u16()
    division = r.u16()
    if fmt not in (0, 1):
        raise MidiParseError(f"unsupported SMF format {fmt}", r.pos - 6)
    if division & 0x8000:
        raise MidiParseError("SMPTE time division unsupported", r.pos - 2)
    if division == 0:
        raise MidiParseError("ticks per quarter is zero", r.pos - 2)
    r.take(header_len - 6)  # spec: ignore any extra header bytes

    raw_notes = []        # (onset_tick, dur_ticks, pitch, vel, program, drum, track)
    tempo_events = []     # (tick, track, seq, bpm)
    timesig_events = []   # (tick, track, seq, num, den)
    track_index = 0
    while track_index < ntrks and r.pos < len(r.data):
        chunk_type = r.take(4)
        chunk_len = r.u32()
        if chunk_type != b"MTrk":
            r.take(chunk_len)  # alien chunk: skip
            continue
        _parse_track(_Reader(r.data[:r.pos + chunk_len], r.pos), track_index,
                     raw_notes, tempo_events, timesig_events)
        r.take(chunk_len)
        track_index += 1
    if track_index < ntrks:
        raise r.error(f"expected {ntrks} tracks, found {track_index}")

    tpq = division
    notes = []
    for onset_tick, dur_ticks, pitch, vel, program, drum, trk in raw_notes:
        if dur_ticks <= 0:
            continue
        notes.append(NoteEvent(
            onset=Fraction(onset_tick, tpq),
            duration=Fraction(dur_ticks, tpq),
            pitch=pitch,
            velocity=vel,
            program=program,
            is_drum=drum,
            track_index=trk,
        ))
    # number only the note-bearing tracks, densely and in file order, so
    # conductor/meta tracks do not shift the labels around
    dense = {t: i for i, t in enumerate(sorted({n.track_index for n in notes}))}
    notes = [replace(n, track_index=dense[n.track_index]) for n in notes]
    notes.sort(key=lambda n: (n.onset, n.track_index, n.pitch, n.duration,
                              n.velocity, n.program))

    tempo_map = _build_map(tempo_events, tpq, (DEFAULT_BPM,))
    timesigs = _build_map(timesig_events, tpq, (4, 4))
    return Piece(
        id=id,
        notes=tuple(notes),
        tempo_map=tuple((b, v[0]) for b, v in tempo_map),
        time_signatures=tuple((b, v[0], v[1]) for b, v in timesigs),
        ticks_per_quarter=tpq,
    )


def _build_map(events, tpq: int, default: tuple):
    """Merge per-track meta events into a beat-sorted map.

    Events are ordered by (tick, track, in-track sequence); the last event
    at a given beat wins.  A default entry is inserted at beat 0 if the
    file has none there.
    """
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    merged: list[tuple[Fraction, tuple]] = []
    for ev in events:
        beat = Fraction(ev[0], tpq)
        value = tuple(ev[3:])
        if merged and merged[-1][0] == beat:
            merged[-1] = (beat, value)
        else:
            merged.append((beat, value))
    if not merged or merged[0][0] != 0:
        merged.insert(0, (Fraction(0), default))
    return merged


def _parse_track(r: _Reader, track_index: int, raw_notes, tempo_events,
                 timesig_events) -> None:
    tick = 0
    seq = 0
    running_status = None
    # (channel, pitch) -> (onset_tick, velocity, program); one note per key
    # because a re-strike closes the previous note (last-on-wins).
    active: dict[tuple[int, int], tuple[int, int, int]] = {}
    channel_program = [0] * 16

    def close(key, off_tick):
        onset_tick, vel, program = active.pop(key)
        channel, pitch = key
        raw_notes.append((onset_tick, off_tick - onset_tick, pitch, vel,
                          program, channel == DRUM_CHANNEL, track_index))

    while r.pos < len(r.data):
        tick += r.vlq()
        status = r.u8()
        if status < 0x80:
            if running_status is None:
                raise MidiParseError("data byte without running status", r.pos - 1)
            status = running_status
            r.pos -= 1
        if status == 0xFF:
            running_status = None  # metas cancel running status
            meta_type = r.u8()
            length = r.vlq()
            payload = r.take(length)
            if meta_type == META_TEMPO:
                if length != 3:
                    raise MidiParseError(f"tempo meta length {length} != 3", r.pos - length)
                mpq = (payload[0] << 16) | (payload[1] << 8) | payload[2]
                if mpq > 0:
                    tempo_events.append((tick, track_index, seq, 60_000_000.0 / mpq))
            elif meta_type == META_TIMESIG:
                if length < 2:
                    raise MidiParseError("truncated time-signature meta", r.pos - length)
                num, den_pow = payload[0], payload[1]
                if num >= 1 and den_pow <= 5:
                    timesig_events.append((tick, track_index, seq, num, 1 << den_pow))
            elif meta_type == META_END_OF_TRACK:
                break
            seq += 1
            continue
        if status in (0xF0, 0xF7):  # sysex: length-prefixed payload
            running_status = None
            r.take(r.vlq())
            continue
        if status < 0x80 or 0xF0 <= status < 0xFF:
            raise MidiParseError(f"unexpected status byte 0x{status:02X}", r.pos - 1)

        running_status = status
        kind = status & 0xF0
        channel = status & 0x0F
        if kind in (0x80, 0x90, 0xA0, 0xB0, 0xE0):
            d1, d2 = r.u8(), r.u8()
        else:  # program change, channel pressure
            d1, d2 = r.u8(), 0
        if kind == 0xC0:
            channel_program[channel] = d1 & 0x7F
        elif kind == 0x90 and d2 > 0:
            key = (channel, d1 & 0x7F)
            if key in active:
                close(key, tick)
            active[key] = (tick, d2 & 0x7F, channel_program[channel])
        elif kind == 0x80 or (kind == 0x90 and d2 == 0):
            key = (channel, d1 & 0x7F)
            if key in active:
                close(key, tick)
        seq += 1

    for key in sorted(active):  # orphans close at end of track
        close(key, tick)


# --- writing -----------------------------------------------------------

def _vlq_bytes(value: int) -> bytes:
    if value < 0:
        raise ValueError("negative delta time")
    out = [value & 0x7F]
    value >>= 7
    while value:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(out))


def _track_chunk(events: list[tuple[int, bytes]]) -> bytes:
    """Assemble absolute-tick events (already ordered) into an MTrk chunk."""
    body = bytearray()
    prev = 0
    for tick, payload in events:
        body += _vlq_bytes(tick - prev)
        body += payload
        prev = tick
    body += _vlq_bytes(0) + bytes([0xFF, META_END_OF_TRACK, 0x00])
    return b"MTrk" + len(body).to_bytes(4, "big") + bytes(body)


def write_midi(piece: Piece, extra_meta: tuple[bytes, ...] = ()) -> bytes:
    """Render a Piece as a format-1 SMF byte string.

    Track 0 carries tempo and time-signature metas (plus ``extra_meta``
    payloads, e.g. track-name events, for building metadata-only variant
    fixtures); each source track index becomes one note track.  Beats must
    be representable on the piece's tick grid.
    """
    tpq = piece.ticks_per_quarter

    def to_tick(beat: Fraction) -> int:
        t = beat * tpq
        if t.denominator != 1:
            raise ValueError(f"beat {beat} not on the {tpq}-tick grid")
        return int(t)

    conductor: list[tuple[int, bytes]] = []
    for i, meta in enumerate(extra_meta):
        conductor.append((0, bytes([0xFF, 0x03, len(meta)]) + meta))
    for beat, num, den in piece.time_signatures:
        conductor.append((to_tick(beat), bytes([0xFF, META_TIMESIG, 4, num,
                                                den.bit_length() - 1, 24, 8])))
    for beat, bpm in piece.tempo_map:
        mpq = round(60_000_000 / bpm)
        conductor.append((to_tick(beat), bytes([0xFF, META_TEMPO, 3]) + mpq.to_bytes(3, "big")))
    conductor.sort(key=lambda e: e[0])

    track_ids = sorted({n.track_index for n in piece.notes})
    non_drum_channels = [c for c in range(16) if c != DRUM_CHANNEL]
    tracks = []
    for pos, trk in enumerate(track_ids):
        notes = [n for n in piece.notes if n.track_index == trk]
        drum_track = any(n.is_drum for n in notes)
        channel = DRUM_CHANNEL if drum_track else non_drum_channels[pos % 15]
        events: list[tuple[int, int, bytes]] = []  # (tick, order, payload)
        programs = sorted({n.program for n in notes})
        if programs and not drum_track:
            events.append((0, 0, bytes([0xC0 | channel, programs[0]])))
        current_program = programs[0] if programs else 0
        for n in sorted(notes, key=lambda n: (n.onset, n.pitch)):
            on_tick, off_tick = to_tick(n.onset), to_tick(n.end)
            if not drum_track and n.program != current_program:
                events.append((on_tick, 1, bytes([0xC0 | channel, n.program])))
                current_program = n.program
            events.append((on_tick, 2, bytes([0x90 | channel, n.pitch, n.velocity])))
            events.append((off_tick, 1, bytes([0x80 | channel, n.pitch, 0])))
        # note-offs sort before note-ons at the same tick so back-to-back
        # repeats survive the reader's last-on-wins rule
        events.sort(key=lambda e: (e[0], e[1]))
        tracks.append([(t, p) for t, _, p in events])

    header = b"MThd" + (6).to_bytes(4, "big") + (1).to_bytes(2, "big") \
        + (1 + len(tracks)).to_bytes(2, "big") + tpq.to_bytes(2, "big")
    return header + _track_chunk(conductor) + b"".join(_track_chunk(t) for t in tracks)
