"""Minimal standard-MIDI-file note reader for embedding purposes.

This reader is deliberately small: it extracts sounded notes (onset
tick, duration, pitch, velocity, program, drum flag) from format 0/1
files and refuses anything it cannot interpret cleanly. Files it
rejects are skipped by the exporter, never guessed at.
"""

from __future__ import annotations

from dataclasses import dataclass


class MidiReadError(ValueError):
    """The file is not a MIDI file this reader can interpret."""


@dataclass(frozen=True)
class Note:
    tick: int
    duration: int  # ticks, > 0
    pitch: int
    velocity: int
    program: int
    channel: int

    @property
    def is_drum(self) -> bool:
        return self.channel == 9


@dataclass(frozen=True)
class MidiContent:
    division: int  # ticks per quarter note
    notes: tuple[Note, ...]


def _read_vlq(data: bytes, pos: int) -> tuple[int, int]:
    value = 0
    for i in range(4):
        if pos >= len(data):
            raise MidiReadError("truncated variable-length quantity")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise MidiReadError("variable-length quantity over 4 bytes")


def _track_notes(data: bytes, division: int) -> list[Note]:
    pos = 0
    tick = 0
    running = None
    programs = [0] * 16
    open_notes: dict[tuple[int, int], tuple[int, int, int]] = {}
    notes: list[Note] = []

    def close(channel: int, pitch: int, end_tick: int) -> None:
        started = open_notes.pop((channel, pitch), None)
        if started is None:
            return
        start, velocity, program = started
        if end_tick > start:
            notes.append(Note(start, end_tick - start, pitch, velocity,
                              program, channel))

    while pos < len(data):
        delta, pos = _read_vlq(data, pos)
        tick += delta
        if pos >= len(data):
            raise MidiReadError("event after last delta time missing")
        status = data[pos]
        if status >= 0x80:
            pos += 1
        elif running is None:
            raise MidiReadError("data byte without running status")
        else:
            status = running

        if status == 0xFF:  # meta
            running = None
            if pos >= len(data):
                raise MidiReadError("truncated meta event")
            pos += 1  # type byte
            length, pos = _read_vlq(data, pos)
            pos += length
        elif status in (0xF0, 0xF7):  # sysex
            running = None
            length, pos = _read_vlq(data, pos)
            pos += length
        elif status >= 0xF0:
            raise MidiReadError(f"unsupported system message 0x{status:02x}")
        else:
            running = status
            kind = status & 0xF0
            channel = status & 0x0F
            n_data = 1 if kind in (0xC0, 0xD0) else 2
            if pos + n_data > len(data):
                raise MidiReadError("truncated channel event")
            d1 = data[pos]
            d2 = data[pos + 1] if n_data == 2 else 0
            pos += n_data
            if kind == 0x90 and d2 > 0:
                close(channel, d1, tick)  # restrike cuts the old note
                open_notes[(channel, d1)] = (tick, d2, programs[channel])
            elif kind == 0x80 or (kind == 0x90 and d2 == 0):
                close(channel, d1, tick)
            elif kind == 0xC0:
                programs[channel] = d1
    for channel, pitch in list(open_notes):
        close(channel, pitch, tick)
    return notes


def read_midi(data: bytes) -> MidiContent:
    if len(data) < 14 or data[:4] != b"MThd":
        raise MidiReadError("missing MThd header")
    header_len = int.from_bytes(data[4:8], "big")
    if header_len < 6:
        raise MidiReadError("header too short")
    fmt = int.from_bytes(data[8:10], "big")
    n_tracks = int.from_bytes(data[10:12], "big")
    division = int.from_bytes(data[12:14], "big")
    if fmt not in (0, 1):
        raise MidiReadError(f"unsupported format {fmt}")
    if division & 0x8000:
        raise MidiReadError("SMPTE time division not supported")
    if division == 0:
        raise MidiReadError("zero time division")

    notes: list[Note] = []
    pos = 8 + header_len
    seen = 0
    while seen < n_tracks and pos + 8 <= len(data):
        chunk = data[pos:pos + 4]
        length = int.from_bytes(data[pos + 4:pos + 8], "big")
        body = data[pos + 8:pos + 8 + length]
        if len(body) != length:
            raise MidiReadError("truncated chunk")
        pos += 8 + length
        if chunk != b"MTrk":
            continue  # alien chunks are legal, skip them
        seen += 1
        notes.extend(_track_notes(body, division))
    if seen != n_tracks:
        raise MidiReadError(f"expected {n_tracks} tracks, found {seen}")
    notes.sort(key=lambda n: (n.tick, n.channel, n.pitch, n.duration))
    return MidiContent(division=division, notes=tuple(notes))
