"""Tokenization: rounding rules, canonical ordering, serialization bytes,
and the MD5 preimage contract checked through hashlib AND an independent
pure-python digest."""

import hashlib
from fractions import Fraction

from helpers import md5_oracle, note, piece

from mididedup.detectors import token_hash
from mididedup.encoding import (
    DRUM_PROGRAM,
    MAX_DURATION,
    BarGrid,
    encode_octuple,
    round_half_up,
    serialize_tokens,
)


def test_round_half_up():
    assert round_half_up(Fraction(1, 2)) == 1
    assert round_half_up(Fraction(3, 2)) == 2   # not ties-to-even
    assert round_half_up(Fraction(5, 2)) == 3
    assert round_half_up(Fraction(-1, 2)) == 0
    assert round_half_up(Fraction(7, 3)) == 2
    assert round_half_up(2.5) == 3
    assert round_half_up(2.49) == 2


def test_onset_third_beat_rounds_to_slot_one():
    # 1/3 beat = 4/3 sixteenths -> floor(4/3 + 1/2) = 1
    p = piece([note(Fraction(1, 3), 1, 60, 64)])
    assert encode_octuple(p).tokens[0].position == 1


def test_basic_token_fields(simple_piece):
    toks = encode_octuple(simple_piece).tokens
    by_pitch = {t.pitch: t for t in toks}
    assert by_pitch[60].as_fields() == (0, 0, 0, 60, 4, 80, 120, 4, 4)
    assert by_pitch[64].as_fields() == (0, 4, 0, 64, 2, 70, 120, 4, 4)
    assert by_pitch[67].as_fields() == (0, 8, 24, 67, 8, 90, 120, 4, 4)
    assert by_pitch[38].program == DRUM_PROGRAM


def test_duration_clamped_to_bounds():
    p = piece([note(0, 20, 60, 64),            # 80 sixteenths -> 64
               note(0, Fraction(1, 100), 62, 64)])  # rounds to 0 -> 1
    durs = {t.pitch: t.duration for t in encode_octuple(p).tokens}
    assert durs[60] == MAX_DURATION
    assert durs[62] == 1


def test_position_within_later_bar():
    p = piece([note(5, 1, 60, 64)])  # bar 1, beat 1 -> slot 4
    tok = encode_octuple(p).tokens[0]
    assert (tok.bar, tok.position) == (1, 4)


def test_position_folds_mod_16_at_bar_edge():
    # 63/16 beats = 15.75 sixteenths rounds to 16, folding to slot 0
    # while the bar index stays 0
    p = piece([note(Fraction(63, 16), 1, 60, 64)])
    tok = encode_octuple(p).tokens[0]
    assert (tok.bar, tok.position) == (0, 0)


def test_three_four_bars():
    p = piece([note(3, 1, 60, 64), note(4, 1, 62, 64)], timesig=(3, 4))
    toks = {t.pitch: t for t in encode_octuple(p).tokens}
    assert (toks[60].bar, toks[60].position) == (1, 0)
    assert (toks[62].bar, toks[62].position) == (1, 4)
    assert toks[60].timesig == (3, 4)


def test_midbar_timesig_change_starts_new_bar():
    grid = BarGrid([(Fraction(0), 4, 4), (Fraction(6), 3, 4)])
    assert grid.locate(Fraction(0))[0] == 0
    assert grid.locate(Fraction(4))[0] == 1
    # change lands mid-bar 1: beat 6 opens bar 2
    assert grid.locate(Fraction(6))[0] == 2
    assert grid.locate(Fraction(9))[0] == 3


def test_duplicate_notes_collapse():
    p = piece([note(0, 1, 60, 64, track=0), note(0, 1, 60, 64, track=1)])
    assert len(encode_octuple(p).tokens) == 1


def test_tokens_sorted_canonically():
    p = piece([note(4, 1, 72, 64), note(0, 1, 60, 64), note(0, 1, 48, 64)])
    fields = [t.as_fields() for t in encode_octuple(p).tokens]
    assert fields == sorted(fields)


def test_track_and_note_order_do_not_matter():
    a = piece([note(0, 1, 60, 64, track=0), note(1, 1, 64, 64, track=1)])
    b = piece([note(1, 1, 64, 64, track=5), note(0, 1, 60, 64, track=2)])
    assert encode_octuple(a).tokens == encode_octuple(b).tokens


def test_tempo_rounded_half_up():
    p = piece([note(0, 1, 60, 64)], tempo=120.5)
    assert encode_octuple(p).tokens[0].tempo_bpm == 121
    p = piece([note(0, 1, 60, 64)], tempo=120.49)
    assert encode_octuple(p).tokens[0].tempo_bpm == 120


def test_serialization_exact_bytes():
    p = piece([note(0, 1, 60, 80), note(1, "1/2", 62, 70)])
    data = serialize_tokens(encode_octuple(p))
    assert data == b"0,0,0,60,4,80,120,4,4\n0,4,0,62,2,70,120,4,4"
    assert data.endswith(b"4")  # no trailing newline


def test_empty_sequence_serializes_empty():
    p = piece([])
    data = serialize_tokens(encode_octuple(p))
    assert data == b""
    assert token_hash(p) == "d41d8cd98f00b204e9800998ecf8427e"


def test_md5_dual_route(simple_piece):
    data = serialize_tokens(encode_octuple(simple_piece))
    assert hashlib.md5(data).hexdigest() == md5_oracle(data)
    assert token_hash(simple_piece) == md5_oracle(data)


def test_md5_oracle_rfc_vectors():
    # RFC 1321 appendix A.5 test suite
    vectors = {
        b"": "d41d8cd98f00b204e9800998ecf8427e",
        b"a": "0cc175b9c0f1b6a831c399e269772661",
        b"abc": "900150983cd24fb0d6963f7d28e17f72",
        b"message digest": "f96b697d7cb7938d525a2f31aaf161d0",
        b"abcdefghijklmnopqrstuvwxyz": "c3fcd3d76192e4007dfb496cca67e13b",
    }
    for msg, digest in vectors.items():
        assert md5_oracle(msg) == digest
        assert hashlib.md5(msg).hexdigest() == digest
