"""Augmentation kinds: spec validation, per-kind semantics with pinned
parameter ranges, stream independence, variant sets, segment splitting."""

from fractions import Fraction

import pytest

from helpers import StreamOracle, note, piece, sm64_derive

from mididedup.augment import (
    KIND_ORDER,
    AugmentationSpec,
    DegenerateVariantError,
    apply_augmentation,
    apply_with_provenance,
    eligible_kinds,
    make_variant_set,
    neighbor_segments,
)
from mididedup.detectors import token_hash

NOTE_DROP_IDX = KIND_ORDER.index("note_drop")
KIND_STREAM = 3
PICK_STREAM = 4


def spread_piece(n=12, id="a/x.mid"):
    """Distinct onsets so later sorts cannot reorder the notes."""
    return piece([note(i, "1/2", 40 + (i * 5) % 60, 50 + i, program=i % 8,
                       track=i % 3) for i in range(n)], id=id)


# --- spec validation ---------------------------------------------------------


def test_spec_rejects_unknown_and_duplicate_kinds():
    with pytest.raises(ValueError, match="unknown"):
        AugmentationSpec(enabled=("wobble",))
    with pytest.raises(ValueError, match="duplicate"):
        AugmentationSpec(enabled=("note_drop", "note_drop"))


def test_spec_range_bounds():
    AugmentationSpec(onset_shift=(-2, 2))
    AugmentationSpec(pitch_transpose=(6, 6))
    with pytest.raises(ValueError):
        AugmentationSpec(onset_shift=(2, -2))       # reversed
    with pytest.raises(ValueError):
        AugmentationSpec(onset_shift=(-3, 0))       # out of bounds
    with pytest.raises(ValueError):
        AugmentationSpec(duration_shift=(-5, 0))
    with pytest.raises(ValueError):
        AugmentationSpec(velocity_shift=(0, 4))
    with pytest.raises(ValueError):
        AugmentationSpec(pitch_transpose=(0, 7))


def test_spec_octave_choices():
    AugmentationSpec(octave_choices=(-12, 0, 12))
    with pytest.raises(ValueError):
        AugmentationSpec(octave_choices=(13,))
    with pytest.raises(ValueError):
        AugmentationSpec(octave_choices=())


def test_spec_rates_and_fraction():
    AugmentationSpec(note_drop_rate=0.5, bar_drop_rate=0.15,
                     inst_drop_fraction=0.5)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            AugmentationSpec(note_drop_rate=bad)
    for bad in (0.0, 0.6):
        with pytest.raises(ValueError):
            AugmentationSpec(inst_drop_fraction=bad)


# --- per-kind semantics -------------------------------------------------------


def only(kind, **kw):
    return AugmentationSpec(enabled=(kind,), rng_seed=7, **kw)


def test_all_disabled_is_identity(simple_piece):
    out, applied = apply_with_provenance(simple_piece, AugmentationSpec())
    assert out == simple_piece
    assert applied == []


def test_empty_piece_rejected():
    with pytest.raises(ValueError, match="empty"):
        apply_augmentation(piece([]), AugmentationSpec())


def test_pitch_transpose_pinned_plus_six():
    p = piece([note(0, 1, 60, 64), note(1, 1, 72, 64),
               note(2, 1, 38, 90, drum=True)])
    out, applied = apply_with_provenance(p, only("pitch_transpose",
                                                 pitch_transpose=(6, 6)))
    pitched = sorted(n.pitch for n in out.notes if not n.is_drum)
    assert pitched == [66, 78]
    assert [n.pitch for n in out.notes if n.is_drum] == [38]
    assert applied == [{"kind": "pitch_transpose", "params": {"amount": 6}}]


def test_pitch_transpose_clamps():
    p = piece([note(0, 1, 125, 64)])
    out = apply_augmentation(p, only("pitch_transpose", pitch_transpose=(6, 6)))
    assert out.notes[0].pitch == 127


def test_pitch_transpose_skips_drum_only(drum_only_piece):
    out, applied = apply_with_provenance(drum_only_piece,
                                         only("pitch_transpose"))
    assert applied == []
    assert out == drum_only_piece


def test_onset_shift_pinned():
    p = piece([note(0, 1, 60, 64), note(2, 1, 62, 64)])
    out = apply_augmentation(p, only("onset_shift", onset_shift=(-2, -2)))
    assert [n.onset for n in out.notes] == [0, Fraction(3, 2)]  # floor at 0
    out = apply_augmentation(p, only("onset_shift", onset_shift=(2, 2)))
    assert [n.onset for n in out.notes] == [Fraction(1, 2), Fraction(5, 2)]


def test_duration_shift_pinned():
    p = piece([note(0, "1/4", 60, 64), note(1, 2, 62, 64)])
    out = apply_augmentation(p, only("duration_shift", duration_shift=(-4, -4)))
    assert [n.duration for n in out.notes] == [Fraction(1, 4), 1]  # floor 1/16th
    out = apply_augmentation(p, only("duration_shift", duration_shift=(4, 4)))
    assert [n.duration for n in out.notes] == [Fraction(5, 4), 3]


def test_velocity_shift_pinned_and_clamped():
    p = piece([note(0, 1, 60, 2), note(1, 1, 62, 126)])
    out = apply_augmentation(p, only("velocity_shift", velocity_shift=(-3, -3)))
    assert [n.velocity for n in out.notes] == [1, 123]
    out = apply_augmentation(p, only("velocity_shift", velocity_shift=(3, 3)))
    assert [n.velocity for n in out.notes] == [5, 127]


def test_octave_shift_per_track_and_drum_exempt():
    p = piece([note(0, 1, 60, 64, track=0), note(1, 1, 62, 64, track=0),
               note(2, 1, 120, 64, track=1),
               note(3, 1, 38, 90, drum=True, track=2)])
    out, applied = apply_with_provenance(p, only("octave_shift",
                                                 octave_choices=(12,)))
    assert [n.pitch for n in out.notes] == [72, 74, 127, 38]  # 120+12 clamps
    by_track = applied[0]["params"]["by_track"]
    assert by_track == {"0": 12, "1": 12}  # drums not listed


def test_inst_order_permutes_tracks_and_preserves_hash():
    p = spread_piece()
    out, applied = apply_with_provenance(p, only("inst_order"))
    assert sorted(applied[0]["params"]["order"]) == [0, 1, 2]
    assert token_hash(out) == token_hash(p)
    assert sorted((n.onset, n.pitch) for n in out.notes) == \
        sorted((n.onset, n.pitch) for n in p.notes)


def test_inst_order_needs_two_tracks():
    p = piece([note(0, 1, 60, 64)])
    _, applied = apply_with_provenance(p, only("inst_order"))
    assert applied == []


def test_inst_mapping_changes_programs_not_drums():
    p = piece([note(0, 1, 60, 64, program=10, track=0),
               note(1, 1, 38, 90, program=0, drum=True, track=1)])
    out, applied = apply_with_provenance(p, only("inst_mapping"))
    progs = applied[0]["params"]["programs"]
    assert list(progs) == ["0"]
    pitched = [n for n in out.notes if not n.is_drum]
    assert pitched[0].program == progs["0"]
    drum = [n for n in out.notes if n.is_drum][0]
    assert drum.program == 0


def test_inst_drop_keeps_majority():
    p = piece([note(i, 1, 60 + t, 64, track=t)
               for i in range(5) for t in range(5)])
    out, applied = apply_with_provenance(p, only("inst_drop"))
    dropped = applied[0]["params"]["dropped"]
    assert 1 <= len(dropped) <= 2  # strictly under half of 5
    remaining = {n.track_index for n in out.notes}
    assert remaining == set(range(5)) - set(dropped)


def test_inst_drop_ineligible_on_two_tracks():
    p = piece([note(0, 1, 60, 64, track=0), note(1, 1, 62, 64, track=1)])
    _, applied = apply_with_provenance(p, only("inst_drop"))
    assert applied == []


def test_bar_drop_matches_stream_oracle():
    p = spread_piece(n=12)  # onsets 0..11 -> bars 0,1,2
    seed = 7
    out, applied = apply_with_provenance(p, only("bar_drop"))
    ora = StreamOracle(sm64_derive(seed, KIND_ORDER.index("bar_drop")),
                       KIND_STREAM)
    want_dropped = [b for b in (0, 1, 2) if ora.u01() < 0.15]
    assert applied[0]["params"]["dropped_bars"] == want_dropped
    kept_bars = {int(n.onset) // 4 for n in out.notes}
    assert kept_bars == set((0, 1, 2)) - set(want_dropped)


def test_bar_shift_pinned():
    p = piece([note(0, 1, 60, 64), note(5, 1, 62, 64)])
    out, applied = apply_with_provenance(p, only("bar_shift", bar_shift=(2, 2)))
    assert applied[0]["params"] == {"bars": 2}
    assert [n.onset for n in out.notes] == [8, 13]
    q = piece([note(0, 1, 60, 64)], timesig=(3, 4))
    out, _ = apply_with_provenance(q, only("bar_shift", bar_shift=(1, 1)))
    assert out.notes[0].onset == 3


def test_note_drop_matches_stream_oracle():
    p = spread_piece(n=30)
    for seed in (0, 1, 99):
        spec = AugmentationSpec(enabled=("note_drop",), rng_seed=seed)
        out = apply_augmentation(p, spec)
        ora = StreamOracle(sm64_derive(seed, NOTE_DROP_IDX), KIND_STREAM)
        want = [n for n in p.notes if ora.u01() >= spec.note_drop_rate]
        assert list(out.notes) == sorted(
            want, key=lambda n: (n.onset, n.track_index, n.pitch))


def test_kind_streams_are_independent():
    # enabling an extra earlier kind must not change note_drop's draws
    p = spread_piece(n=30)
    alone = apply_augmentation(
        p, AugmentationSpec(enabled=("note_drop",), rng_seed=5))
    both = apply_augmentation(
        p, AugmentationSpec(enabled=("velocity_shift", "note_drop"),
                            rng_seed=5))
    assert [n.onset for n in alone.notes] == [n.onset for n in both.notes]


def test_determinism(simple_piece):
    spec = AugmentationSpec(enabled=("onset_shift", "velocity_shift"),
                            rng_seed=11)
    a = apply_augmentation(simple_piece, spec)
    b = apply_augmentation(simple_piece, spec)
    assert a == b


def test_degenerate_variant_raises():
    p = piece([note(0, 1, 60, 64)])
    rate = 0.9999
    seed = next(s for s in range(100)
                if StreamOracle(sm64_derive(s, NOTE_DROP_IDX),
                                KIND_STREAM).u01() < rate)
    spec = AugmentationSpec(enabled=("note_drop",), rng_seed=seed,
                            note_drop_rate=rate)
    with pytest.raises(DegenerateVariantError, match="degenerate variant"):
        apply_augmentation(p, spec)


# --- variant sets -------------------------------------------------------------


def test_make_variant_set_shape_and_determinism():
    p = spread_piece(n=20)
    variants = make_variant_set(p, 5, seed=123)
    assert len(variants) == 5
    seeds = [prov["rng_seed"] for _, prov in variants]
    assert len(set(seeds)) == 5
    again = make_variant_set(p, 5, seed=123)
    assert [(v.notes, prov) for v, prov in variants] == \
        [(v.notes, prov) for v, prov in again]
    assert all(v.notes for v, _ in variants)


def test_make_variant_set_provenance_matches_pick_stream():
    p = spread_piece(n=20)
    for v, prov in make_variant_set(p, 8, seed=9):
        pick = StreamOracle(prov["rng_seed"], PICK_STREAM)
        enabled = [k for k in KIND_ORDER if pick.u01() < 0.5]
        applied_kinds = [rec["kind"] for rec in prov["applied"]]
        assert set(applied_kinds) <= set(enabled)
        assert applied_kinds == [k for k in KIND_ORDER if k in applied_kinds]
        for rec in prov["applied"]:
            assert isinstance(rec["params"], dict)


def test_make_variant_set_zero_and_negative():
    p = spread_piece()
    assert make_variant_set(p, 0) == []
    with pytest.raises(ValueError):
        make_variant_set(p, -1)


# --- neighbor segments ----------------------------------------------------------


def long_piece(n_tokens):
    return piece([note(Fraction(i, 4), "1/4", 30 + i % 80, 64)
                  for i in range(n_tokens)], id="a/long.mid")


def test_neighbor_segments_split():
    p = long_piece(2500)  # 3 chunks of 1024/1024/452
    s1, s2 = neighbor_segments(p, seed=4)
    assert s1.id.startswith("a/long.mid#seg")
    assert s2.id.startswith("a/long.mid#seg")
    assert s1.id != s2.id
    c1 = int(s1.id.rsplit("seg", 1)[1])
    c2 = int(s2.id.rsplit("seg", 1)[1])
    assert c1 != c2 and {c1, c2} <= {0, 1, 2}
    for seg, chunk in ((s1, c1), (s2, c2)):
        idxs = sorted(int(n.onset * 4) for n in seg.notes)
        assert idxs[0] >= chunk * 1024
        assert idxs[-1] < (chunk + 1) * 1024
        assert len(idxs) == min(2500, (chunk + 1) * 1024) - chunk * 1024


def test_neighbor_segments_deterministic():
    p = long_piece(2200)
    a = neighbor_segments(p, seed=1)
    b = neighbor_segments(p, seed=1)
    assert a[0].notes == b[0].notes and a[1].id == b[1].id


def test_neighbor_segments_insufficient_length():
    with pytest.raises(ValueError, match="insufficient length"):
        neighbor_segments(long_piece(1024))
    with pytest.raises(ValueError, match="1 chunk"):
        neighbor_segments(long_piece(100))


# --- eligibility ---------------------------------------------------------------


def test_eligible_kinds_rules(simple_piece, drum_only_piece):
    single = piece([note(0, 1, 60, 64)])
    got = eligible_kinds(single)
    assert "inst_order" not in got and "inst_drop" not in got
    assert "pitch_transpose" in got

    got = eligible_kinds(drum_only_piece)
    for kind in ("octave_shift", "inst_mapping", "pitch_transpose"):
        assert kind not in got
    assert "note_drop" in got

    five = piece([note(i, 1, 60, 64, track=t)
                  for i in range(3) for t in range(5)])
    assert eligible_kinds(five) == KIND_ORDER
