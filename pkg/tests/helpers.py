"""Shared builders and independent oracle implementations.

The oracles here are written from scratch against the documented
contracts (module docstrings, README) without calling into the package,
so every frozen value is checked through two unrelated routes.
"""

from __future__ import annotations

import math
import struct
from fractions import Fraction

from mididedup.model import NoteEvent, Piece

# --- piece builders ----------------------------------------------------


def note(onset, duration=1, pitch=60, velocity=64, program=0, drum=False,
         track=0) -> NoteEvent:
    return NoteEvent(onset=Fraction(onset), duration=Fraction(duration),
                     pitch=pitch, velocity=velocity, program=program,
                     is_drum=drum, track_index=track)


def piece(notes, id="artist/x.mid", tempo=120.0, timesig=(4, 4),
          tpq=480) -> Piece:
    return Piece(id=id, notes=tuple(notes),
                 tempo_map=((Fraction(0), float(tempo)),),
                 time_signatures=((Fraction(0), timesig[0], timesig[1]),),
                 ticks_per_quarter=tpq)


# --- MD5 oracle (straight off RFC 1321) ---------------------------------

_MD5_S = (7, 12, 17, 22) * 4 + (5, 9, 14, 20) * 4 \
    + (4, 11, 16, 23) * 4 + (6, 10, 15, 21) * 4
_MD5_K = tuple(int(abs(math.sin(i + 1)) * 2**32) & 0xFFFFFFFF
               for i in range(64))


def md5_oracle(data: bytes) -> str:
    """Reference MD5, independent of hashlib."""
    a0, b0, c0, d0 = 0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476
    msg = bytearray(data)
    msg.append(0x80)
    while len(msg) % 64 != 56:
        msg.append(0)
    msg += ((8 * len(data)) & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")

    def rotl(x, c):
        return ((x << c) | (x >> (32 - c))) & 0xFFFFFFFF

    for off in range(0, len(msg), 64):
        m = struct.unpack("<16I", bytes(msg[off:off + 64]))
        a, b, c, d = a0, b0, c0, d0
        for i in range(64):
            if i < 16:
                f, g = (b & c) | (~b & d), i
            elif i < 32:
                f, g = (d & b) | (~d & c), (5 * i + 1) % 16
            elif i < 48:
                f, g = b ^ c ^ d, (3 * i + 5) % 16
            else:
                f, g = c ^ (b | ~d), (7 * i) % 16
            f = (f + a + _MD5_K[i] + m[g]) & 0xFFFFFFFF
            a, d, c, b = d, c, b, (b + rotl(f, _MD5_S[i])) & 0xFFFFFFFF
        a0, b0 = (a0 + a) & 0xFFFFFFFF, (b0 + b) & 0xFFFFFFFF
        c0, d0 = (c0 + c) & 0xFFFFFFFF, (d0 + d) & 0xFFFFFFFF
    return b"".join(x.to_bytes(4, "little") for x in (a0, b0, c0, d0)).hex()


# --- SplitMix64 counter-stream oracle ------------------------------------
# Reimplements the documented RNG contract so rng.py is cross-checked and
# stream consumers (note_drop etc.) can be replayed without the package.

_MASK = (1 << 64) - 1
_GOLD = 0x9E3779B97F4A7C15


def sm64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def sm64_derive(seed: int, *indices: int) -> int:
    z = seed & _MASK
    for ix in indices:
        z = sm64((z + _GOLD * ((ix & _MASK) + 1)) & _MASK)
    return z


class StreamOracle:
    """Draw-by-draw replay of a (seed, stream_id) counter stream."""

    def __init__(self, seed: int, stream_id: int):
        self.key = sm64((seed + _GOLD * ((stream_id & _MASK) + 1)) & _MASK)
        self.i = 0

    def next_u64(self) -> int:
        v = sm64((self.key + _GOLD * (self.i + 1)) & _MASK)
        self.i += 1
        return v

    def u01(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.next_u64() % (hi - lo + 1)


# --- DTW enumeration oracle ----------------------------------------------


def cosine_cost_oracle(a_row, b_row) -> float:
    """Per-cell cost recomputed with scalar math, conventions included."""
    dot = sum(float(x) * float(y) for x, y in zip(a_row, b_row))
    na2 = sum(float(x) * float(x) for x in a_row)
    nb2 = sum(float(y) * float(y) for y in b_row)
    if na2 == 0.0 and nb2 == 0.0:
        return 0.0
    if na2 == 0.0 or nb2 == 0.0:
        return 1.0
    return 1.0 - dot / math.sqrt(na2 * nb2)


def dtw_enumerate(a, b) -> float:
    """Min over all monotone warping paths of mean per-cell cost.

    Explicit-stack DFS over path prefixes; accumulation order along a
    path matches a left-to-right float sum, the same order the layered
    DP uses, so results are comparable without tolerance.
    """
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return 1.0
    cost = [[cosine_cost_oracle(a[i], b[j]) for j in range(m)]
            for i in range(n)]
    best = math.inf
    stack = [(0, 0, cost[0][0], 1)]
    while stack:
        i, j, acc, length = stack.pop()
        if i == n - 1 and j == m - 1:
            mean = acc / length
            if mean < best:
                best = mean
            continue
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            ni, nj = i + di, j + dj
            if ni < n and nj < m:
                stack.append((ni, nj, acc + cost[ni][nj], length + 1))
    return best


# --- clustering / classification oracles ----------------------------------


def components_oracle(nodes, pairs):
    """Transitive closure by repeated merging; returns sorted partitions."""
    parts = [{v} for v in nodes]
    for a, b in pairs:
        hit = [p for p in parts if a in p or b in p]
        merged = set().union(*hit) if hit else set()
        merged.update((a, b))
        parts = [p for p in parts if p not in hit]
        parts.append(merged)
    out = [sorted(p) for p in parts if len(p) > 1]
    return sorted(out, key=lambda c: c[0])


def classification_oracle(predicted, groups):
    """Brute-force pair metrics for a partition given as id lists."""
    truth = set()
    for members in groups:
        ms = sorted(members)
        for i in range(len(ms)):
            for j in range(i + 1, len(ms)):
                truth.add((ms[i], ms[j]))
    predicted = {tuple(sorted(p)) for p in predicted}
    tp = len(predicted & truth)
    fp = len(predicted - truth)
    fn = len(truth - predicted)
    precision = tp / (tp + fp) if predicted else 0.0
    recall = tp / len(truth) if truth else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    dup_files = {f for members in groups if len(members) >= 2
                 for f in members}
    covered = {f for pair in (predicted & truth) for f in pair}
    missed = sorted(dup_files - covered)
    return {"tp": tp, "fp": fp, "fn_pairs": fn, "precision": precision,
            "recall": recall, "f1": f1, "fn_count": len(missed),
            "missed": missed}


def ndcg_oracle(ranked, relevant) -> float:
    relevant = set(relevant)
    dcg = sum(1.0 / math.log2(r + 2) for r, pid in enumerate(ranked)
              if pid in relevant)
    ideal = sum(1.0 / math.log2(r + 2) for r in range(len(relevant)))
    return dcg / ideal
