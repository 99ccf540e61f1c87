"""Deterministic n-gram hashing models producing per-file embeddings.

Each note becomes a discrete token (pitch class, octave, melodic
interval, duration bucket, drum flag, program family). Every n-gram of
the token stream (n = 1..3) is hashed to a signed random projection
vector; the vector at a position is the sum of the n-grams ending
there. Pooling over positions gives the file embedding:

* ``mean_tokens``: plain average of the position vectors.
* ``cls``: harmonically weighted average (weight 1/(i+1) at position i),
  a front-loaded summary in the spirit of a classifier token.

Everything is integer-seeded and order-fixed, so the same bytes always
embed to the same vector on any platform.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .midi import MidiContent

POOLINGS = ("mean_tokens", "cls")

# model name -> (dim, salt); the salt keys the hash space so a new
# model version never collides with an old one
MODELS: dict[str, tuple[int, bytes]] = {
    "ngram-rp-v1": (64, b"ngram-rp-v1"),
}

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


class ModelError(ValueError):
    """Unknown model name or pooling mode."""


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _ngram_vector(seed: int, dim: int) -> np.ndarray:
    """Signed +-1 projection row derived from one n-gram hash."""
    lanes = np.uint64(seed) + _GOLDEN * np.arange(1, dim + 1, dtype=np.uint64)
    bits = _mix64(lanes) >> np.uint64(63)
    return bits.astype(np.float64) * 2.0 - 1.0


def _dur_bucket(duration: int, division: int) -> int:
    beats = duration / division
    for i, edge in enumerate((0.25, 0.5, 1.0, 2.0, 4.0)):
        if beats <= edge:
            return i
    return 5


def tokenize(content: MidiContent) -> list[tuple[int, ...]]:
    tokens = []
    prev_pitch = None
    for n in content.notes:
        if prev_pitch is None:
            interval = 0
        else:
            interval = max(-12, min(12, n.pitch - prev_pitch))
        prev_pitch = n.pitch
        family = 16 if n.is_drum else n.program // 8
        tokens.append((
            n.pitch % 12,
            min(n.pitch // 12, 10),
            interval + 12,
            _dur_bucket(n.duration, content.division),
            int(n.is_drum),
            family,
        ))
    return tokens


def _ngram_seed(salt: bytes, ngram: tuple) -> int:
    digest = hashlib.sha256(salt + b"|" + repr(ngram).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def embed_piece(content: MidiContent, model: str, pooling: str) -> np.ndarray:
    """Embedding row for one file; raises ModelError for unknown names
    and ValueError when the file has nothing to embed."""
    if model not in MODELS:
        raise ModelError(f"unknown model {model!r} "
                         f"(available: {', '.join(sorted(MODELS))})")
    if pooling not in POOLINGS:
        raise ModelError(f"unknown pooling {pooling!r} "
                         f"(available: {', '.join(POOLINGS)})")
    dim, salt = MODELS[model]
    tokens = tokenize(content)
    if not tokens:
        raise ValueError("no notes to embed")

    positions = np.zeros((len(tokens), dim), dtype=np.float64)
    for i in range(len(tokens)):
        for n in (1, 2, 3):
            if i - n + 1 < 0:
                continue
            gram = tuple(tokens[i - n + 1:i + 1])
            positions[i] += _ngram_vector(_ngram_seed(salt, gram), dim)

    if pooling == "mean_tokens":
        vec = positions.mean(axis=0)
    else:
        weights = 1.0 / np.arange(1, len(tokens) + 1, dtype=np.float64)
        vec = (positions * weights[:, None]).sum(axis=0) / weights.sum()
    out = vec.astype(np.float32)
    if not np.isfinite(out).all() or not out.any():
        raise ValueError("degenerate embedding vector")
    return out
