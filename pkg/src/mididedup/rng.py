"""Deterministic counter-based random stream.

Every stochastic component in this package (augmentation, variant
synthesis, the procedural piece generator) draws from this stream instead
of ``random``/numpy so that fixtures are reproducible bit-for-bit across
platforms and reimplementable in other languages.  The contract, in full:

* ``mix64`` is the SplitMix64 finalizer over 64-bit unsigned integers::

      z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
      z ^= z >> 27;  z *= 0x94D049BB133111EB
      z ^= z >> 31

* A stream is keyed by ``key = mix64(seed + GOLDEN * (stream_id + 1))``
  where ``GOLDEN = 0x9E3779B97F4A7C15`` and all arithmetic is mod 2**64.
* Draw ``i`` (0-based) of a stream is ``mix64(key + GOLDEN * (i + 1))``.
* ``u01`` maps a draw to ``(v >> 11) * 2**-53`` in [0, 1).
* ``randint(lo, hi)`` is ``lo + v % (hi - lo + 1)`` (inclusive bounds; the
  modulo bias is accepted as part of the contract).
* ``shuffle`` is a Fisher-Yates pass from the last index down to 1,
  swapping ``seq[i]`` with ``seq[randint(0, i)]``.

Consumers document their stream ids and draw order next to their use.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *indices: int) -> int:
    """Fold indices into a new 64-bit seed, one mix per level."""
    z = seed & MASK64
    for ix in indices:
        z = mix64((z + GOLDEN * ((ix & MASK64) + 1)) & MASK64)
    return z


class CounterRng:
    """Stateful view over the counter stream ``(seed, stream_id)``.

    The object only tracks how many draws have been consumed; draw ``i``
    is a pure function of (seed, stream_id, i).
    """

    def __init__(self, seed: int, stream_id: int):
        self.key = mix64((seed + GOLDEN * ((stream_id & MASK64) + 1)) & MASK64)
        self.counter = 0

    def next_u64(self) -> int:
        v = mix64((self.key + GOLDEN * (self.counter + 1)) & MASK64)
        self.counter += 1
        return v

    def u01(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def randint(self, lo: int, hi: int) -> int:
        """Uniform-ish integer in [lo, hi], inclusive."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        return lo + self.next_u64() % (hi - lo + 1)

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]

    def shuffle(self, seq: list) -> None:
        """In-place Fisher-Yates, descending."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.randint(0, i)
            seq[i], seq[j] = seq[j], seq[i]
