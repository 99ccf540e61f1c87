"""Embedding store ingestion and cosine-similarity edges.

A store is a pair of files sharing a prefix:

* ``<prefix>.json``: manifest with keys ``version`` (1), ``dim``,
  ``count``, ``dtype`` (always ``"f32le"``), ``model_tag``, ``ids``,
  and optionally ``sha256`` (hex digest of the binary payload).
* ``<prefix>.bin``: ``count * dim`` little-endian float32 values,
  row-major, one row per id in manifest order.

Loading validates the manifest against the payload size and, when the
checksum is present, against the payload bytes, so truncation or bit
corruption surfaces as a hard error instead of silently skewed scores.
Rows that are unusable for cosine scoring (zero, NaN or infinite) are
rejected at load time with the offending id named.

Scores are stored as ``(cosine + 1) / 2`` so every detector method
shares the [0, 1] range; the raw cosine rides along on each edge.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .detectors import (
    DEFAULT_EMIT_FLOOR,
    METHOD_EMBEDDING,
    SimilarityEdge,
    embedding_cosine,
    embedding_score,
)

STORE_VERSION = 1
STORE_DTYPE = "f32le"


class StoreFormatError(ValueError):
    """Raised when a store manifest and payload disagree."""


def _paths(prefix: str | Path) -> tuple[Path, Path]:
    prefix = Path(prefix)
    if prefix.suffix == ".json":
        prefix = prefix.with_suffix("")
    return prefix.with_suffix(".json"), prefix.with_suffix(".bin")


@dataclass(frozen=True)
class EmbeddingStore:
    ids: tuple[str, ...]
    vectors: np.ndarray  # (count, dim) float32
    model_tag: str

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be 2-dimensional")
        if len(self.ids) != self.vectors.shape[0]:
            raise ValueError("id count does not match vector rows")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate ids in store")
        if self.vectors.shape[1] < 1:
            raise ValueError("dim must be positive")
        bad = np.flatnonzero(~np.isfinite(self.vectors).all(axis=1))
        if bad.size:
            raise ValueError(
                f"non-finite embedding vector for {self.ids[int(bad[0])]!r}")
        zero = np.flatnonzero(~self.vectors.any(axis=1))
        if zero.size:
            raise ValueError(
                f"zero embedding vector for {self.ids[int(zero[0])]!r}")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def vector(self, pid: str) -> np.ndarray:
        idx = self.ids.index(pid)
        return self.vectors[idx]

    def save(self, prefix: str | Path) -> tuple[Path, Path]:
        json_path, bin_path = _paths(prefix)
        payload = np.ascontiguousarray(self.vectors, dtype="<f4").tobytes()
        manifest = {
            "version": STORE_VERSION,
            "dim": self.dim,
            "count": len(self.ids),
            "dtype": STORE_DTYPE,
            "model_tag": self.model_tag,
            "ids": list(self.ids),
            "sha256": hashlib.sha256(payload).hexdigest(),
        }
        bin_path.write_bytes(payload)
        with open(json_path, "w") as fh:
            json.dump(manifest, fh, indent=1)
            fh.write("\n")
        return json_path, bin_path

    @classmethod
    def load(cls, prefix: str | Path) -> "EmbeddingStore":
        json_path, bin_path = _paths(prefix)
        with open(json_path) as fh:
            manifest = json.load(fh)
        if manifest.get("version") != STORE_VERSION:
            raise StoreFormatError(
                f"unsupported store version {manifest.get('version')!r}")
        if manifest.get("dtype") != STORE_DTYPE:
            raise StoreFormatError(
                f"unsupported store dtype {manifest.get('dtype')!r}")
        ids = tuple(manifest["ids"])
        count = int(manifest["count"])
        dim = int(manifest["dim"])
        if count != len(ids):
            raise StoreFormatError(
                f"manifest count {count} does not match {len(ids)} ids")
        payload = bin_path.read_bytes()
        expected = count * dim * 4
        if len(payload) != expected:
            raise StoreFormatError(
                f"payload is {len(payload)} bytes, expected {expected}")
        digest = manifest.get("sha256")
        if digest is not None:
            actual = hashlib.sha256(payload).hexdigest()
            if actual != digest:
                raise StoreFormatError("payload checksum mismatch")
        vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
        try:
            return cls(ids=ids, vectors=vectors.copy(),
                       model_tag=str(manifest.get("model_tag", "")))
        except ValueError as exc:
            raise StoreFormatError(str(exc)) from None


def load_embeddings(path: str | Path) -> EmbeddingStore:
    """Load a store given its manifest path (or the shared prefix)."""
    return EmbeddingStore.load(path)


def pairwise_embedding_edges(
    store: EmbeddingStore,
    emit_floor: float = DEFAULT_EMIT_FLOOR,
    ids: Sequence[str] | None = None,
) -> list[SimilarityEdge]:
    """All-pairs cosine edges whose mapped score clears the floor.

    ``ids`` restricts scoring to a subset of the store (missing ids are
    an error). Output is sorted by (id_a, id_b).
    """
    if ids is None:
        keep = list(range(len(store.ids)))
    else:
        index = {pid: i for i, pid in enumerate(store.ids)}
        missing = [pid for pid in ids if pid not in index]
        if missing:
            raise KeyError(f"ids not in store: {missing[:5]}")
        keep = [index[pid] for pid in ids]
    sel_ids = [store.ids[i] for i in keep]
    vecs = store.vectors[keep].astype(np.float64)
    edges = []
    n = len(sel_ids)
    for i in range(n):
        for j in range(i + 1, n):
            cos = embedding_cosine(vecs[i], vecs[j])
            score = embedding_score(cos)
            if score >= emit_floor:
                a, b = sel_ids[i], sel_ids[j]
                if a > b:
                    a, b = b, a
                edges.append(SimilarityEdge(a, b, METHOD_EMBEDDING, score, cos))
    edges.sort(key=lambda e: (e.id_a, e.id_b))
    return edges
