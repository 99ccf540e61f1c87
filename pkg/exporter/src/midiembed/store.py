"""Writer (and checking reader) for the embedding store interchange format.

A store is ``<prefix>.json`` plus ``<prefix>.bin``. The manifest carries
``version`` (1), ``dim``, ``count``, ``dtype`` (``"f32le"``),
``model_tag``, ``ids`` and the payload's ``sha256``; the payload is
``count * dim`` little-endian float32 values, row-major, rows in
manifest id order.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Sequence

import numpy as np

STORE_VERSION = 1
STORE_DTYPE = "f32le"


def store_paths(prefix: str | Path) -> tuple[Path, Path]:
    prefix = Path(prefix)
    if prefix.suffix == ".json":
        prefix = prefix.with_suffix("")
    return prefix.with_suffix(".json"), prefix.with_suffix(".bin")


def write_store(prefix: str | Path, ids: Sequence[str], vectors: np.ndarray,
                model_tag: str) -> tuple[Path, Path]:
    if vectors.ndim != 2:
        raise ValueError("vectors must be 2-dimensional")
    if len(ids) != vectors.shape[0]:
        raise ValueError("id count does not match vector rows")
    if vectors.shape[1] < 1:
        raise ValueError("dim must be positive")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids")
    json_path, bin_path = store_paths(prefix)
    payload = np.ascontiguousarray(vectors, dtype="<f4").tobytes()
    manifest = {
        "version": STORE_VERSION,
        "dim": int(vectors.shape[1]),
        "count": len(ids),
        "dtype": STORE_DTYPE,
        "model_tag": model_tag,
        "ids": list(ids),
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    bin_path.write_bytes(payload)
    with open(json_path, "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return json_path, bin_path


def read_store(prefix: str | Path) -> tuple[list[str], np.ndarray, str]:
    """Load and fully validate a store; used by the exporter's own tests
    and as a post-write self check."""
    json_path, bin_path = store_paths(prefix)
    with open(json_path) as fh:
        manifest = json.load(fh)
    if manifest.get("version") != STORE_VERSION:
        raise ValueError(f"unsupported store version {manifest.get('version')!r}")
    if manifest.get("dtype") != STORE_DTYPE:
        raise ValueError(f"unsupported store dtype {manifest.get('dtype')!r}")
    ids = list(manifest["ids"])
    count = int(manifest["count"])
    dim = int(manifest["dim"])
    if count != len(ids):
        raise ValueError(f"manifest count {count} does not match {len(ids)} ids")
    payload = bin_path.read_bytes()
    if len(payload) != count * dim * 4:
        raise ValueError(f"payload is {len(payload)} bytes, "
                         f"expected {count * dim * 4}")
    if manifest.get("sha256") != hashlib.sha256(payload).hexdigest():
        raise ValueError("payload checksum mismatch")
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()
    return ids, vectors, str(manifest.get("model_tag", ""))
