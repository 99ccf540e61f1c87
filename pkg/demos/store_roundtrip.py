"""Embedding store round trip: write vectors, reload, emit similarity edges.

The store is the only contract between this toolkit and whatever model
produced the vectors (see exporter/ for one producer). This demo writes
a tiny store by hand and runs the embedding detector over it.

Run with: python3 demos/store_roundtrip.py
"""

import tempfile
from pathlib import Path

import numpy as np

from mididedup.embeddings import EmbeddingStore, load_embeddings, pairwise_embedding_edges


def main() -> None:
    work = Path(tempfile.mkdtemp(prefix="store_demo_"))
    prefix = work / "vectors"

    rng = np.random.default_rng(5)
    ids = ("band/song.2.mid", "band/song.mid", "other/tune.mid")
    base = rng.normal(size=8).astype(np.float32)
    vectors = np.stack([
        base + rng.normal(scale=0.01, size=8).astype(np.float32),  # near copy
        base,
        rng.normal(size=8).astype(np.float32),                     # unrelated
    ])

    store = EmbeddingStore(ids=ids, vectors=vectors, model_tag="demo:v0")
    manifest, payload = store.save(prefix)
    print(f"wrote {manifest} ({payload.stat().st_size} payload bytes)")

    loaded = load_embeddings(prefix)
    print(f"loaded {len(loaded.ids)} vectors, dim {loaded.vectors.shape[1]}, tag {loaded.model_tag}")

    print()
    print("edges at emit floor 0.5 (score = (cosine + 1) / 2):")
    for edge in pairwise_embedding_edges(loaded, emit_floor=0.5):
        print(f"  {edge.id_a} <-> {edge.id_b}  score={edge.score:.4f}  cosine={edge.raw:.4f}")

    # corrupting a single payload byte makes load_embeddings refuse the store


if __name__ == "__main__":
    main()
