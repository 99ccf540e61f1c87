"""Duplicate detectors: token-hash identity, beat-position entropy, chroma DTW.

Rule-based similarity signals over parsed pieces:

* ``hash``: MD5 over the serialized Octuple token set. Two pieces match
  only when their canonical token serializations are byte-identical.
* ``entropy``: Shannon entropy (base 2) of the 16-slot beat-position
  histogram. Pieces whose entropies agree within ``ENTROPY_MATCH_TOL``
  are flagged as candidate duplicates.
* ``chroma_dtw``: 1 minus the mean-per-cell DTW distance between binary
  chromagrams, after transposition alignment. Pairs to score are chosen
  by a KL-divergence prefilter over smoothed pitch histograms.
* ``embedding``: cosine over vectors from an external store, remapped to
  [0,1] via (c+1)/2 for storage; the raw cosine rides along in ``raw``.

``run_detector`` runs one method over a corpus and returns edges sorted
by (id_a, id_b) so output is stable across runs and thread counts.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dtw import dtw_distance
from .encoding import POSITION_SLOTS, BarGrid, TokenSequence, encode_octuple, serialize_tokens
from .model import Piece

METHOD_HASH = "hash"
METHOD_ENTROPY = "entropy"
METHOD_CHROMA = "chroma_dtw"
METHOD_EMBEDDING = "embedding"
METHODS = frozenset({METHOD_HASH, METHOD_ENTROPY, METHOD_CHROMA, METHOD_EMBEDDING})

RULE_METHODS = (METHOD_HASH, METHOD_ENTROPY, METHOD_CHROMA)

PREFILTER_K = 250
ENTROPY_MATCH_TOL = 1e-9
PITCH_SMOOTHING = 1e-6
DEFAULT_EMIT_FLOOR = 0.5

EDGE_COLUMNS = ("id_a", "id_b", "method", "score", "raw")


@dataclass(frozen=True)
class HashSignature:
    """MD5 digest of a piece's canonical token serialization."""

    digest: str
    id: str = ""


@dataclass(frozen=True)
class PositionHistogram:
    """Counts of note onsets per sixteenth-note slot within the bar."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.counts) != POSITION_SLOTS:
            raise ValueError(f"expected {POSITION_SLOTS} slots")
        if any(c < 0 for c in self.counts):
            raise ValueError("negative counts")

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def is_empty(self) -> bool:
        # empty pieces carry no rhythm signal; excluded from entropy matching
        return self.total == 0


@dataclass(frozen=True, eq=False)
class PitchHistogram:
    """Smoothed pitch distribution over the 128 MIDI pitches, drums excluded.

    ``probs`` always sums to 1 and has no zero bins (epsilon smoothing), so
    KL divergences between any two histograms are finite.
    """

    probs: np.ndarray
    raw_counts: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.probs.shape != (128,) or self.raw_counts.shape != (128,):
            raise ValueError("pitch histogram must have 128 bins")
        if abs(float(self.probs.sum()) - 1.0) > 1e-9:
            raise ValueError("probs must sum to 1")
        if np.any(self.probs <= 0):
            raise ValueError("probs must be strictly positive after smoothing")


@dataclass(frozen=True)
class PieceFeatures:
    """Per-piece summary used by the cheap detectors and the prefilter."""

    id: str
    md5_hex: str
    entropy_bits: float
    note_count: int
    pitch_counts: tuple[int, ...]  # 128 bins, drums excluded

    def __post_init__(self) -> None:
        if len(self.pitch_counts) != 128:
            raise ValueError("pitch_counts must have 128 bins")


@dataclass(frozen=True)
class SimilarityEdge:
    """Undirected candidate-duplicate edge. id_a is always the lesser id."""

    id_a: str
    id_b: str
    method: str
    score: float
    raw: float | None = None

    def __post_init__(self) -> None:
        if self.id_a >= self.id_b:
            raise ValueError(f"edge ids out of order: {self.id_a!r} >= {self.id_b!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score out of range: {self.score}")


def make_edge(x: str, y: str, method: str, score: float,
              raw: float | None = None) -> SimilarityEdge:
    if x == y:
        raise ValueError(f"self edge for {x!r}")
    a, b = (x, y) if x < y else (y, x)
    return SimilarityEdge(a, b, method, score, raw)


# ---------------------------------------------------------------------------
# hash


def hash_signature(seq: TokenSequence) -> HashSignature:
    """MD5 of the canonical serialization. An empty sequence serializes to
    b"" and hashes to d41d8cd98f00b204e9800998ecf8427e."""
    return HashSignature(digest=hashlib.md5(serialize_tokens(seq)).hexdigest(),
                         id=seq.source_id)


def token_hash(piece: Piece) -> str:
    """Hex digest shortcut: encode, serialize, hash in one go."""
    return hash_signature(encode_octuple(piece)).digest


def hash_similarity(a: HashSignature | str, b: HashSignature | str) -> float:
    da = a.digest if isinstance(a, HashSignature) else a
    db = b.digest if isinstance(b, HashSignature) else b
    return 1.0 if da == db else 0.0


# ---------------------------------------------------------------------------
# beat-position entropy


def beat_position_histogram(piece: Piece) -> PositionHistogram:
    """All notes count, drum tracks included; the slot is the quantized
    bar-relative position folded into 16."""
    grid = BarGrid(piece.time_signatures)
    counts = [0] * POSITION_SLOTS
    for note in piece.notes:
        _, slot = grid.position_slot(note.onset)
        counts[slot] += 1
    return PositionHistogram(tuple(counts))


def beat_position_entropy(h: PositionHistogram | Sequence[int] | np.ndarray) -> float:
    """Shannon entropy in bits of the slot distribution; 0*log0 = 0.

    An all-zero histogram scores 0.0; callers treat such pieces as empty
    and keep them out of entropy matching.
    """
    counts = np.asarray(h.counts if isinstance(h, PositionHistogram) else h,
                        dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p)))


def entropy_similarity(e_a: float, e_b: float) -> float:
    return max(0.0, 1.0 - abs(e_a - e_b))


# ---------------------------------------------------------------------------
# pitch histogram + KL prefilter


def smoothed_pitch_probs(counts: Sequence[int] | np.ndarray,
                         epsilon: float = PITCH_SMOOTHING) -> np.ndarray:
    """Additive-epsilon smoothing, renormalized. Never has zero bins."""
    counts = np.asarray(counts, dtype=np.float64)
    return (counts + epsilon) / (counts.sum() + counts.size * epsilon)


def pitch_histogram(piece: Piece) -> PitchHistogram:
    """128-bin pitch distribution with epsilon smoothing; drums excluded."""
    raw = np.zeros(128, dtype=np.int64)
    for note in piece.notes:
        if not note.is_drum:
            raw[note.pitch] += 1
    return PitchHistogram(probs=smoothed_pitch_probs(raw), raw_counts=raw)


def _probs_of(h: PitchHistogram | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(h, PitchHistogram):
        return h.probs
    return np.asarray(h, dtype=np.float64)


def kl_divergence(p, q) -> float:
    """KL(p || q) in nats, p and q as PitchHistograms or prob arrays.

    Zero p-bins contribute nothing; a zero q-bin under positive p mass
    makes the divergence infinite (cannot happen for smoothed inputs).
    """
    p = _probs_of(p)
    q = _probs_of(q)
    if p.shape != q.shape:
        raise ValueError("distribution shapes differ")
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    pm = p[mask]
    return float(np.sum(pm * (np.log(pm) - np.log(q[mask]))))


def prefilter_topk(query: str, corpus: Mapping[str, PitchHistogram],
                   k: int = PREFILTER_K) -> list[str]:
    """The k candidate ids nearest the query by KL(query || candidate).

    Ties break lexicographically by id; the query itself is excluded.
    With fewer than k other pieces, all of them come back.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if query not in corpus:
        raise KeyError(query)
    ids = sorted(corpus)
    probs = np.stack([_probs_of(corpus[i]) for i in ids])
    return _prefilter_topk_ids(query, ids, probs, k)


def _prefilter_topk_ids(query: str, ids: Sequence[str], probs: np.ndarray,
                        k: int) -> list[str]:
    # vectorized KL row: H(p) term is constant, cross term is a matvec
    qi = list(ids).index(query)
    p = probs[qi]
    hp = float(np.sum(p * np.log(p)))
    kl = hp - np.log(probs) @ p
    order = sorted(range(len(ids)), key=lambda i: (kl[i], ids[i]))
    out = [ids[i] for i in order if i != qi]
    return out[:k]


# ---------------------------------------------------------------------------
# chromagram


def chromagram(piece: Piece) -> np.ndarray:
    """Binary (frames x 12) pitch-class activation at sixteenth resolution.

    Frame f spans beats [f/4, (f+1)/4). A note lights every frame whose
    start lies inside [onset, end). Drum notes are excluded and trailing
    all-zero frames are trimmed, so an unpitched piece yields shape (0, 12).
    """
    spans = []
    last = 0
    for note in piece.notes:
        if note.is_drum:
            continue
        start = math.ceil(4 * note.onset)
        stop = math.ceil(4 * note.end)  # exclusive
        if stop <= start:
            continue
        spans.append((start, stop, note.pitch % 12))
        last = max(last, stop)
    out = np.zeros((last, 12), dtype=np.float64)
    for start, stop, pc in spans:
        out[start:stop, pc] = 1.0
    lit = np.flatnonzero(out.any(axis=1))
    if lit.size == 0:
        return out[:0]
    return out[: int(lit[-1]) + 1]


def align_transpose(ref: np.ndarray, other: np.ndarray) -> np.ndarray:
    """Rotate ``other``'s pitch-class axis so its modal class matches ref's.

    The rotation is (argmax ref - argmax other) mod 12 over column sums;
    argmax resolves ties toward the lowest pitch class.
    """
    ref_tot = np.asarray(ref, dtype=np.float64).sum(axis=0) if len(ref) else np.zeros(12)
    oth_tot = np.asarray(other, dtype=np.float64).sum(axis=0) if len(other) else np.zeros(12)
    k = (int(np.argmax(ref_tot)) - int(np.argmax(oth_tot))) % 12
    return np.roll(other, k, axis=1)


def chroma_similarity(a: Piece, b: Piece) -> float:
    """1 - DTW distance between chromagrams, with b transposed onto a."""
    ca = chromagram(a)
    return 1.0 - dtw_distance(ca, align_transpose(ca, chromagram(b)))


def _chroma_similarity_pre(ca: np.ndarray, cb: np.ndarray) -> float:
    # same as chroma_similarity but over precomputed chromagrams
    return 1.0 - dtw_distance(ca, align_transpose(ca, cb))


# ---------------------------------------------------------------------------
# embedding cosine


def embedding_cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]. Zero vectors are rejected."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("vectors must share one dimension")
    nu = float(np.dot(u, u))
    nv = float(np.dot(v, v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero vector")
    c = float(np.dot(u, v)) / math.sqrt(nu * nv)
    return min(1.0, max(-1.0, c))


def embedding_score(cosine: float) -> float:
    """Map cosine in [-1,1] to the stored edge score in [0,1]."""
    return (cosine + 1.0) / 2.0


# ---------------------------------------------------------------------------
# orchestration


def compute_features(piece: Piece) -> PieceFeatures:
    ph = pitch_histogram(piece)
    return PieceFeatures(
        id=piece.id,
        md5_hex=token_hash(piece),
        entropy_bits=beat_position_entropy(beat_position_histogram(piece)),
        note_count=len(piece.notes),
        pitch_counts=tuple(int(c) for c in ph.raw_counts),
    )


def _hash_edges(features: Mapping[str, PieceFeatures]) -> list[SimilarityEdge]:
    by_digest: dict[str, list[str]] = {}
    for pid in sorted(features):
        by_digest.setdefault(features[pid].md5_hex, []).append(pid)
    edges = []
    for group in by_digest.values():
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                edges.append(make_edge(group[i], group[j], METHOD_HASH, 1.0))
    return edges


def _entropy_edges(features: Mapping[str, PieceFeatures]) -> list[SimilarityEdge]:
    # empty pieces carry no rhythm signal, so they never entropy-match
    scored = sorted(
        ((f.entropy_bits, f.id) for f in features.values() if f.note_count > 0)
    )
    edges = []
    for i, (e_i, id_i) in enumerate(scored):
        for e_j, id_j in scored[i + 1:]:
            if e_j - e_i > ENTROPY_MATCH_TOL:
                break
            edges.append(make_edge(id_i, id_j, METHOD_ENTROPY, 1.0))
    return edges


def _chroma_pairs(features: Mapping[str, PieceFeatures],
                  prefilter_k: int) -> list[tuple[str, str]]:
    ids = sorted(features)
    if len(ids) < 2:
        return []
    probs = np.stack([
        smoothed_pitch_probs(np.asarray(features[i].pitch_counts)) for i in ids
    ])
    pairs: set[tuple[str, str]] = set()
    for qid in ids:
        for cid in _prefilter_topk_ids(qid, ids, probs, prefilter_k):
            pairs.add((qid, cid) if qid < cid else (cid, qid))
    return sorted(pairs)


def _chroma_edges(pieces: Mapping[str, Piece],
                  features: Mapping[str, PieceFeatures],
                  chromas: Mapping[str, np.ndarray] | None,
                  prefilter_k: int, emit_floor: float,
                  threads: int) -> list[SimilarityEdge]:
    pairs = _chroma_pairs(features, prefilter_k)
    if not pairs:
        return []
    if chromas is None:
        chromas = {pid: chromagram(pieces[pid]) for pid in pieces}

    def score(pair: tuple[str, str]) -> float:
        a, b = pair  # a < b, so the lesser id is the alignment reference
        return _chroma_similarity_pre(chromas[a], chromas[b])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sims = list(pool.map(score, pairs))
    else:
        sims = [score(p) for p in pairs]
    edges = []
    for (a, b), sim in zip(pairs, sims):
        sim = min(1.0, max(0.0, sim))
        if sim >= emit_floor:
            edges.append(SimilarityEdge(a, b, METHOD_CHROMA, sim))
    return edges


def _embedding_edges_from_store(store, ids: Sequence[str] | None,
                                emit_floor: float) -> list[SimilarityEdge]:
    # late import: embeddings depends on this module for the cosine
    from .embeddings import pairwise_embedding_edges

    return pairwise_embedding_edges(store, emit_floor=emit_floor, ids=ids)


def run_detector(
    method: str,
    pieces: Mapping[str, Piece] | None = None,
    *,
    features: Mapping[str, PieceFeatures] | None = None,
    chromas: Mapping[str, np.ndarray] | None = None,
    store=None,
    prefilter_k: int = PREFILTER_K,
    emit_floor: float = DEFAULT_EMIT_FLOOR,
    threads: int = 1,
) -> list[SimilarityEdge]:
    """Score candidate duplicate pairs with one method.

    hash/entropy emit only exact-match pairs at score 1.0; chroma_dtw
    scores prefiltered candidate pairs and keeps those >= emit_floor;
    embedding does the same over vectors from ``store``. Edges come back
    deduplicated and sorted by (id_a, id_b).
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if threads < 1:
        raise ValueError("threads must be positive")

    if method == METHOD_EMBEDDING:
        if store is None:
            raise ValueError("embedding method needs a vector store")
        ids = sorted(pieces) if pieces is not None else None
        edges = _embedding_edges_from_store(store, ids, emit_floor)
    else:
        if pieces is None and features is None:
            raise ValueError("rule methods need pieces or features")
        if features is None:
            features = {pid: compute_features(pieces[pid]) for pid in pieces}
        if method == METHOD_HASH:
            edges = _hash_edges(features)
        elif method == METHOD_ENTROPY:
            edges = _entropy_edges(features)
        else:
            if pieces is None and chromas is None:
                raise ValueError("chroma_dtw needs pieces or chromas")
            edges = _chroma_edges(pieces or {}, features, chromas,
                                  prefilter_k, emit_floor, threads)

    unique = {(e.id_a, e.id_b): e for e in edges}
    return [unique[key] for key in sorted(unique)]


# ---------------------------------------------------------------------------
# file formats


def write_edges_csv(path: str | Path, edges: Iterable[SimilarityEdge]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EDGE_COLUMNS)
        for e in edges:
            raw = "" if e.raw is None else f"{e.raw:.6f}"
            writer.writerow([e.id_a, e.id_b, e.method, f"{e.score:.6f}", raw])


def read_edges_csv(path: str | Path) -> list[SimilarityEdge]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(EDGE_COLUMNS):
            raise ValueError(f"unexpected edge header in {path}: {header}")
        edges = []
        for row in reader:
            if not row:
                continue
            if len(row) != 5:
                raise ValueError(f"malformed edge row in {path}: {row}")
            id_a, id_b, method, score, raw = row
            edges.append(SimilarityEdge(
                id_a, id_b, method, float(score),
                None if raw == "" else float(raw),
            ))
    return edges


def write_features_json(path: str | Path,
                        features: Mapping[str, PieceFeatures]) -> None:
    rows = []
    for pid in sorted(features):
        f = features[pid]
        sparse = {str(p): c for p, c in enumerate(f.pitch_counts) if c}
        rows.append({
            "id": f.id,
            "md5_hex": f.md5_hex,
            "entropy_bits": f.entropy_bits,
            "note_count": f.note_count,
            "pitch_hist_sparse": sparse,
        })
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=1)
        fh.write("\n")


def read_features_json(path: str | Path) -> dict[str, PieceFeatures]:
    with open(path) as fh:
        rows = json.load(fh)
    out: dict[str, PieceFeatures] = {}
    for row in rows:
        counts = [0] * 128
        for key, val in row["pitch_hist_sparse"].items():
            counts[int(key)] = int(val)
        feat = PieceFeatures(
            id=row["id"],
            md5_hex=row["md5_hex"],
            entropy_bits=float(row["entropy_bits"]),
            note_count=int(row["note_count"]),
            pitch_counts=tuple(counts),
        )
        if feat.id in out:
            raise ValueError(f"duplicate feature id {feat.id!r} in {path}")
        out[feat.id] = feat
    return out
