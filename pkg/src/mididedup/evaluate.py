"""Ground truth, retrieval and classification metrics, threshold selection.

Ground truth comes from corpus paths: files live in per-artist folders and
duplicate takes of a song share the title up to a trailing ``.N`` counter
(``Dancing Queen.mid`` vs ``Dancing queen.2.mid``). Matching is
case-insensitive and whitespace-trimmed.

Metrics:

* retrieval: nDCG (relevance 1 for duplicates, 0 otherwise) and MRR over a
  full-corpus ranking per query; unscored candidates rank with score 0 and
  ties break lexicographically by id, so results are deterministic.
* classification: precision/recall/F1 over unordered pairs, plus a
  file-level false-negative count (duplicate files with no correctly
  predicted link into their group).

Threshold selection sweeps a 0.001-step grid from the emission floor to 1.0
and keeps the lowest value whose pair precision clears the floor (0.9 by
default). A "conservative" preset pins every method to 0.99 similarity
instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import AbstractSet, Iterable, Mapping, Sequence

import numpy as np

from .detectors import (
    DEFAULT_EMIT_FLOOR,
    METHOD_EMBEDDING,
    SimilarityEdge,
    embedding_score,
)

PRECISION_FLOOR = 0.9
SWEEP_STEP = 0.001
CONSERVATIVE_RULE_THRESHOLD = 0.99
# conservative embedding cut is cosine 0.99, expressed in stored-score units
CONSERVATIVE_EMBEDDING_THRESHOLD = embedding_score(CONSERVATIVE_RULE_THRESHOLD)

Pair = tuple[str, str]


# ---------------------------------------------------------------------------
# ground truth


@dataclass(frozen=True)
class GroundTruth:
    """Partition of the corpus into (artist, title) groups."""

    groups: Mapping[str, tuple[str, ...]]

    @property
    def all_ids(self) -> tuple[str, ...]:
        return tuple(sorted(i for members in self.groups.values() for i in members))

    @property
    def duplicate_groups(self) -> dict[str, tuple[str, ...]]:
        return {k: v for k, v in self.groups.items() if len(v) >= 2}

    @property
    def duplicate_files(self) -> frozenset[str]:
        return frozenset(
            i for members in self.groups.values() if len(members) >= 2
            for i in members
        )

    def group_of(self, pid: str) -> tuple[str, ...]:
        for members in self.groups.values():
            if pid in members:
                return members
        raise KeyError(pid)


def title_key(filename: str) -> str:
    """Normalized song title: extension stripped, one trailing ``.N``
    take-counter stripped, case-folded, whitespace-trimmed."""
    stem = filename.rsplit(".", 1)[0] if "." in filename else filename
    head, sep, tail = stem.rpartition(".")
    if sep and tail.isdigit():
        stem = head
    return stem.strip().casefold()


def ground_truth_from_paths(ids: Iterable[str]) -> GroundTruth:
    """Group ids by (artist folder, normalized title).

    Every id must carry a directory component naming the artist.
    """
    groups: dict[str, list[str]] = {}
    for pid in ids:
        head, sep, tail = pid.replace("\\", "/").rpartition("/")
        if not sep or not head:
            raise ValueError(f"id {pid!r} has no artist directory")
        artist = head.rsplit("/", 1)[-1].strip().casefold()
        key = f"{artist}/{title_key(tail)}"
        groups.setdefault(key, []).append(pid)
    return GroundTruth({k: tuple(sorted(v)) for k, v in sorted(groups.items())})


def true_pairs(truth: GroundTruth) -> set[Pair]:
    """All unordered id pairs within groups of size >= 2."""
    pairs: set[Pair] = set()
    for members in truth.groups.values():
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                pairs.add((members[i], members[j]))
    return pairs


def write_ground_truth(path: str | Path, truth: GroundTruth) -> None:
    with open(path, "w") as fh:
        json.dump({k: list(v) for k, v in sorted(truth.groups.items())},
                  fh, indent=1)
        fh.write("\n")


def read_ground_truth(path: str | Path) -> GroundTruth:
    with open(path) as fh:
        data = json.load(fh)
    return GroundTruth({k: tuple(v) for k, v in data.items()})


# ---------------------------------------------------------------------------
# retrieval metrics


def ndcg_all(ranked: Sequence[str], relevant: AbstractSet[str]) -> float:
    """nDCG of one query's ranking over the whole corpus.

    Relevance is binary; DCG uses the 1/log2(rank+1) discount and the
    ideal ranking packs all relevant items at the top.
    """
    if not relevant:
        raise ValueError("query has no relevant items")
    dcg = 0.0
    for rank, pid in enumerate(ranked, start=1):
        if pid in relevant:
            dcg += 1.0 / math.log2(rank + 1)
    ideal = sum(1.0 / math.log2(r + 1) for r in range(1, len(relevant) + 1))
    return dcg / ideal


def reciprocal_rank(ranked: Sequence[str], relevant: AbstractSet[str]) -> float:
    for rank, pid in enumerate(ranked, start=1):
        if pid in relevant:
            return 1.0 / rank
    return 0.0


def mrr(rankings: Sequence[Sequence[str]],
        relevants: Sequence[AbstractSet[str]]) -> float:
    """Mean reciprocal rank over queries; rankings[i] pairs with relevants[i]."""
    if len(rankings) != len(relevants):
        raise ValueError("rankings and relevants must pair up")
    if not rankings:
        return 0.0
    return sum(reciprocal_rank(r, rel)
               for r, rel in zip(rankings, relevants)) / len(rankings)


def union_pair_scores(edges: Iterable[SimilarityEdge]) -> dict[Pair, float]:
    """Best score per pair across methods."""
    scores: dict[Pair, float] = {}
    for e in edges:
        key = (e.id_a, e.id_b)
        if scores.get(key, -1.0) < e.score:
            scores[key] = e.score
    return scores


def rank_all(query: str, corpus_ids: Sequence[str],
             scores: Mapping[str, float]) -> list[str]:
    """Every non-query id, best score first; unscored ids count as 0.0
    and ties break lexicographically."""
    return sorted((pid for pid in corpus_ids if pid != query),
                  key=lambda pid: (-scores.get(pid, 0.0), pid))


def retrieval_metrics(edges: Iterable[SimilarityEdge],
                      truth: GroundTruth) -> tuple[float, float]:
    """(mean nDCG, MRR) over every duplicate file as a query, each ranking
    the full corpus."""
    pair_scores = union_pair_scores(edges)
    adjacency: dict[str, dict[str, float]] = {}
    for (a, b), s in pair_scores.items():
        adjacency.setdefault(a, {})[b] = s
        adjacency.setdefault(b, {})[a] = s
    corpus_ids = truth.all_ids
    queries = sorted(truth.duplicate_files)
    if not queries:
        return 0.0, 0.0
    ndcg_sum = 0.0
    rr_sum = 0.0
    for q in queries:
        relevant = set(truth.group_of(q)) - {q}
        ranked = rank_all(q, corpus_ids, adjacency.get(q, {}))
        ndcg_sum += ndcg_all(ranked, relevant)
        rr_sum += reciprocal_rank(ranked, relevant)
    n = len(queries)
    return ndcg_sum / n, rr_sum / n


# ---------------------------------------------------------------------------
# classification metrics


@dataclass(frozen=True)
class ClassificationMetrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn_pairs: int
    fn_count: int  # duplicate files with no correct predicted link
    missed_files: tuple[str, ...] = field(repr=False, default=())


def classify_pairs(edges: Iterable[SimilarityEdge],
                   thresholds: float | Mapping[str, float]) -> set[Pair]:
    """Union rule: a pair is predicted duplicate when any method's score
    reaches that method's threshold. A scalar applies to all methods;
    with a map, methods absent from it do not vote."""
    predicted: set[Pair] = set()
    for e in edges:
        if isinstance(thresholds, Mapping):
            cut = thresholds.get(e.method)
            if cut is None:
                continue
        else:
            cut = thresholds
        if e.score >= cut:
            predicted.add((e.id_a, e.id_b))
    return predicted


def file_false_negatives(predicted: AbstractSet[Pair],
                         truth: GroundTruth) -> list[str]:
    """Duplicate files with no correctly predicted pair into their group."""
    tp = predicted & true_pairs(truth)
    linked: set[str] = set()
    for a, b in tp:
        linked.add(a)
        linked.add(b)
    return sorted(truth.duplicate_files - linked)


def classification_metrics(predicted: AbstractSet[Pair],
                           truth: GroundTruth) -> ClassificationMetrics:
    truth_pairs = true_pairs(truth)
    tp = len(predicted & truth_pairs)
    fp = len(predicted) - tp
    fn_pairs = len(truth_pairs) - tp
    precision = tp / len(predicted) if predicted else 0.0
    recall = tp / len(truth_pairs) if truth_pairs else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    missed = file_false_negatives(predicted, truth)
    return ClassificationMetrics(
        precision=precision, recall=recall, f1=f1,
        tp=tp, fp=fp, fn_pairs=fn_pairs,
        fn_count=len(missed), missed_files=tuple(missed),
    )


# ---------------------------------------------------------------------------
# threshold sweep


def sweep_threshold(edges: Iterable[SimilarityEdge], truth: GroundTruth,
                    precision_floor: float = PRECISION_FLOOR,
                    emit_floor: float = DEFAULT_EMIT_FLOOR) -> tuple[float, bool]:
    """Lowest grid threshold (step 0.001 over [emit_floor, 1.0]) whose
    pair precision meets the floor.

    Returns (threshold, reached). When no grid point qualifies the
    threshold is pinned to 1.0 and ``reached`` is False. Precision at a
    grid point counts a pair once at its best score (union semantics);
    zero predicted pairs count as precision 0.
    """
    if not 0.0 <= emit_floor <= 1.0:
        raise ValueError("emit_floor must be in [0, 1]")
    truth_pairs = true_pairs(truth)
    scored = sorted(union_pair_scores(edges).items(), key=lambda kv: kv[1])
    vals = np.array([v for _, v in scored], dtype=np.float64)
    flags = np.array([pair in truth_pairs for pair, _ in scored],
                     dtype=np.float64)
    # suffix sums: tp_at[i] = true pairs among vals[i:]
    tp_suffix = np.concatenate([np.cumsum(flags[::-1])[::-1], [0.0]])
    start = int(math.ceil(emit_floor / SWEEP_STEP - 1e-9))
    grid = np.arange(start, 1001, dtype=np.int64) / 1000.0
    lo = np.searchsorted(vals, grid, side="left")
    n_at = len(vals) - lo
    tp_at = tp_suffix[lo]
    with np.errstate(invalid="ignore", divide="ignore"):
        prec = np.where(n_at > 0, tp_at / np.maximum(n_at, 1), 0.0)
    ok = np.flatnonzero(prec >= precision_floor)
    if ok.size == 0:
        return 1.0, False
    return float(grid[int(ok[0])]), True


def conservative_thresholds(methods: Iterable[str]) -> dict[str, float]:
    """Fixed high-precision preset: similarity 0.99 for every method (the
    embedding value is that cosine expressed as a stored score)."""
    return {
        m: (CONSERVATIVE_EMBEDDING_THRESHOLD if m == METHOD_EMBEDDING
            else CONSERVATIVE_RULE_THRESHOLD)
        for m in methods
    }


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class EvalReport:
    ndcg_mean: float
    mrr_mean: float
    precision: float
    recall: float
    f1: float
    fn_count: int
    threshold_used: Mapping[str, float]
    threshold_reached: Mapping[str, bool]
    method_set: tuple[str, ...]
    conservative: bool = False


def evaluate_edges(
    edges: Sequence[SimilarityEdge],
    truth: GroundTruth,
    *,
    precision_floor: float = PRECISION_FLOOR,
    emit_floor: float = DEFAULT_EMIT_FLOOR,
    conservative: bool = False,
    thresholds: Mapping[str, float] | None = None,
) -> tuple[EvalReport, dict[str, list[tuple[float, float, float]]]]:
    """Score an edge set against ground truth.

    Thresholds come from, in priority order: the explicit ``thresholds``
    map, the conservative preset, or a per-method precision-floor sweep.
    Classification is the union over methods at their thresholds.
    Returns the report plus per-method P/R curves as (threshold,
    precision, recall) triples on a coarse grid.
    """
    method_set = tuple(sorted({e.method for e in edges}))
    by_method = {m: [e for e in edges if e.method == m] for m in method_set}

    reached = {m: True for m in method_set}
    if thresholds is not None:
        used = {m: float(thresholds[m]) for m in method_set}
    elif conservative:
        used = conservative_thresholds(method_set)
    else:
        used = {}
        for m in method_set:
            used[m], reached[m] = sweep_threshold(
                by_method[m], truth, precision_floor, emit_floor)

    predicted = classify_pairs(edges, used)
    cm = classification_metrics(predicted, truth)
    ndcg_mean, mrr_mean = retrieval_metrics(edges, truth)

    truth_pairs = true_pairs(truth)
    curves: dict[str, list[tuple[float, float, float]]] = {}
    for m in method_set:
        pts = []
        for i in range(50, 101):
            t = i / 100.0
            pred = classify_pairs(by_method[m], t)
            tp = len(pred & truth_pairs)
            p = tp / len(pred) if pred else 0.0
            r = tp / len(truth_pairs) if truth_pairs else 0.0
            pts.append((t, p, r))
        curves[m] = pts

    report = EvalReport(
        ndcg_mean=ndcg_mean,
        mrr_mean=mrr_mean,
        precision=cm.precision,
        recall=cm.recall,
        f1=cm.f1,
        fn_count=cm.fn_count,
        threshold_used=dict(used),
        threshold_reached=dict(reached),
        method_set=method_set,
        conservative=conservative,
    )
    return report, curves


def write_report(path: str | Path, report: EvalReport,
                 pr_curves: Mapping[str, Sequence[tuple[float, float, float]]]
                 | None = None) -> None:
    payload = {
        "ndcg_mean": report.ndcg_mean,
        "mrr_mean": report.mrr_mean,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "fn_count": report.fn_count,
        "threshold_used": dict(report.threshold_used),
        "threshold_reached": dict(report.threshold_reached),
        "method_set": list(report.method_set),
        "conservative": report.conservative,
        "pr_curves": {
            m: [[t, p, r] for t, p, r in pts]
            for m, pts in (pr_curves or {}).items()
        },
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def read_report(path: str | Path) -> tuple[EvalReport, dict[str, list[tuple[float, float, float]]]]:
    with open(path) as fh:
        data = json.load(fh)
    report = EvalReport(
        ndcg_mean=float(data["ndcg_mean"]),
        mrr_mean=float(data["mrr_mean"]),
        precision=float(data["precision"]),
        recall=float(data["recall"]),
        f1=float(data["f1"]),
        fn_count=int(data["fn_count"]),
        threshold_used={k: float(v) for k, v in data["threshold_used"].items()},
        threshold_reached={k: bool(v) for k, v in data["threshold_reached"].items()},
        method_set=tuple(data["method_set"]),
        conservative=bool(data.get("conservative", False)),
    )
    curves = {
        m: [(float(t), float(p), float(r)) for t, p, r in pts]
        for m, pts in data.get("pr_curves", {}).items()
    }
    return report, curves
