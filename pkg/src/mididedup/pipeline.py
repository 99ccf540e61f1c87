"""End-to-end pipeline stages and their on-disk artifact layout.

Every stage reads and writes files under a single output directory:

    index.json         corpus scan results (one row per MIDI file)
    features.json      per-piece hash, entropy, note count, pitch counts
    edges.csv          scored candidate pairs from all methods
    ground_truth.json  "artist/title" -> member ids
    report.json        retrieval + classification metrics
    clusters.json      duplicate clusters with representatives
    filter_list.txt    files to drop, one id per line

Stages communicate only through these files, so any stage can be re-run
or replaced (for example, edges from several detect runs can feed one
eval) without touching the others.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Mapping, Sequence

from . import cluster as cluster_mod
from . import detectors, evaluate
from .corpus import CorpusIndex, load_piece, read_index, scan_corpus, write_index
from .embeddings import EmbeddingStore
from .model import Piece
from .synth import synth_benchmark

INDEX_FILE = "index.json"
FEATURES_FILE = "features.json"
EDGES_FILE = "edges.csv"
TRUTH_FILE = "ground_truth.json"
REPORT_FILE = "report.json"
CLUSTERS_FILE = "clusters.json"
FILTER_FILE = "filter_list.txt"


class ConfigError(ValueError):
    """Bad pipeline configuration (unknown keys, out-of-range values)."""


@dataclass(frozen=True)
class PipelineConfig:
    methods: tuple[str, ...] = detectors.RULE_METHODS
    prefilter_k: int = detectors.PREFILTER_K
    emit_floor: float = detectors.DEFAULT_EMIT_FLOOR
    precision_floor: float = evaluate.PRECISION_FLOOR
    thresholds: Mapping[str, float] | None = None  # fixed per-method cuts
    conservative_mode: bool = False
    threads: int = 1
    seed: int = 0
    corpus_root: str | None = None   # flags override these paths
    store: str | None = None
    out_dir: str | None = None
    truth: str | None = None

    def __post_init__(self) -> None:
        bad = set(self.methods) - detectors.METHODS
        if bad:
            raise ConfigError(f"unknown methods: {sorted(bad)}")
        if not self.methods:
            raise ConfigError("methods must not be empty")
        if self.prefilter_k < 1:
            raise ConfigError("prefilter_k must be positive")
        if not 0.0 <= self.emit_floor <= 1.0:
            raise ConfigError("emit_floor must lie in [0, 1]")
        if not 0.0 < self.precision_floor <= 1.0:
            raise ConfigError("precision_floor must lie in (0, 1]")
        if self.thresholds is not None:
            unknown = set(self.thresholds) - detectors.METHODS
            if unknown:
                raise ConfigError(f"thresholds for unknown methods: {sorted(unknown)}")
            missing = set(self.methods) - set(self.thresholds)
            if missing:
                raise ConfigError(f"thresholds missing methods: {sorted(missing)}")
            for m, t in self.thresholds.items():
                # classification cuts below the emission floor would test
                # scores that were never written out
                if not self.emit_floor <= float(t) <= 1.0:
                    raise ConfigError(
                        f"threshold for {m} must lie in [emit_floor, 1]: {t}")
        if self.threads < 1:
            raise ConfigError("threads must be positive")


def load_config(path: str | Path) -> PipelineConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "methods" in raw:
        raw["methods"] = tuple(raw["methods"])
    if "thresholds" in raw and raw["thresholds"] is not None:
        if not isinstance(raw["thresholds"], dict):
            raise ConfigError("thresholds must be a method -> value object")
        raw["thresholds"] = {k: float(v) for k, v in raw["thresholds"].items()}
    try:
        return PipelineConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# stages


def stage_scan(corpus_root: str | Path, out_dir: str | Path) -> CorpusIndex:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = scan_corpus(str(corpus_root))
    write_index(index, str(out_dir / INDEX_FILE))
    return index


def _ensure_index(corpus_root: str | Path, out_dir: Path) -> CorpusIndex:
    path = out_dir / INDEX_FILE
    if path.exists():
        return read_index(str(path), root=str(corpus_root))
    return stage_scan(corpus_root, out_dir)


def _load_ok_pieces(corpus_root: str | Path,
                    index: CorpusIndex) -> dict[str, Piece]:
    root = str(corpus_root)
    return {pid: load_piece(root, pid) for pid in index.ok_ids}


def stage_features(corpus_root: str | Path,
                   out_dir: str | Path) -> dict[str, detectors.PieceFeatures]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = _ensure_index(corpus_root, out_dir)
    pieces = _load_ok_pieces(corpus_root, index)
    features = {pid: detectors.compute_features(p) for pid, p in pieces.items()}
    detectors.write_features_json(out_dir / FEATURES_FILE, features)
    return features


def stage_detect(corpus_root: str | Path, out_dir: str | Path,
                 config: PipelineConfig,
                 store_prefix: str | Path | None = None
                 ) -> list[detectors.SimilarityEdge]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = _ensure_index(corpus_root, out_dir)
    pieces = _load_ok_pieces(corpus_root, index)
    features = {pid: detectors.compute_features(p) for pid, p in pieces.items()}

    store = None
    if detectors.METHOD_EMBEDDING in config.methods:
        if store_prefix is None:
            store_prefix = config.store
        if store_prefix is None:
            raise ConfigError("embedding method requires a store")
        store = EmbeddingStore.load(store_prefix)

    edges: list[detectors.SimilarityEdge] = []
    for method in config.methods:
        if method == detectors.METHOD_EMBEDDING:
            in_store = set(store.ids)
            scoped = {pid: pieces[pid] for pid in pieces if pid in in_store}
            edges.extend(detectors.run_detector(
                method, scoped, store=store, emit_floor=config.emit_floor))
        else:
            edges.extend(detectors.run_detector(
                method, pieces,
                features=features,
                prefilter_k=config.prefilter_k,
                emit_floor=config.emit_floor,
                threads=config.threads,
            ))
    edges.sort(key=lambda e: (e.method, e.id_a, e.id_b))
    detectors.write_features_json(out_dir / FEATURES_FILE, features)
    detectors.write_edges_csv(out_dir / EDGES_FILE, edges)
    return edges


def _read_all_edges(out_dir: Path,
                    extra_edges: Sequence[str | Path]
                    ) -> list[detectors.SimilarityEdge]:
    paths = [out_dir / EDGES_FILE] + [Path(p) for p in extra_edges]
    edges: list[detectors.SimilarityEdge] = []
    for p in paths:
        edges.extend(detectors.read_edges_csv(p))
    edges.sort(key=lambda e: (e.method, e.id_a, e.id_b))
    return edges


def _load_truth(out_dir: Path,
                truth_path: str | Path | None) -> evaluate.GroundTruth:
    if truth_path is not None:
        return evaluate.read_ground_truth(truth_path)
    cached = out_dir / TRUTH_FILE
    if cached.exists():
        return evaluate.read_ground_truth(cached)
    index = read_index(str(out_dir / INDEX_FILE))
    truth = evaluate.ground_truth_from_paths(index.ok_ids)
    evaluate.write_ground_truth(cached, truth)
    return truth


def stage_eval(out_dir: str | Path, config: PipelineConfig,
               truth_path: str | Path | None = None,
               extra_edges: Sequence[str | Path] = ()) -> evaluate.EvalReport:
    out_dir = Path(out_dir)
    edges = _read_all_edges(out_dir, extra_edges)
    truth = _load_truth(out_dir, truth_path if truth_path is not None
                        else config.truth)
    report, curves = evaluate.evaluate_edges(
        edges, truth,
        precision_floor=config.precision_floor,
        emit_floor=config.emit_floor,
        conservative=config.conservative_mode,
        thresholds=config.thresholds,
    )
    evaluate.write_report(out_dir / REPORT_FILE, report, curves)
    return report


def stage_cluster(out_dir: str | Path, config: PipelineConfig,
                  extra_edges: Sequence[str | Path] = ()
                  ) -> tuple[list[cluster_mod.Cluster], dict[str, int]]:
    out_dir = Path(out_dir)
    edges = _read_all_edges(out_dir, extra_edges)
    report, _ = evaluate.read_report(out_dir / REPORT_FILE)
    pred = evaluate.classify_pairs(edges, report.threshold_used)
    features = detectors.read_features_json(out_dir / FEATURES_FILE)
    note_counts = {pid: f.note_count for pid, f in features.items()}
    clusters = cluster_mod.build_clusters(pred, note_counts)
    counts = cluster_mod.emit_filter_list(
        cluster_mod.filter_list(clusters), clusters,
        out_dir / FILTER_FILE, out_dir / CLUSTERS_FILE)
    return clusters, counts


def stage_dedup(corpus_root: str | Path, out_dir: str | Path,
                config: PipelineConfig,
                store_prefix: str | Path | None = None,
                truth_path: str | Path | None = None
                ) -> tuple[evaluate.EvalReport, dict[str, int]]:
    """scan -> detect -> eval -> cluster in one go."""
    stage_scan(corpus_root, out_dir)
    stage_detect(corpus_root, out_dir, config, store_prefix)
    report = stage_eval(out_dir, config, truth_path)
    _, counts = stage_cluster(out_dir, config)
    return report, counts


def stage_synth_bench(dest: str | Path, config: PipelineConfig,
                      n_bases: int = 200, n_variants: int = 3) -> int:
    entries = synth_benchmark(dest, n_bases=n_bases,
                              n_variants=n_variants, seed=config.seed)
    return len(entries)


def apply_overrides(config: PipelineConfig, *, threads: int | None = None,
                    seed: int | None = None) -> PipelineConfig:
    if threads is not None:
        config = replace(config, threads=threads)
    if seed is not None:
        config = replace(config, seed=seed)
    return config
