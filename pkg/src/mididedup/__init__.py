"""Near-duplicate detection for symbolic music corpora.

Parses standard MIDI files into an exact-rational note representation,
fingerprints them (token hash, beat-position entropy, chromagram), and
scores candidate duplicate pairs with rule-based and embedding-based
similarity. Higher-level helpers evaluate detector output against
path-derived ground truth, cluster confirmed duplicates, and emit
filter lists for corpus cleaning.
"""

from .augment import (
    KIND_ORDER,
    AugmentationSpec,
    DegenerateVariantError,
    apply_augmentation,
    eligible_kinds,
    make_variant_set,
    neighbor_segments,
)
from .cluster import (
    Cluster,
    build_clusters,
    build_graph,
    connected_components,
    emit_filter_list,
    filter_list,
    select_representatives,
)
from .corpus import CorpusIndex, iter_midi_paths, load_piece, scan_corpus
from .detectors import (
    HashSignature,
    PieceFeatures,
    PitchHistogram,
    PositionHistogram,
    SimilarityEdge,
    align_transpose,
    beat_position_entropy,
    beat_position_histogram,
    chroma_similarity,
    chromagram,
    compute_features,
    embedding_cosine,
    embedding_score,
    entropy_similarity,
    hash_signature,
    hash_similarity,
    kl_divergence,
    pitch_histogram,
    prefilter_topk,
    run_detector,
    smoothed_pitch_probs,
    token_hash,
)
from .dtw import dtw_distance
from .embeddings import EmbeddingStore, load_embeddings, pairwise_embedding_edges
from .encoding import BarGrid, OctupleToken, TokenSequence, encode_octuple, serialize_tokens
from .evaluate import (
    EvalReport,
    GroundTruth,
    classification_metrics,
    classify_pairs,
    evaluate_edges,
    ground_truth_from_paths,
    mrr,
    ndcg_all,
    reciprocal_rank,
    retrieval_metrics,
    sweep_threshold,
)
from .model import NoteEvent, Piece
from .pipeline import PipelineConfig, load_config
from .rng import CounterRng, derive_seed
from .smf import MidiParseError, parse_midi, write_midi
from .synth import generate_piece, synth_benchmark

__version__ = "0.1.0"

__all__ = [
    "AugmentationSpec",
    "BarGrid",
    "Cluster",
    "CorpusIndex",
    "CounterRng",
    "DegenerateVariantError",
    "EmbeddingStore",
    "EvalReport",
    "GroundTruth",
    "HashSignature",
    "KIND_ORDER",
    "MidiParseError",
    "NoteEvent",
    "OctupleToken",
    "Piece",
    "PieceFeatures",
    "PipelineConfig",
    "PitchHistogram",
    "PositionHistogram",
    "SimilarityEdge",
    "TokenSequence",
    "align_transpose",
    "apply_augmentation",
    "beat_position_entropy",
    "beat_position_histogram",
    "build_clusters",
    "build_graph",
    "chroma_similarity",
    "chromagram",
    "classification_metrics",
    "classify_pairs",
    "compute_features",
    "connected_components",
    "derive_seed",
    "dtw_distance",
    "eligible_kinds",
    "embedding_cosine",
    "embedding_score",
    "emit_filter_list",
    "encode_octuple",
    "entropy_similarity",
    "evaluate_edges",
    "filter_list",
    "generate_piece",
    "ground_truth_from_paths",
    "hash_signature",
    "hash_similarity",
    "iter_midi_paths",
    "kl_divergence",
    "load_config",
    "load_embeddings",
    "load_piece",
    "make_variant_set",
    "mrr",
    "ndcg_all",
    "neighbor_segments",
    "pairwise_embedding_edges",
    "parse_midi",
    "pitch_histogram",
    "prefilter_topk",
    "reciprocal_rank",
    "retrieval_metrics",
    "run_detector",
    "scan_corpus",
    "select_representatives",
    "serialize_tokens",
    "smoothed_pitch_probs",
    "sweep_threshold",
    "synth_benchmark",
    "token_hash",
    "write_midi",
]
