"""Narrative atlas: extract accepted community narratives as navigable maps."""

from .corpus import Corpus, Submission, filter_corpus, load_submissions, score_percentiles
from .embedding import EmbeddingTable, angular_similarity, load_embeddings
from .clustering import (
    MembershipMatrix,
    cluster_similarity,
    edge_membership,
    jensen_shannon_divergence,
    soft_cluster,
)
from .strength import StrengthGraph, acceptance_score, build_strength_graph, coherence_score
from .lp import build_model, solve, verify_solution
from .mapgraph import NarrativeMap, canonical_json, round_solution, to_document, to_dot
from .pipeline import ExtractionConfig, extract
from .synth import evaluate_recovery, generate_planted_corpus

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Submission",
    "load_submissions",
    "filter_corpus",
    "score_percentiles",
    "EmbeddingTable",
    "load_embeddings",
    "angular_similarity",
    "MembershipMatrix",
    "soft_cluster",
    "jensen_shannon_divergence",
    "cluster_similarity",
    "edge_membership",
    "StrengthGraph",
    "coherence_score",
    "acceptance_score",
    "build_strength_graph",
    "build_model",
    "solve",
    "verify_solution",
    "NarrativeMap",
    "round_solution",
    "to_document",
    "to_dot",
    "canonical_json",
    "ExtractionConfig",
    "extract",
    "generate_planted_corpus",
    "evaluate_recovery",
    "__version__",
]
