"""Soft topical clustering of embedded events.

Events are clustered with spherical k-means (cosine geometry, seeded
k-means++ initialization), then softened into per-event membership
distributions with a temperature-scaled softmax over centroid dot
products.  Cluster distributions are compared with the base-2
Jensen-Shannon divergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embedding import EmbeddingTable
from .errors import ValidationError

KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-6
DEFAULT_TEMPERATURE = 0.1

MIN_CLUSTERS = 2
MAX_CLUSTERS = 12


def auto_num_clusters(num_events: int) -> int:
    """Default cluster count ``ceil(sqrt(n/2))`` clamped to [2, 12]."""
    if num_events < 2:
        raise ValidationError(f"insufficient events: {num_events} < 2")
    k = math.ceil(math.sqrt(num_events / 2.0))
    return max(MIN_CLUSTERS, min(MAX_CLUSTERS, k))


@dataclass
class MembershipMatrix:
    """Per-event soft cluster memberships plus the centroids behind them."""

    num_clusters: int
    membership: dict[str, np.ndarray] = field(default_factory=dict)
    centroids: np.ndarray | None = None
    seed: int = 0

    def require(self, event_id: str) -> np.ndarray:
        dist = self.membership.get(event_id)
        if dist is None:
            raise ValidationError(f"unclustered event: {event_id!r}")
        return dist

    def matrix(self, ids: Sequence[str]) -> np.ndarray:
        return np.stack([self.require(i) for i in ids])


def _kmeans_pp_init(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding on the unit sphere (squared chordal distance)."""
    n = data.shape[0]
    centroids = np.empty((k, data.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = data[first]
    # squared distance to nearest chosen centroid; on unit vectors
    # ||x - c||^2 = 2(1 - x.c)
    d2 = 2.0 * (1.0 - np.clip(data @ centroids[0], -1.0, 1.0))
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # all points coincide with chosen centroids; reuse the first point
            centroids[j] = data[first]
            continue
        idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = data[idx]
        d2 = np.minimum(d2, 2.0 * (1.0 - np.clip(data @ centroids[j], -1.0, 1.0)))
    return centroids


def _spherical_kmeans(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Lloyd iterations with cosine assignment and normalized mean update."""
    centroids = _kmeans_pp_init(data, k, rng)
    for _ in range(KMEANS_MAX_ITER):
        labels = np.argmax(data @ centroids.T, axis=1)
        updated = centroids.copy()
        for j in range(k):
            members = data[labels == j]
            if members.shape[0] == 0:
                continue  # empty cluster keeps its previous centroid
            mean = members.mean(axis=0)
            norm = np.linalg.norm(mean)
            if norm > 0.0:
                updated[j] = mean / norm
        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        if shift < KMEANS_TOL:
            break
    return centroids


def soft_cluster(
    table: EmbeddingTable,
    ids: Sequence[str],
    num_clusters: int,
    seed: int,
    temperature: float = DEFAULT_TEMPERATURE,
) -> MembershipMatrix:
    """Cluster ``ids`` and return softmax membership distributions.

    Args:
        table: embedding table covering every id.
        ids: event ids to cluster, order irrelevant to the result values.
        num_clusters: number of clusters, 2 <= k <= len(ids).
        seed: RNG seed; identical inputs and seed give identical output.
        temperature: softmax temperature over centroid dot products.
            Smaller values sharpen memberships toward one-hot.

    Raises:
        ValidationError: unknown id ("unembedded event") or a cluster count
            outside [2, len(ids)] ("invalid cluster count").
    """
    if num_clusters < MIN_CLUSTERS or num_clusters > len(ids):
        raise ValidationError(
            f"invalid cluster count: {num_clusters} (need 2 <= k <= {len(ids)})"
        )
    if temperature <= 0.0:
        raise ValidationError(f"invalid cluster count: temperature {temperature} must be > 0")
    data = table.matrix(ids)  # raises "unembedded event" on a miss
    rng = np.random.default_rng(seed)
    centroids = _spherical_kmeans(data, num_clusters, rng)

    logits = (data @ centroids.T) / temperature
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    dists = weights / weights.sum(axis=1, keepdims=True)

    return MembershipMatrix(
        num_clusters=num_clusters,
        membership={i: dists[row] for row, i in enumerate(ids)},
        centroids=centroids,
        seed=seed,
    )


def _check_distribution(p: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"invalid distribution: {name} is not a vector")
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ValidationError(f"invalid distribution: {name} has negative or non-finite mass")
    if abs(float(arr.sum()) - 1.0) > 1e-6:
        raise ValidationError(f"invalid distribution: {name} sums to {float(arr.sum())}")
    return arr


def jensen_shannon_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """Base-2 Jensen-Shannon divergence between two distributions.

    Symmetric, bounded to [0, 1] in base 2, and zero exactly when the
    distributions coincide.  Zero components contribute nothing
    (0 log 0 taken as 0).
    """
    pa = _check_distribution(p, "p")
    qa = _check_distribution(q, "q")
    if pa.shape != qa.shape:
        raise ValidationError(f"invalid distribution: lengths {pa.shape[0]} vs {qa.shape[0]}")
    m = 0.5 * (pa + qa)

    def kl(a: np.ndarray) -> float:
        mask = a > 0.0
        return float(np.sum(a[mask] * np.log2(a[mask] / m[mask])))

    return 0.5 * kl(pa) + 0.5 * kl(qa)


def cluster_similarity(p: Sequence[float], q: Sequence[float]) -> float:
    """Topical agreement ``1 - JSD(p, q)`` of two membership distributions."""
    return 1.0 - jensen_shannon_divergence(p, q)


def cluster_similarity_row(p: np.ndarray, others: np.ndarray) -> np.ndarray:
    """Vectorized :func:`cluster_similarity` of ``p`` against stacked rows."""
    pa = np.asarray(p, dtype=np.float64)[None, :]
    qa = np.asarray(others, dtype=np.float64)
    m = 0.5 * (pa + qa)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(pa > 0.0, pa * np.log2(np.where(pa > 0.0, pa / m, 1.0)), 0.0)
        right = np.where(qa > 0.0, qa * np.log2(np.where(qa > 0.0, qa / m, 1.0)), 0.0)
    jsd = 0.5 * left.sum(axis=1) + 0.5 * right.sum(axis=1)
    return 1.0 - jsd


def edge_membership(p_i: Sequence[float], p_j: Sequence[float], k: int) -> float:
    """Cluster-k membership of the edge (i, j): ``sqrt(m_ik * m_jk)``.

    The geometric mean keeps edge membership at most ``min``-like: it is 0
    whenever either endpoint has no mass in the cluster, and summed over k
    it never exceeds 1 (Cauchy-Schwarz).
    """
    pa = _check_distribution(p_i, "p_i")
    qa = _check_distribution(p_j, "p_j")
    if pa.shape != qa.shape:
        raise ValidationError(f"invalid distribution: lengths {pa.shape[0]} vs {qa.shape[0]}")
    if not 0 <= k < pa.shape[0]:
        raise ValidationError(f"invalid cluster index: {k} for {pa.shape[0]} clusters")
    return float(math.sqrt(pa[k] * qa[k]))


def edge_membership_vector(p_i: Sequence[float], p_j: Sequence[float]) -> np.ndarray:
    """All cluster memberships of the edge (i, j) at once."""
    pa = np.asarray(p_i, dtype=np.float64)
    qa = np.asarray(p_j, dtype=np.float64)
    return np.sqrt(pa * qa)
