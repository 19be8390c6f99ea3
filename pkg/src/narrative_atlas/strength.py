"""Pairwise connection strength between temporally ordered events.

``strength = coherence * acceptance``: narrative coherence is the
geometric mean of angular similarity and topical (cluster) agreement;
community acceptance is the geometric mean of the two score percentiles
times the geometric mean of the two upvote ratios.  Candidate edges only
run forward in time, and each event keeps at most ``max_successors``
strongest outgoing edges.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .clustering import MembershipMatrix, cluster_similarity, cluster_similarity_row
from .corpus import Corpus
from .embedding import EmbeddingTable, angular_similarity, angular_similarity_row
from .errors import ValidationError

DEFAULT_MAX_SUCCESSORS = 20


def coherence_score(angular: float, cluster_sim: float) -> float:
    """Coherence ``sqrt(angular * cluster_sim)`` of one event pair."""
    if not 0.0 <= angular <= 1.0 or not 0.0 <= cluster_sim <= 1.0:
        raise ValidationError(
            f"invalid distribution: coherence inputs ({angular}, {cluster_sim}) outside [0, 1]"
        )
    return math.sqrt(angular * cluster_sim)


def acceptance_score(sp_i: float, sp_j: float, ur_i: float, ur_j: float) -> float:
    """Acceptance ``sqrt(sp_i * sp_j) * sqrt(ur_i * ur_j)`` of a pair.

    ``sp`` are score percentiles inside the extraction corpus, ``ur`` are
    upvote ratios.  All inputs live in [0, 1], hence so does the result;
    one contested endpoint (low ratio) drags the pair down even when the
    other endpoint is celebrated.
    """
    for name, val in (("sp_i", sp_i), ("sp_j", sp_j), ("ur_i", ur_i), ("ur_j", ur_j)):
        if not 0.0 <= val <= 1.0:
            raise ValidationError(f"unscored event: {name}={val} outside [0, 1]")
    return math.sqrt(sp_i * sp_j) * math.sqrt(ur_i * ur_j)


@dataclass(frozen=True)
class EventRecord:
    """Per-event data the downstream map needs, in corpus order."""

    id: str
    order: int
    created_at: int
    title: str
    score: int
    upvote_ratio: float
    score_percentile: float


@dataclass(frozen=True)
class CandidateEdge:
    """A forward-in-time connection with its factored strength."""

    source: str
    target: str
    coherence: float
    acceptance: float
    strength: float


@dataclass
class StrengthGraph:
    """All candidate edges of one extraction corpus.

    ``events`` is temporally ordered; ``edges`` is ordered by
    ``(source order, target order)``.  ``params_fingerprint`` hashes every
    input that shaped the graph, so equal fingerprints imply equal graphs.
    """

    community: str
    events: tuple[EventRecord, ...]
    edges: tuple[CandidateEdge, ...]
    max_successors: int | None
    params_fingerprint: str

    def __post_init__(self) -> None:
        self.by_id: dict[str, EventRecord] = {e.id: e for e in self.events}
        self.strength: dict[tuple[str, str], CandidateEdge] = {
            (e.source, e.target): e for e in self.edges
        }

    def event_ids(self) -> list[str]:
        return [e.id for e in self.events]

    @property
    def start_id(self) -> str:
        return self.events[0].id

    @property
    def end_id(self) -> str:
        return self.events[-1].id

    def successors(self, event_id: str) -> list[CandidateEdge]:
        return [e for e in self.edges if e.source == event_id]


def coherence_between(
    table: EmbeddingTable, memberships: MembershipMatrix, id_i: str, id_j: str
) -> float:
    """Coherence of a concrete event pair from its embeddings and clusters."""
    ang = angular_similarity(table.require(id_i), table.require(id_j))
    sim = cluster_similarity(memberships.require(id_i), memberships.require(id_j))
    return coherence_score(ang, sim)


def acceptance_between(corpus: Corpus, id_i: str, id_j: str) -> float:
    """Acceptance of a concrete event pair from corpus score signals."""
    for sub_id in (id_i, id_j):
        if sub_id not in corpus.score_percentile:
            raise ValidationError(f"unscored event: {sub_id!r}")
    return acceptance_score(
        corpus.score_percentile[id_i],
        corpus.score_percentile[id_j],
        corpus.get(id_i).upvote_ratio,
        corpus.get(id_j).upvote_ratio,
    )


def _fingerprint(
    corpus: Corpus,
    table: EmbeddingTable,
    memberships: MembershipMatrix,
    max_successors: int | None,
) -> str:
    digest = hashlib.sha256()
    for sub in corpus.submissions:
        digest.update(
            f"{sub.id}|{sub.created_at}|{sub.score}|{sub.upvote_ratio!r}|"
            f"{corpus.score_percentile[sub.id]!r}\n".encode()
        )
        digest.update(table.require(sub.id).tobytes())
        digest.update(memberships.require(sub.id).tobytes())
    digest.update(f"max_successors={max_successors}".encode())
    digest.update(f"num_clusters={memberships.num_clusters}".encode())
    return digest.hexdigest()[:16]


def build_strength_graph(
    corpus: Corpus,
    table: EmbeddingTable,
    memberships: MembershipMatrix,
    max_successors: int | None = DEFAULT_MAX_SUCCESSORS,
) -> StrengthGraph:
    """Score every forward event pair and keep the strongest successors.

    Args:
        corpus: extraction corpus (>= 2 events, percentiles computed).
        table: embeddings covering every corpus id.
        memberships: cluster memberships covering every corpus id.
        max_successors: per-event cap on outgoing edges, ``None`` for no
            pruning.  Ties at the cap keep the temporally earlier target,
            so raising the cap only ever adds edges.

    Returns:
        A StrengthGraph with edges ordered by (source order, target order).
    """
    n = len(corpus)
    if n < 2:
        raise ValidationError(f"insufficient events: {n} < 2")
    if max_successors is not None and max_successors < 1:
        raise ValidationError(f"invalid max_successors: {max_successors} must be >= 1")

    subs = corpus.submissions
    ids = [s.id for s in subs]
    vectors = table.matrix(ids)
    dists = memberships.matrix(ids)
    percentiles = np.array([corpus.score_percentile[i] for i in ids])
    ratios = np.array([s.upvote_ratio for s in subs])

    events = tuple(
        EventRecord(
            id=s.id,
            order=i,
            created_at=s.created_at,
            title=s.title,
            score=s.score,
            upvote_ratio=s.upvote_ratio,
            score_percentile=float(percentiles[i]),
        )
        for i, s in enumerate(subs)
    )

    kept: list[CandidateEdge] = []
    for i in range(n - 1):
        ang = angular_similarity_row(vectors[i], vectors[i + 1 :])
        sim = cluster_similarity_row(dists[i], dists[i + 1 :])
        coh = np.sqrt(np.clip(ang, 0.0, 1.0) * np.clip(sim, 0.0, 1.0))
        acc = np.sqrt(percentiles[i] * percentiles[i + 1 :]) * np.sqrt(
            ratios[i] * ratios[i + 1 :]
        )
        strengths = coh * acc
        js = np.arange(i + 1, n)
        if max_successors is not None and js.shape[0] > max_successors:
            # stable sort on (-strength) keeps the earlier target on ties
            order = np.argsort(-strengths, kind="stable")[:max_successors]
            chosen = np.sort(js[order])
        else:
            chosen = js
        for j in chosen:
            rel = j - (i + 1)
            kept.append(
                CandidateEdge(
                    source=ids[i],
                    target=ids[j],
                    coherence=float(coh[rel]),
                    acceptance=float(acc[rel]),
                    strength=float(strengths[rel]),
                )
            )

    return StrengthGraph(
        community=corpus.community,
        events=events,
        edges=tuple(kept),
        max_successors=max_successors,
        params_fingerprint=_fingerprint(corpus, table, memberships, max_successors),
    )


def write_edge_table(graph: StrengthGraph) -> str:
    """Candidate edges as a tab-separated table for offline inspection."""
    lines = ["source\ttarget\tcoherence\tacceptance\tstrength"]
    for e in graph.edges:
        lines.append(
            f"{e.source}\t{e.target}\t{e.coherence:.6f}\t{e.acceptance:.6f}\t{e.strength:.6f}"
        )
    return "\n".join(lines) + "\n"


def graph_from_parts(
    community: str,
    events: Iterable[EventRecord],
    edges: Iterable[CandidateEdge],
    max_successors: int | None = None,
) -> StrengthGraph:
    """Assemble a StrengthGraph from precomputed parts.

    Used by tests and synthetic benchmarks that want exact control over
    strengths without going through embeddings.
    """
    ev = tuple(sorted(events, key=lambda e: e.order))
    if len(ev) < 2:
        raise ValidationError(f"insufficient events: {len(ev)} < 2")
    order = {e.id: e.order for e in ev}
    edge_tuple = tuple(sorted(edges, key=lambda e: (order[e.source], order[e.target])))
    digest = hashlib.sha256()
    for e in edge_tuple:
        digest.update(f"{e.source}->{e.target}:{e.strength!r}\n".encode())
    return StrengthGraph(
        community=community,
        events=ev,
        edges=edge_tuple,
        max_successors=max_successors,
        params_fingerprint=digest.hexdigest()[:16],
    )
