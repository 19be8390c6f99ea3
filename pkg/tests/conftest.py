"""Shared fixtures: tiny hand-built corpora, graphs, and memberships."""

from __future__ import annotations

import numpy as np
import pytest

from narrative_atlas.clustering import MembershipMatrix
from narrative_atlas.corpus import Corpus, Submission
from narrative_atlas.embedding import EmbeddingTable
from narrative_atlas.strength import (
    CandidateEdge,
    EventRecord,
    StrengthGraph,
    graph_from_parts,
)


def make_submission(
    sid: str,
    created_at: int,
    score: int = 100,
    upvote_ratio: float = 0.9,
    community: str = "demo",
    title: str | None = None,
    body: str = "",
) -> Submission:
    return Submission(
        id=sid,
        community=community,
        title=title if title is not None else f"post {sid}",
        body=body,
        created_at=created_at,
        score=score,
        upvote_ratio=upvote_ratio,
    )


def make_corpus(rows: list[tuple[str, int, int, float]], community: str = "demo") -> Corpus:
    """rows: (id, created_at, score, upvote_ratio)."""
    subs = [make_submission(sid, ts, sc, ur, community=community) for sid, ts, sc, ur in rows]
    return Corpus.from_submissions(community, subs)


def make_events(
    ids: list[str],
    percentiles: list[float] | None = None,
    upvote_ratios: list[float] | None = None,
    times: list[int] | None = None,
) -> list[EventRecord]:
    n = len(ids)
    sp = percentiles if percentiles is not None else [0.5] * n
    ur = upvote_ratios if upvote_ratios is not None else [1.0] * n
    ts = times if times is not None else [1_600_000_000 + 3600 * i for i in range(n)]
    return [
        EventRecord(
            id=ids[i],
            order=i,
            created_at=ts[i],
            title=f"post {ids[i]}",
            score=100,
            upvote_ratio=ur[i],
            score_percentile=sp[i],
        )
        for i in range(n)
    ]


def make_edge(source: str, target: str, strength: float) -> CandidateEdge:
    return CandidateEdge(
        source=source,
        target=target,
        coherence=strength,
        acceptance=1.0,
        strength=strength,
    )


def make_graph(
    ids: list[str],
    weighted_edges: list[tuple[str, str, float]],
    percentiles: list[float] | None = None,
    upvote_ratios: list[float] | None = None,
    times: list[int] | None = None,
    community: str = "demo",
) -> StrengthGraph:
    events = make_events(ids, percentiles, upvote_ratios, times)
    edges = [make_edge(s, t, w) for s, t, w in weighted_edges]
    return graph_from_parts(community, events, edges, max_successors=len(ids))


def random_table(ids: list[str], dim: int = 8, seed: int = 0) -> EmbeddingTable:
    """Embedding table of deterministic random unit vectors, one per id."""
    rng = np.random.default_rng(seed)
    table = EmbeddingTable(dim)
    for sub_id in ids:
        table.add(sub_id, rng.normal(size=dim))
    return table


def uniform_memberships(ids: list[str], num_clusters: int = 2) -> MembershipMatrix:
    row = np.full(num_clusters, 1.0 / num_clusters)
    centroids = np.eye(num_clusters)
    return MembershipMatrix(
        num_clusters=num_clusters,
        membership={sid: row.copy() for sid in ids},
        centroids=centroids,
        seed=0,
    )


def chain_graph(strengths: list[float], **kwargs) -> StrengthGraph:
    ids = [f"e{i}" for i in range(len(strengths) + 1)]
    edges = [(ids[i], ids[i + 1], strengths[i]) for i in range(len(strengths))]
    return make_graph(ids, edges, **kwargs)


def one_hot_memberships(ids: list[str], labels: list[int], num_clusters: int = 2) -> MembershipMatrix:
    centroids = np.eye(num_clusters)
    return MembershipMatrix(
        num_clusters=num_clusters,
        membership={sid: centroids[label].copy() for sid, label in zip(ids, labels)},
        centroids=centroids,
        seed=0,
    )


def instance_to_parts(inst: dict) -> tuple[StrengthGraph, MembershipMatrix]:
    """Materialize a random index-form instance as graph plus memberships."""
    ids = [f"e{i}" for i in range(inst["n"])]
    events = make_events(
        ids,
        percentiles=[float(p) for p in inst["percentiles"]],
        upvote_ratios=[float(r) for r in inst["ratios"]],
    )
    edges = [
        make_edge(ids[i], ids[j], float(s))
        for (i, j), s in zip(inst["edges"], inst["strengths"])
    ]
    graph = graph_from_parts("demo", events, edges, max_successors=None)
    memberships = MembershipMatrix(
        num_clusters=inst["num_clusters"],
        membership={sid: inst["memberships"][i].copy() for i, sid in enumerate(ids)},
        centroids=None,
        seed=0,
    )
    return graph, memberships


@pytest.fixture
def demo_corpus() -> Corpus:
    return make_corpus(
        [
            ("a1", 1_600_000_000, 3, 0.90),
            ("a2", 1_600_003_600, 1, 0.80),
            ("a3", 1_600_007_200, 1, 0.70),
            ("a4", 1_600_010_800, 10, 0.95),
        ]
    )
