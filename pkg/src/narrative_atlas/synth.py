"""Synthetic corpora with planted narrative chains, plus recovery scoring.

Each chain gets a random anchor direction; its events are the anchor plus
Gaussian noise, renormalized.  Chains are interleaved chronologically, and
score signals are drawn from named acceptance profiles so extraction
quality is measurable against ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Submission
from .embedding import EmbeddingTable
from .errors import ValidationError
from .mapgraph import NarrativeMap

COMMUNITY = "synthetic"

# score range, upvote-ratio range per profile
PROFILES: dict[str, tuple[tuple[int, int], tuple[float, float]]] = {
    "accepted": ((500, 1000), (0.85, 1.0)),
    "neutral": ((100, 400), (0.5, 0.85)),
    "rejected": ((-50, 100), (0.2, 0.5)),
}


@dataclass
class PlantedCorpus:
    """Ground truth bundle: corpus, embeddings, and the planted chains."""

    corpus: Corpus
    table: EmbeddingTable
    chains: list[list[str]]
    profiles: list[str]
    noise_sigma: float
    seed: int


def _words(rng: np.random.Generator, n: int) -> str:
    vocab = [
        "river", "council", "march", "harbor", "signal", "garden", "treaty",
        "lantern", "archive", "bridge", "quarry", "meridian", "harvest",
    ]
    return " ".join(vocab[int(i)] for i in rng.integers(0, len(vocab), size=n))


def generate_planted_corpus(
    num_chains: int,
    chain_lengths: int | list[int],
    noise_sigma: float,
    acceptance_profile: str | list[str],
    seed: int,
    dim: int = 16,
    share_endpoints: bool = False,
    base_time: int = 1_600_000_000,
    step: int = 3600,
) -> PlantedCorpus:
    """Build a corpus of ``num_chains`` planted chains.

    Args:
        num_chains: how many chains to plant (>= 1).
        chain_lengths: one length for all chains or one per chain; each >= 2.
        noise_sigma: per-event Gaussian noise around the chain anchor.
        acceptance_profile: profile name for all chains or one per chain;
            any of "accepted", "neutral", "rejected".
        seed: RNG seed for anchors, noise, timestamps, and score draws.
        dim: embedding dimensionality.
        share_endpoints: when true, all chains share one extra earliest and
            one extra latest event (profile of the first chain), so every
            chain runs start to end.

    Raises:
        ValidationError: unknown profile name, a chain shorter than 2, or
            a non-positive chain count, all reported as "invalid profile".
    """
    if num_chains < 1:
        raise ValidationError(f"invalid profile: num_chains {num_chains} must be >= 1")
    lengths = (
        [int(chain_lengths)] * num_chains
        if isinstance(chain_lengths, int)
        else [int(x) for x in chain_lengths]
    )
    if len(lengths) != num_chains:
        raise ValidationError(
            f"invalid profile: {len(lengths)} lengths for {num_chains} chains"
        )
    if any(ln < 2 for ln in lengths):
        raise ValidationError(f"invalid profile: chain lengths {lengths} must all be >= 2")
    profiles = (
        [acceptance_profile] * num_chains
        if isinstance(acceptance_profile, str)
        else list(acceptance_profile)
    )
    if len(profiles) != num_chains:
        raise ValidationError(
            f"invalid profile: {len(profiles)} profiles for {num_chains} chains"
        )
    for name in profiles:
        if name not in PROFILES:
            raise ValidationError(f"invalid profile: {name!r} (known: {sorted(PROFILES)})")
    if noise_sigma < 0.0:
        raise ValidationError(f"invalid profile: noise_sigma {noise_sigma} must be >= 0")

    rng = np.random.default_rng(seed)
    anchors = rng.normal(size=(num_chains, dim))
    anchors /= np.linalg.norm(anchors, axis=1, keepdims=True)

    # (chain index or -1 for shared, position, id); round-robin interleave
    slots: list[tuple[int, int, str]] = []
    for pos in range(max(lengths)):
        for chain in range(num_chains):
            if pos < lengths[chain]:
                slots.append((chain, pos, f"c{chain}-e{pos:03d}"))
    if share_endpoints:
        slots = [(-1, 0, "shared-start")] + slots + [(-1, 1, "shared-end")]

    table = EmbeddingTable(dim=dim)
    subs: list[Submission] = []
    shared_direction = anchors.mean(axis=0)
    shared_norm = np.linalg.norm(shared_direction)
    if shared_norm > 0:
        shared_direction = shared_direction / shared_norm
    else:
        shared_direction = anchors[0]

    for idx, (chain, pos, event_id) in enumerate(slots):
        base = shared_direction if chain < 0 else anchors[chain]
        vec = base + rng.normal(scale=noise_sigma, size=dim) if noise_sigma > 0 else base.copy()
        table.add(event_id, vec)
        profile = profiles[0] if chain < 0 else profiles[chain]
        (score_lo, score_hi), (ur_lo, ur_hi) = PROFILES[profile]
        label = "shared" if chain < 0 else f"chain {chain}"
        subs.append(
            Submission(
                id=event_id,
                community=COMMUNITY,
                title=f"{label} event {pos}: {_words(rng, 4)}",
                body=_words(rng, 8),
                created_at=base_time + idx * step,
                score=int(rng.integers(score_lo, score_hi)),
                upvote_ratio=float(rng.uniform(ur_lo, ur_hi)),
            )
        )

    chains = []
    for chain in range(num_chains):
        ids = [f"c{chain}-e{pos:03d}" for pos in range(lengths[chain])]
        if share_endpoints:
            ids = ["shared-start"] + ids + ["shared-end"]
        chains.append(ids)

    return PlantedCorpus(
        corpus=Corpus.from_submissions(COMMUNITY, subs),
        table=table,
        chains=chains,
        profiles=profiles,
        noise_sigma=noise_sigma,
        seed=seed,
    )


def corpus_jsonl(planted: PlantedCorpus) -> str:
    """The planted corpus in the archive dump line format."""
    lines = []
    for sub in planted.corpus.submissions:
        lines.append(
            json.dumps(
                {
                    "id": sub.id,
                    "subreddit": sub.community,
                    "title": sub.title,
                    "selftext": sub.body,
                    "created_utc": sub.created_at,
                    "score": sub.score,
                    "upvote_ratio": sub.upvote_ratio,
                }
            )
        )
    return "\n".join(lines) + "\n"


def embeddings_jsonl(planted: PlantedCorpus) -> str:
    """The planted embeddings in the line-delimited import format."""
    from .embedding import write_embeddings_jsonl

    return write_embeddings_jsonl(planted.table)


@dataclass(frozen=True)
class RecoveryMetrics:
    """How well an extracted map matches the planted structure."""

    adjacency_recall: float
    adjacency_precision: float
    landmark_hit_rate: float
    main_route_purity: float


def evaluate_recovery(nmap: NarrativeMap, planted: PlantedCorpus) -> RecoveryMetrics:
    """Score a map against the chains planted in its corpus.

    A planted consecutive pair counts as recovered when the map has the
    direct edge or places both events on one storyline at most two
    positions apart.  A map edge counts as correct when both endpoints sit
    on one planted chain at most two positions apart.  Main-route purity
    is the largest fraction of route nodes drawn from a single chain.

    Raises:
        ValidationError: the map references ids outside the planted corpus
            ("foreign map").
    """
    planted_ids = set(planted.corpus.total_order)
    foreign = [nid for nid in nmap.node_ids() if nid not in planted_ids]
    if foreign:
        raise ValidationError(f"foreign map: unknown ids {foreign[:5]}")

    edge_set = {(e.source, e.target) for e in nmap.edges}
    line_pos: dict[str, tuple[int, int]] = {}
    for line in nmap.storylines:
        for pos, eid in enumerate(line.events):
            line_pos[eid] = (line.id, pos)

    def near_on_storyline(a: str, b: str) -> bool:
        pa, pb = line_pos.get(a), line_pos.get(b)
        return pa is not None and pb is not None and pa[0] == pb[0] and 0 < pb[1] - pa[1] <= 2

    planted_pairs = [pair for chain in planted.chains for pair in zip(chain, chain[1:])]
    recovered = sum(
        1 for a, b in planted_pairs if (a, b) in edge_set or near_on_storyline(a, b)
    )
    recall = recovered / len(planted_pairs) if planted_pairs else 0.0

    chain_pos = [
        {eid: pos for pos, eid in enumerate(chain)} for chain in planted.chains
    ]

    def on_chain(a: str, b: str) -> bool:
        return any(
            a in pos and b in pos and 0 < pos[b] - pos[a] <= 2 for pos in chain_pos
        )

    correct = sum(1 for a, b in edge_set if on_chain(a, b))
    precision = correct / len(edge_set) if edge_set else 0.0

    chain_members = [set(chain) for chain in planted.chains]
    on_any_chain = set().union(*chain_members) if chain_members else set()
    hits = sum(1 for eid in nmap.landmarks if eid in on_any_chain)
    hit_rate = hits / len(nmap.landmarks) if nmap.landmarks else 0.0

    route = nmap.main_route_ids()
    purity = (
        max(sum(1 for eid in route if eid in members) for members in chain_members)
        / len(route)
        if route and chain_members
        else 0.0
    )

    return RecoveryMetrics(
        adjacency_recall=recall,
        adjacency_precision=precision,
        landmark_hit_rate=hit_rate,
        main_route_purity=purity,
    )
