"""End-to-end extraction: corpus slice -> clusters -> program -> map.

The pipeline wires the stages together, labels propagated errors with the
stage they came from, and stamps the finished map with fingerprints of
everything that influenced it, so identical inputs yield byte-identical
exports.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, replace

from .clustering import DEFAULT_TEMPERATURE, auto_num_clusters, soft_cluster
from .corpus import Corpus, filter_corpus
from .embedding import EmbeddingTable
from .errors import InfeasibleError, NarrativeAtlasError, ValidationError
from .lp import build_model, solve, verify_solution
from .mapgraph import (
    DEFAULT_TAU,
    NarrativeMap,
    ROUTE_BOTTLENECK,
    ROUTE_PRODUCT,
    compose_map,
    round_solution,
)
from .strength import DEFAULT_MAX_SUCCESSORS, build_strength_graph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtractionConfig:
    """Every knob of one extraction run; defaults target a story of about
    8 events, half the clusters covered, and the 85th acceptance percentile."""

    community: str | None = None
    keyword: str | None = None
    window: tuple[int, int] | None = None
    k: int = 8
    mincover: float = 0.5
    minscore: float = 0.85
    num_clusters: int | None = None  # None -> ceil(sqrt(n/2)) clamped to [2, 12]
    seed: int = 0
    temperature: float = DEFAULT_TEMPERATURE
    max_successors: int | None = DEFAULT_MAX_SUCCESSORS
    tau: float = DEFAULT_TAU
    route_criterion: str = ROUTE_BOTTLENECK

    def validate(self) -> None:
        if self.k < 2:
            raise ValidationError(f"invalid K: {self.k} (need K >= 2)")
        if not 0.0 <= self.mincover <= 1.0:
            raise ValidationError(f"invalid mincover: {self.mincover} outside [0, 1]")
        if not 0.0 <= self.minscore <= 1.0:
            raise ValidationError(f"invalid minscore: {self.minscore} outside [0, 1]")
        if self.num_clusters is not None and self.num_clusters < 2:
            raise ValidationError(f"invalid cluster count: {self.num_clusters}")
        if self.temperature <= 0.0:
            raise ValidationError(f"invalid temperature: {self.temperature} must be > 0")
        if self.max_successors is not None and self.max_successors < 1:
            raise ValidationError(f"invalid max_successors: {self.max_successors}")
        if not 0.0 < self.tau <= 1.0:
            raise ValidationError(f"invalid tau: {self.tau} outside (0, 1]")
        if self.route_criterion not in (ROUTE_BOTTLENECK, ROUTE_PRODUCT):
            raise ValidationError(f"invalid route criterion: {self.route_criterion!r}")
        if self.window is not None and self.window[0] > self.window[1]:
            raise ValidationError(f"invalid window: {self.window} is reversed")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["window"] = list(self.window) if self.window is not None else None
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExtractionConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"invalid config: unknown keys {sorted(unknown)}")
        payload = dict(data)
        if payload.get("window") is not None:
            window = payload["window"]
            if not isinstance(window, (list, tuple)) or len(window) != 2:
                raise ValidationError(f"invalid window: {window!r} must be [start, end]")
            payload["window"] = (int(window[0]), int(window[1]))
        cfg = cls(**payload)
        cfg.validate()
        return cfg

    def fingerprint(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()[:16]


def corpus_content_hash(corpus: Corpus) -> str:
    digest = hashlib.sha256()
    for sub in corpus.submissions:
        digest.update(
            json.dumps(
                [sub.id, sub.title, sub.body, sub.created_at, sub.score, sub.upvote_ratio],
                sort_keys=True,
            ).encode()
        )
    return digest.hexdigest()[:16]


@contextmanager
def _stage(name: str):
    """Label any deliberate error with the pipeline stage it escaped from."""
    try:
        yield
    except NarrativeAtlasError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def _select_corpus(corpora: Corpus | dict[str, Corpus], config: ExtractionConfig) -> Corpus:
    if isinstance(corpora, Corpus):
        if config.community is not None and config.community != corpora.community:
            raise ValidationError(
                f"unknown community: {config.community!r} (corpus is {corpora.community!r})"
            )
        return corpora
    if config.community is not None:
        if config.community not in corpora:
            raise ValidationError(
                f"unknown community: {config.community!r} (have {sorted(corpora)})"
            )
        return corpora[config.community]
    if len(corpora) == 1:
        return next(iter(corpora.values()))
    raise ValidationError(
        f"unknown community: specify one of {sorted(corpora)}"
    )


def extract(
    corpora: Corpus | dict[str, Corpus],
    table: EmbeddingTable,
    config: ExtractionConfig,
) -> NarrativeMap:
    """Run the full extraction and return the finished narrative map.

    Raises:
        ValidationError: bad configuration, unknown community, events
            without embeddings (all missing ids listed), or data shape
            problems from any stage.
        InfeasibleError: the program admits no solution; the message names
            the violated constraint family, e.g. "acceptance constraint
            infeasible".
        SolverInconsistencyError: the solution failed re-verification.
    """
    started = time.perf_counter()
    config.validate()

    with _stage("corpus"):
        corpus = _select_corpus(corpora, config)
        if config.keyword is not None or config.window is not None:
            corpus = filter_corpus(corpus, config.keyword, config.window)

    with _stage("embedding"):
        missing = table.missing(corpus.total_order)
        if missing:
            raise ValidationError(
                f"unembedded event: {len(missing)} ids missing embeddings: {missing}"
            )

    with _stage("clustering"):
        num_clusters = (
            config.num_clusters
            if config.num_clusters is not None
            else auto_num_clusters(len(corpus))
        )
        memberships = soft_cluster(
            table, corpus.ids(), num_clusters, config.seed, config.temperature
        )

    with _stage("strength"):
        graph = build_strength_graph(corpus, table, memberships, config.max_successors)

    with _stage("lp"):
        model = build_model(graph, memberships, config.k, config.mincover, config.minscore)
        solution = solve(model)
        if solution.status == "infeasible":
            raise InfeasibleError(
                f"{solution.infeasible_class} constraint infeasible: no narrative map "
                f"satisfies the requested parameters",
                constraint_class=solution.infeasible_class or "structure",
            )
        verify_solution(model, solution)

    with _stage("rounding"):
        skeleton = round_solution(solution, graph, config.tau, config.minscore)

    with _stage("mapping"):
        effective = replace(config, num_clusters=num_clusters)
        params = effective.to_dict()
        params["lp_variables"] = model.num_variables
        params["lp_constraints"] = model.num_constraints
        nmap = compose_map(
            skeleton,
            solution,
            memberships,
            params,
            fingerprint={
                "corpus": corpus_content_hash(corpus),
                "embeddings": table.content_hash(),
                "config": effective.fingerprint(),
            },
            route_criterion=config.route_criterion,
        )

    elapsed_ms = (time.perf_counter() - started) * 1000.0
    logger.info(
        "extracted map: community=%s nodes=%d edges=%d lp=%dx%d wall=%.1fms",
        nmap.community,
        len(nmap.nodes),
        len(nmap.edges),
        model.num_variables,
        model.num_constraints,
        elapsed_ms,
    )
    return nmap
