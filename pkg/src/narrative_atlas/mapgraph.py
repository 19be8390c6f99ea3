"""Turn a fractional solution into a navigable narrative map.

Rounding keeps confident edges (activation >= tau) and always secures a
start-to-end backbone: the bottleneck-best route whose length matches the
requested story size.  Nodes off every start-to-end path are pruned, and
an acceptance repair loop trims weakly scored side events while the map's
average percentile falls short.  The finished map carries a main route
(max-min strength, ties by product then id order), a storyline partition
(minimum path cover seeded with the main route), and representative
landmarks at the map's widest moment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .clustering import MembershipMatrix, edge_membership_vector
from .errors import InfeasibleError, ValidationError
from .lp import LpParams, LpSolution
from .strength import CandidateEdge, EventRecord, StrengthGraph

DEFAULT_TAU = 0.5
SCHEMA_VERSION = 1

ROUTE_BOTTLENECK = "bottleneck"
ROUTE_PRODUCT = "product"


# =============================================================================
# Intermediate skeleton
# =============================================================================


@dataclass
class MapSkeleton:
    """Rounded structure before routes and storylines are attached."""

    graph: StrengthGraph
    node_ids: list[str]  # temporal order
    edges: list[CandidateEdge]  # (source order, target order) order
    start: str
    end: str
    acceptance_shortfall: float = 0.0

    def record(self, event_id: str) -> EventRecord:
        return self.graph.by_id[event_id]

    def average_percentile(self) -> float:
        return sum(self.record(i).score_percentile for i in self.node_ids) / len(self.node_ids)


def _order_key(graph: StrengthGraph):
    return lambda eid: graph.by_id[eid].order


def _sorted_edges(graph: StrengthGraph, edges: set[tuple[str, str]]) -> list[CandidateEdge]:
    keys = sorted(edges, key=lambda k: (graph.by_id[k[0]].order, graph.by_id[k[1]].order))
    return [graph.strength[k] for k in keys]


def _reachable(edges: set[tuple[str, str]], sources: set[str], forward: bool) -> set[str]:
    adj: dict[str, list[str]] = {}
    for s, t in edges:
        a, b = (s, t) if forward else (t, s)
        adj.setdefault(a, []).append(b)
    seen = set(sources)
    frontier = list(sources)
    while frontier:
        node = frontier.pop()
        for nxt in adj.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def _on_path_nodes(edges: set[tuple[str, str]], start: str, end: str) -> set[str]:
    """Nodes lying on at least one start-to-end path."""
    fwd = _reachable(edges, {start}, forward=True)
    bwd = _reachable(edges, {end}, forward=False)
    return fwd & bwd


def _prune(edges: set[tuple[str, str]], start: str, end: str) -> set[tuple[str, str]]:
    keep = _on_path_nodes(edges, start, end)
    return {(s, t) for s, t in edges if s in keep and t in keep}


def _path_length_dp(graph: StrengthGraph, start: str, end: str) -> dict[int, float]:
    """Best bottleneck per exact path length from start to end.

    Returns {length: bottleneck}; lengths without any path are absent.
    """
    order = _order_key(graph)
    max_len = len(graph.events) - 1
    best: dict[str, dict[int, float]] = {start: {0: float("inf")}}
    for edge in sorted(graph.edges, key=lambda e: (order(e.source), order(e.target))):
        src = best.get(edge.source)
        if not src:
            continue
        dst = best.setdefault(edge.target, {})
        for length, bottleneck in src.items():
            if length + 1 > max_len:
                continue
            cand = min(bottleneck, edge.strength)
            if cand > dst.get(length + 1, float("-inf")):
                dst[length + 1] = cand
    return best.get(end, {})


def _bottleneck_path_of_length(graph: StrengthGraph, edges_order: list[CandidateEdge],
                               start: str, end: str, length: int) -> list[CandidateEdge]:
    """One bottleneck-best start-to-end path with exactly ``length`` edges."""
    best: dict[str, dict[int, tuple[float, CandidateEdge | None]]] = {
        start: {0: (float("inf"), None)}
    }
    for edge in edges_order:
        src = best.get(edge.source)
        if not src:
            continue
        dst = best.setdefault(edge.target, {})
        for ln, (bottleneck, _) in src.items():
            if ln + 1 > length:
                continue
            cand = min(bottleneck, edge.strength)
            if cand > dst.get(ln + 1, (float("-inf"), None))[0]:
                dst[ln + 1] = (cand, edge)
    path: list[CandidateEdge] = []
    node, ln = end, length
    while ln > 0:
        _, via = best[node][ln]
        assert via is not None
        path.append(via)
        node, ln = via.source, ln - 1
    path.reverse()
    return path


def _backbone(graph: StrengthGraph, k: int) -> list[CandidateEdge]:
    """Bottleneck-best start-to-end route sized toward K - 1 edges.

    Prefers the longest available exact length up to K - 1; when every
    start-to-end path is longer than that, takes the shortest one.
    """
    lengths = _path_length_dp(graph, graph.start_id, graph.end_id)
    if not lengths:
        raise InfeasibleError(
            f"no main route: no path from {graph.start_id!r} to {graph.end_id!r} "
            "in the candidate graph",
            constraint_class="structure",
        )
    under = [ln for ln in lengths if ln <= k - 1]
    length = max(under) if under else min(lengths)
    order = _order_key(graph)
    edges_order = sorted(graph.edges, key=lambda e: (order(e.source), order(e.target)))
    return _bottleneck_path_of_length(graph, edges_order, graph.start_id, graph.end_id, length)


def round_solution(
    solution: LpSolution,
    graph: StrengthGraph,
    tau: float = DEFAULT_TAU,
    minscore: float = 0.0,
) -> MapSkeleton:
    """Materialize a map skeleton from the fractional solution.

    Steps: (1) keep edges with activation >= tau; (2) union in a
    bottleneck backbone route of roughly K - 1 edges so the map always
    connects start to end even when the optimum spreads activation thinly;
    (3) prune nodes off every start-to-end path; (4) while the average
    score percentile is below ``minscore``, drop the lowest-percentile
    node that is not on the current main route and whose removal keeps
    start connected to end.  When only protected nodes remain the
    shortfall is recorded instead.

    Raises:
        InfeasibleError: no start-to-end route exists at all, or the
            solution carries no structure to round ("empty map").
    """
    if solution.status != "optimal":
        raise ValidationError("solve the model before rounding: solution is not optimal")
    if not 0.0 < tau <= 1.0:
        raise ValidationError(f"invalid tau: {tau} outside (0, 1]")

    kept: set[tuple[str, str]] = {
        key for key, val in solution.edge_values.items() if val >= tau
    }
    for edge in _backbone(graph, solution.params.k):
        kept.add((edge.source, edge.target))
    if not kept:
        raise InfeasibleError(
            f"empty map: no edge activation reached tau={tau}; lower tau or raise K",
            constraint_class="structure",
        )

    start, end = graph.start_id, graph.end_id
    kept = _prune(kept, start, end)
    nodes = sorted(_on_path_nodes(kept, start, end), key=_order_key(graph))

    shortfall = 0.0
    while True:
        avg = sum(graph.by_id[i].score_percentile for i in nodes) / len(nodes)
        if avg >= minscore - 1e-12:
            break
        route = set(main_route(graph, nodes, list(kept), start, end))
        removable = sorted(
            (i for i in nodes if i not in route),
            key=lambda i: (graph.by_id[i].score_percentile, i),
        )
        removed = False
        for victim in removable:
            trial = {(s, t) for s, t in kept if s != victim and t != victim}
            survivors = _on_path_nodes(trial, start, end)
            if end in _reachable(trial, {start}, forward=True) and survivors:
                kept = _prune(trial, start, end)
                nodes = sorted(_on_path_nodes(kept, start, end), key=_order_key(graph))
                removed = True
                break
        if not removed:
            shortfall = minscore - avg
            break

    return MapSkeleton(
        graph=graph,
        node_ids=nodes,
        edges=_sorted_edges(graph, kept),
        start=start,
        end=end,
        acceptance_shortfall=float(max(0.0, shortfall)),
    )


# =============================================================================
# Main route
# =============================================================================


def main_route(
    graph: StrengthGraph,
    node_ids: list[str],
    edge_keys: list[tuple[str, str]],
    start: str,
    end: str,
    criterion: str = ROUTE_BOTTLENECK,
) -> list[str]:
    """The start-to-end route the map presents as its main story.

    ``bottleneck`` (default) maximizes the minimum edge strength along the
    route; ties prefer the larger strength product, then the
    lexicographically smallest node id sequence.  ``product`` maximizes
    the strength product outright with the same lexicographic tie-break.

    Raises:
        InfeasibleError: ``end`` is unreachable from ``start``.
    """
    if criterion not in (ROUTE_BOTTLENECK, ROUTE_PRODUCT):
        raise ValidationError(f"invalid route criterion: {criterion!r}")
    nodes = set(node_ids)
    edges = [
        graph.strength[key]
        for key in edge_keys
        if key[0] in nodes and key[1] in nodes
    ]
    order = _order_key(graph)
    edges.sort(key=lambda e: (order(e.source), order(e.target)))

    if criterion == ROUTE_BOTTLENECK:
        bottleneck: dict[str, float] = {start: float("inf")}
        for e in edges:
            if e.source in bottleneck:
                cand = min(bottleneck[e.source], e.strength)
                if cand > bottleneck.get(e.target, float("-inf")):
                    bottleneck[e.target] = cand
        if end not in bottleneck:
            raise InfeasibleError(
                f"no main route: {end!r} unreachable from {start!r}",
                constraint_class="structure",
            )
        limit = bottleneck[end]
        edges = [e for e in edges if e.strength >= limit]

    # Backward product DP over the (possibly bottleneck-restricted) DAG.
    prod: dict[str, float] = {end: 1.0}
    for e in reversed(edges):
        if e.target in prod:
            cand = e.strength * prod[e.target]
            if cand > prod.get(e.source, float("-inf")):
                prod[e.source] = cand
    if start not in prod:
        raise InfeasibleError(
            f"no main route: {end!r} unreachable from {start!r}",
            constraint_class="structure",
        )

    # Forward walk: among product-optimal continuations take the smallest id.
    succ: dict[str, list[CandidateEdge]] = {}
    for e in edges:
        succ.setdefault(e.source, []).append(e)
    route = [start]
    node = start
    while node != end:
        choices = [
            e for e in succ.get(node, ())
            if e.target in prod and e.strength * prod[e.target] == prod[node]
        ]
        nxt = min(choices, key=lambda e: e.target)
        route.append(nxt.target)
        node = nxt.target
    return route


# =============================================================================
# Storylines
# =============================================================================


@dataclass
class Storyline:
    """A maximal path of the cover: one thread of the narrative."""

    id: int
    events: list[str]
    mean_strength: float
    mean_acceptance: float


def _cover_paths(
    nodes: list[str],
    edge_keys: list[tuple[str, str]],
    seed_pairs: list[tuple[str, str]] | None = None,
) -> list[list[str]]:
    """Vertex-disjoint path cover from a maximum matching on the out/in split.

    The cover size is ``len(nodes) - |maximum matching|`` and is therefore
    minimal.  ``seed_pairs`` pre-matches chosen links before augmentation;
    seeding never changes the cover size, only which minimum cover comes
    out.  Deterministic: nodes are processed in the given order and
    adjacency is scanned in that order too.
    """
    position = {n: i for i, n in enumerate(nodes)}
    adj: dict[str, list[str]] = {n: [] for n in nodes}
    for s, t in edge_keys:
        if s in position and t in position:
            adj[s].append(t)
    for n in nodes:
        adj[n].sort(key=lambda t: position[t])

    match_to: dict[str, str] = {}  # right node -> left node
    match_from: dict[str, str] = {}  # left node -> right node
    for s, t in seed_pairs or []:
        match_to[t] = s
        match_from[s] = t

    def augment(u: str, visited: set[str]) -> bool:
        for v in adj[u]:
            if v in visited:
                continue
            visited.add(v)
            if v not in match_to or augment(match_to[v], visited):
                match_to[v] = u
                match_from[u] = v
                return True
        return False

    for u in nodes:
        if u not in match_from:
            augment(u, set())

    heads = [n for n in nodes if n not in match_to]
    paths = []
    for head in heads:
        path = [head]
        while path[-1] in match_from:
            path.append(match_from[path[-1]])
        paths.append(path)
    return paths


def min_path_cover(node_ids: list[str], edge_keys: list[tuple[str, str]]) -> list[list[str]]:
    """Minimum vertex-disjoint path cover of a DAG via maximum matching.

    Each node appears in exactly one path; the number of paths equals
    ``len(nodes) - |maximum matching|`` on the out/in bipartite split.
    Deterministic: nodes are processed in the given order and adjacency is
    scanned in sorted order.
    """
    return _cover_paths(list(node_ids), edge_keys)


def decompose_storylines(skeleton: MapSkeleton, route: list[str]) -> list[Storyline]:
    """Partition map nodes into storylines via a minimum path cover.

    The matching is seeded with the main route's links, so the route
    survives intact as one storyline whenever a minimum cover allows it;
    when keeping it whole would force an extra path, the cover stays
    minimal and the route threads across storylines instead.  Storyline 0
    is the path beginning at the route's start; the rest are numbered by
    their first event's timestamp (id breaks ties).
    """
    graph = skeleton.graph
    paths = _cover_paths(
        list(skeleton.node_ids),
        [(e.source, e.target) for e in skeleton.edges],
        seed_pairs=list(zip(route, route[1:])),
    )
    lead = next(
        (p for p in paths if p[0] == route[0]),
        next(p for p in paths if route[0] in p),
    )
    side_paths = [p for p in paths if p is not lead]
    side_paths.sort(key=lambda p: (graph.by_id[p[0]].created_at, p[0]))

    def stats(path: list[str]) -> tuple[float, float]:
        pairs = [
            skeleton.graph.strength.get((a, b))
            for a, b in zip(path, path[1:])
        ]
        pairs = [p for p in pairs if p is not None]
        if not pairs:
            return 0.0, 0.0
        return (
            sum(p.strength for p in pairs) / len(pairs),
            sum(p.acceptance for p in pairs) / len(pairs),
        )

    storylines = []
    for idx, path in enumerate([lead] + side_paths):
        strength, acceptance = stats(path)
        storylines.append(
            Storyline(id=idx, events=list(path), mean_strength=strength, mean_acceptance=acceptance)
        )
    return storylines


# =============================================================================
# Landmarks and coverage
# =============================================================================


def representative_landmarks(skeleton: MapSkeleton, storylines: list[Storyline]) -> list[str]:
    """One representative event per storyline at the map's widest moment.

    The width of a timestamp is the number of storylines whose time span
    contains it.  At the earliest timestamp of maximum width, every
    spanning storyline contributes its event closest in time (ties prefer
    higher node acceptance ``percentile * upvote_ratio``, then smaller
    id).  Linear maps (fewer than two storylines) have no landmarks.
    """
    if len(storylines) < 2:
        return []
    graph = skeleton.graph
    spans = []
    for line in storylines:
        times = [graph.by_id[e].created_at for e in line.events]
        spans.append((min(times), max(times)))

    def width(t: int) -> int:
        return sum(1 for lo, hi in spans if lo <= t <= hi)

    candidates = sorted({lo for lo, _ in spans})
    best_t = candidates[0]
    best_w = width(best_t)
    for t in candidates[1:]:
        w = width(t)
        if w > best_w:
            best_t, best_w = t, w

    landmarks = []
    for line, (lo, hi) in zip(storylines, spans):
        if not lo <= best_t <= hi:
            continue
        def rank(eid: str) -> tuple[float, float, str]:
            rec = graph.by_id[eid]
            acceptance = rec.score_percentile * rec.upvote_ratio
            return (abs(rec.created_at - best_t), -acceptance, eid)
        landmarks.append(min(line.events, key=rank))
    return landmarks


def coverage_report(
    skeleton: MapSkeleton,
    memberships: MembershipMatrix,
    mincover: float,
) -> tuple[list[float], float, bool]:
    """Realized topical coverage of the rounded map.

    Each cluster's realized presence is ``min(1, sum of kept-edge
    memberships)``; reported alongside the average and whether it clears
    ``mincover``.
    """
    totals = [0.0] * memberships.num_clusters
    for e in skeleton.edges:
        vec = edge_membership_vector(
            memberships.require(e.source), memberships.require(e.target)
        )
        for c in range(memberships.num_clusters):
            totals[c] += float(vec[c])
    realized = [min(1.0, t) for t in totals]
    average = sum(realized) / len(realized) if realized else 0.0
    return realized, average, average >= mincover - 1e-12


# =============================================================================
# Finished map
# =============================================================================


@dataclass
class MapNode:
    id: str
    title: str
    created_at: int
    score: int
    upvote_ratio: float
    score_percentile: float
    storyline: int
    main_route: bool
    landmark: bool


@dataclass
class MapEdge:
    source: str
    target: str
    coherence: float
    acceptance: float
    strength: float
    main_route: bool


@dataclass
class Diagnostics:
    avg_score_percentile: float
    cluster_coverage: list[float]
    avg_cluster_coverage: float
    coverage_satisfied: bool
    lp_objective: float
    rounded_min_strength: float
    acceptance_shortfall: float
    lp_variables: int
    lp_constraints: int


@dataclass
class NarrativeMap:
    """The finished, navigable artifact."""

    community: str
    nodes: list[MapNode]
    edges: list[MapEdge]
    storylines: list[Storyline]
    main_route: list[str]
    landmarks: list[str]
    diagnostics: Diagnostics
    params: dict
    fingerprint: dict = field(default_factory=dict)

    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def main_route_ids(self) -> list[str]:
        return list(self.main_route)


def compose_map(
    skeleton: MapSkeleton,
    solution: LpSolution,
    memberships: MembershipMatrix,
    params: dict,
    fingerprint: dict | None = None,
    route_criterion: str = ROUTE_BOTTLENECK,
) -> NarrativeMap:
    """Attach route, storylines, landmarks, and diagnostics to a skeleton."""
    graph = skeleton.graph
    edge_keys = [(e.source, e.target) for e in skeleton.edges]
    route = main_route(
        graph, skeleton.node_ids, edge_keys, skeleton.start, skeleton.end, route_criterion
    )
    storylines = decompose_storylines(skeleton, route)
    landmarks = representative_landmarks(skeleton, storylines)
    coverage, avg_cover, cover_ok = coverage_report(
        skeleton, memberships, params.get("mincover", 0.0)
    )

    line_of = {}
    for line in storylines:
        for eid in line.events:
            line_of[eid] = line.id
    route_nodes = set(route)
    route_pairs = set(zip(route, route[1:]))
    landmark_set = set(landmarks)

    nodes = [
        MapNode(
            id=rec.id,
            title=rec.title,
            created_at=rec.created_at,
            score=rec.score,
            upvote_ratio=rec.upvote_ratio,
            score_percentile=rec.score_percentile,
            storyline=line_of[rec.id],
            main_route=rec.id in route_nodes,
            landmark=rec.id in landmark_set,
        )
        for rec in (skeleton.record(i) for i in skeleton.node_ids)
    ]
    edges = [
        MapEdge(
            source=e.source,
            target=e.target,
            coherence=e.coherence,
            acceptance=e.acceptance,
            strength=e.strength,
            main_route=(e.source, e.target) in route_pairs,
        )
        for e in skeleton.edges
    ]
    diagnostics = Diagnostics(
        avg_score_percentile=skeleton.average_percentile(),
        cluster_coverage=coverage,
        avg_cluster_coverage=avg_cover,
        coverage_satisfied=cover_ok,
        lp_objective=float(solution.objective or 0.0),
        rounded_min_strength=min(e.strength for e in skeleton.edges),
        acceptance_shortfall=skeleton.acceptance_shortfall,
        lp_variables=params.get("lp_variables", 0),
        lp_constraints=params.get("lp_constraints", 0),
    )
    doc_params = {key: val for key, val in params.items() if not key.startswith("lp_")}
    return NarrativeMap(
        community=graph.community,
        nodes=nodes,
        edges=edges,
        storylines=storylines,
        main_route=list(route),
        landmarks=landmarks,
        diagnostics=diagnostics,
        params=doc_params,
        fingerprint=fingerprint or {},
    )


# =============================================================================
# Exports
# =============================================================================


def to_document(nmap: NarrativeMap) -> dict:
    """The map as a schema-versioned plain dict, ready for serialization."""
    return {
        "schema_version": SCHEMA_VERSION,
        "community": nmap.community,
        "params": nmap.params,
        "fingerprint": nmap.fingerprint,
        "nodes": [
            {
                "id": n.id,
                "title": n.title,
                "created_at": n.created_at,
                "score": n.score,
                "upvote_ratio": n.upvote_ratio,
                "score_percentile": n.score_percentile,
                "storyline": n.storyline,
                "main_route": n.main_route,
                "landmark": n.landmark,
            }
            for n in nmap.nodes
        ],
        "edges": [
            {
                "source": e.source,
                "target": e.target,
                "coherence": e.coherence,
                "acceptance": e.acceptance,
                "strength": e.strength,
                "main_route": e.main_route,
            }
            for e in nmap.edges
        ],
        "storylines": [
            {
                "id": s.id,
                "events": s.events,
                "mean_strength": s.mean_strength,
                "mean_acceptance": s.mean_acceptance,
            }
            for s in nmap.storylines
        ],
        "main_route": list(nmap.main_route),
        "landmarks": nmap.landmarks,
        "diagnostics": {
            "avg_score_percentile": nmap.diagnostics.avg_score_percentile,
            "cluster_coverage": nmap.diagnostics.cluster_coverage,
            "avg_cluster_coverage": nmap.diagnostics.avg_cluster_coverage,
            "coverage_satisfied": nmap.diagnostics.coverage_satisfied,
            "lp_objective": nmap.diagnostics.lp_objective,
            "rounded_min_strength": nmap.diagnostics.rounded_min_strength,
            "acceptance_shortfall": nmap.diagnostics.acceptance_shortfall,
            "lp_variables": nmap.diagnostics.lp_variables,
            "lp_constraints": nmap.diagnostics.lp_constraints,
        },
    }


def canonical_json(doc: dict) -> str:
    """Key-sorted, separator-normalized JSON; byte-identical across runs."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def dot_from_document(doc: dict) -> str:
    """Graphviz DOT rendering of an exported map document.

    Main-route edges are dashed; representative landmarks get doubled
    borders (peripheries=2).  Node labels carry the title with the upvote
    ratio and score percentile; edge labels carry coherence.
    """
    lines = [
        "digraph narrative_map {",
        "  rankdir=TB;",
        '  node [shape=box, style=rounded];',
    ]
    for n in doc["nodes"]:
        label = _dot_escape(
            f"{n['title']}\n(ur={n['upvote_ratio']:.2f}, sp={n['score_percentile']:.2f})"
        )
        attrs = [f'label="{label}"']
        if n["landmark"]:
            attrs.append("peripheries=2")
        lines.append(f'  "{_dot_escape(n["id"])}" [{", ".join(attrs)}];')
    for e in doc["edges"]:
        attrs = [f'label="{e["coherence"]:.2f}"']
        if e["main_route"]:
            attrs.append("style=dashed")
        lines.append(
            f'  "{_dot_escape(e["source"])}" -> "{_dot_escape(e["target"])}" [{", ".join(attrs)}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_dot(nmap: NarrativeMap) -> str:
    """Graphviz DOT rendering of a map; see :func:`dot_from_document`."""
    return dot_from_document(to_document(nmap))
