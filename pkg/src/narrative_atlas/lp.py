"""Linear program that selects the accepted narrative structure.

The program maximizes ``minedge``, the weakest connection strength among
active edges, over variables in [0, 1]:

* ``minedge <= 1 - edge_ij + strength_ij * edge_ij`` for every candidate
  edge (the bound is the edge's strength at full activation and relaxes
  toward 1 as the edge deactivates);
* an active edge activates both endpoints, and every active event needs
  active incoming mass (except the earliest event) and outgoing mass
  (except the latest);
* the earliest and latest events are pinned active;
* total edge activation is at least ``K - 1``;
* average soft cluster coverage is at least ``mincover``;
* the activation-weighted mean score percentile is at least ``minscore``.

The solver returns the optimal fractional solution; no integrality is
imposed anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from .clustering import MembershipMatrix, edge_membership_vector
from .errors import SolverInconsistencyError, ValidationError
from .strength import StrengthGraph

FEASIBILITY_TOLERANCE = 1e-6

# Constraint families used for infeasibility diagnosis: structural rows keep
# the map a start-to-end story, coverage rows enforce topical breadth,
# acceptance rows enforce community approval.
STRUCTURE = "structure"
COVERAGE = "coverage"
ACCEPTANCE = "acceptance"
EDGE_BOUND = "edge-bound"


@dataclass(frozen=True)
class LpParams:
    """User-facing knobs of the extraction program."""

    k: int
    mincover: float
    minscore: float

    def validate(self) -> None:
        if self.k < 2:
            raise ValidationError(f"invalid K: {self.k} (need K >= 2)")
        if not 0.0 <= self.mincover <= 1.0:
            raise ValidationError(f"invalid mincover: {self.mincover} outside [0, 1]")
        if not 0.0 <= self.minscore <= 1.0:
            raise ValidationError(f"invalid minscore: {self.minscore} outside [0, 1]")


@dataclass(frozen=True)
class Constraint:
    """One row ``sum(coef * var) <= rhs`` with a family tag for diagnosis."""

    label: str
    family: str
    coeffs: tuple[tuple[int, float], ...]
    rhs: float


@dataclass
class LpModel:
    """Assembled program: variables, bounds, rows, and input echoes."""

    var_names: list[str]
    bounds: list[tuple[float, float]]
    constraints: list[Constraint]
    params: LpParams
    num_clusters: int
    event_ids: list[str]
    edge_keys: list[tuple[str, str]]
    percentiles: dict[str, float]
    start_id: str
    end_id: str
    edge_strengths: dict[tuple[str, str], float] = field(default_factory=dict)

    @property
    def num_variables(self) -> int:
        return len(self.var_names)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def var_index(self, name: str) -> int:
        return self._index[name]

    def __post_init__(self) -> None:
        self._index = {name: i for i, name in enumerate(self.var_names)}


@dataclass
class LpSolution:
    """Solver output: status, objective, and per-variable values."""

    status: str  # "optimal" | "infeasible"
    objective: float | None
    event_values: dict[str, float]
    edge_values: dict[tuple[str, str], float]
    cluster_values: list[float]
    params: LpParams
    infeasible_class: str | None = None
    x: np.ndarray | None = None


def build_model(
    graph: StrengthGraph,
    memberships: MembershipMatrix,
    k: int,
    mincover: float,
    minscore: float,
) -> LpModel:
    """Assemble the extraction program for one strength graph.

    Raises:
        ValidationError: ``K < 2`` ("invalid K") or a graph whose earliest
            and latest events coincide ("insufficient events").
    """
    params = LpParams(k=k, mincover=mincover, minscore=minscore)
    params.validate()
    if len(graph.events) < 2 or graph.start_id == graph.end_id:
        raise ValidationError("insufficient events: need a distinct start and end event")

    event_ids = graph.event_ids()
    edge_keys = [(e.source, e.target) for e in graph.edges]
    num_clusters = memberships.num_clusters

    var_names = ["minedge"]
    var_names += [f"event[{i}]" for i in event_ids]
    var_names += [f"edge[{s}->{t}]" for s, t in edge_keys]
    var_names += [f"cluster[{c}]" for c in range(num_clusters)]

    v_minedge = 0
    v_event = {eid: 1 + i for i, eid in enumerate(event_ids)}
    edge_base = 1 + len(event_ids)
    v_edge = {key: edge_base + i for i, key in enumerate(edge_keys)}
    cluster_base = edge_base + len(edge_keys)

    bounds = [(0.0, 1.0)] * len(var_names)
    # endpoint pinning: the earliest and latest events are part of any story
    bounds[v_event[graph.start_id]] = (1.0, 1.0)
    bounds[v_event[graph.end_id]] = (1.0, 1.0)

    cons: list[Constraint] = []

    # weakest-link bound per candidate edge
    for e in graph.edges:
        idx = v_edge[(e.source, e.target)]
        cons.append(
            Constraint(
                label=f"minedge<=1-(1-s)*edge[{e.source}->{e.target}]",
                family=EDGE_BOUND,
                coeffs=((v_minedge, 1.0), (idx, 1.0 - e.strength)),
                rhs=1.0,
            )
        )

    # an active edge activates both endpoints
    for e in graph.edges:
        idx = v_edge[(e.source, e.target)]
        for eid in (e.source, e.target):
            cons.append(
                Constraint(
                    label=f"edge[{e.source}->{e.target}]<=event[{eid}]",
                    family=STRUCTURE,
                    coeffs=((idx, 1.0), (v_event[eid], -1.0)),
                    rhs=0.0,
                )
            )

    # connectivity: active events need incoming/outgoing activation
    incoming: dict[str, list[int]] = {eid: [] for eid in event_ids}
    outgoing: dict[str, list[int]] = {eid: [] for eid in event_ids}
    for e in graph.edges:
        idx = v_edge[(e.source, e.target)]
        outgoing[e.source].append(idx)
        incoming[e.target].append(idx)
    for eid in event_ids:
        if eid != graph.start_id:
            coeffs = [(v_event[eid], 1.0)] + [(i, -1.0) for i in incoming[eid]]
            cons.append(
                Constraint(
                    label=f"event[{eid}]<=sum(in)",
                    family=STRUCTURE,
                    coeffs=tuple(coeffs),
                    rhs=0.0,
                )
            )
        if eid != graph.end_id:
            coeffs = [(v_event[eid], 1.0)] + [(i, -1.0) for i in outgoing[eid]]
            cons.append(
                Constraint(
                    label=f"event[{eid}]<=sum(out)",
                    family=STRUCTURE,
                    coeffs=tuple(coeffs),
                    rhs=0.0,
                )
            )

    # minimum story size: total activation covers at least K - 1 edges
    cons.append(
        Constraint(
            label=f"sum(edge)>={k - 1}",
            family=STRUCTURE,
            coeffs=tuple((v_edge[key], -1.0) for key in edge_keys),
            rhs=-float(k - 1),
        )
    )

    # topical coverage: each cluster's presence is capped by the activation-
    # weighted edge membership mass, and the average presence is bounded below
    edge_members = np.stack(
        [
            edge_membership_vector(memberships.require(s), memberships.require(t))
            for s, t in edge_keys
        ]
    ) if edge_keys else np.zeros((0, num_clusters))
    for c in range(num_clusters):
        coeffs = [(cluster_base + c, 1.0)]
        coeffs += [
            (v_edge[key], -float(edge_members[i, c]))
            for i, key in enumerate(edge_keys)
            if edge_members[i, c] > 0.0
        ]
        cons.append(
            Constraint(
                label=f"cluster[{c}]<=membership-mass",
                family=COVERAGE,
                coeffs=tuple(coeffs),
                rhs=0.0,
            )
        )
    cons.append(
        Constraint(
            label=f"avg(cluster)>={mincover}",
            family=COVERAGE,
            coeffs=tuple((cluster_base + c, -1.0) for c in range(num_clusters)),
            rhs=-float(mincover) * num_clusters,
        )
    )

    # acceptance: activation-weighted mean percentile at least minscore
    percentiles = {e.id: e.score_percentile for e in graph.events}
    cons.append(
        Constraint(
            label=f"weighted-percentile>={minscore}",
            family=ACCEPTANCE,
            coeffs=tuple(
                (v_event[eid], -(percentiles[eid] - minscore)) for eid in event_ids
            ),
            rhs=0.0,
        )
    )

    return LpModel(
        var_names=var_names,
        bounds=bounds,
        constraints=cons,
        params=params,
        num_clusters=num_clusters,
        event_ids=event_ids,
        edge_keys=edge_keys,
        percentiles=percentiles,
        start_id=graph.start_id,
        end_id=graph.end_id,
        edge_strengths={(e.source, e.target): e.strength for e in graph.edges},
    )


def _assemble(model: LpModel, skip_families: frozenset[str]) -> tuple[csr_matrix, np.ndarray]:
    rows, cols, vals, rhs = [], [], [], []
    r = 0
    for con in model.constraints:
        if con.family in skip_families:
            continue
        for idx, coef in con.coeffs:
            rows.append(r)
            cols.append(idx)
            vals.append(coef)
        rhs.append(con.rhs)
        r += 1
    a_ub = csr_matrix((vals, (rows, cols)), shape=(r, model.num_variables))
    return a_ub, np.array(rhs)


def _run(model: LpModel, skip_families: frozenset[str] = frozenset()):
    c = np.zeros(model.num_variables)
    c[0] = -1.0  # maximize minedge
    a_ub, b_ub = _assemble(model, skip_families)
    return linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=model.bounds, method="highs")


def solve(model: LpModel) -> LpSolution:
    """Solve the program exactly and deterministically.

    On infeasibility the constraint families are relaxed in turn
    (acceptance first, then coverage) to name the first family whose
    removal restores feasibility; everything else is blamed on structure.
    """
    result = _run(model)
    if result.status == 2:  # infeasible
        family = STRUCTURE
        if _run(model, frozenset({ACCEPTANCE})).status != 2:
            family = ACCEPTANCE
        elif _run(model, frozenset({ACCEPTANCE, COVERAGE})).status != 2:
            family = COVERAGE
        return LpSolution(
            status="infeasible",
            objective=None,
            event_values={},
            edge_values={},
            cluster_values=[],
            params=model.params,
            infeasible_class=family,
        )
    if result.status != 0:
        raise SolverInconsistencyError(
            f"solver inconsistency: unexpected solver status {result.status} ({result.message})"
        )

    x = result.x
    n_events = len(model.event_ids)
    edge_base = 1 + n_events
    cluster_base = edge_base + len(model.edge_keys)
    return LpSolution(
        status="optimal",
        objective=float(-result.fun),
        event_values={eid: float(x[1 + i]) for i, eid in enumerate(model.event_ids)},
        edge_values={
            key: float(x[edge_base + i]) for i, key in enumerate(model.edge_keys)
        },
        cluster_values=[float(x[cluster_base + c]) for c in range(model.num_clusters)],
        params=model.params,
        x=x,
    )


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of independently re-checking a solution against its model."""

    applicable: bool
    max_violation: float
    worst_constraint: str | None


def verify_solution(model: LpModel, solution: LpSolution) -> VerificationReport:
    """Re-evaluate every row and bound of ``model`` at ``solution``.

    The check walks the symbolic constraint list directly rather than any
    matrix the solver consumed.  Violations above the feasibility
    tolerance raise; infeasible solutions yield a non-applicable report.

    Raises:
        SolverInconsistencyError: some row or bound is violated by more
            than 1e-6.
    """
    if solution.status != "optimal" or solution.x is None:
        return VerificationReport(applicable=False, max_violation=0.0, worst_constraint=None)
    x = solution.x
    worst = 0.0
    worst_label: str | None = None
    for con in model.constraints:
        lhs = sum(coef * x[idx] for idx, coef in con.coeffs)
        violation = lhs - con.rhs
        if violation > worst:
            worst = violation
            worst_label = con.label
    for idx, (lo, hi) in enumerate(model.bounds):
        violation = max(lo - x[idx], x[idx] - hi)
        if violation > worst:
            worst = violation
            worst_label = f"bound[{model.var_names[idx]}]"
    if worst > FEASIBILITY_TOLERANCE:
        raise SolverInconsistencyError(
            f"solver inconsistency: {worst_label} violated by {worst:.3e}"
        )
    return VerificationReport(applicable=True, max_violation=float(worst), worst_constraint=worst_label)


def write_lp_text(model: LpModel) -> str:
    """Human-readable dump of the whole program."""
    lines = ["maximize minedge", "subject to"]
    for con in model.constraints:
        terms = " + ".join(
            f"{coef:+.6g}*{model.var_names[idx]}" for idx, coef in con.coeffs
        )
        lines.append(f"  [{con.family}] {terms} <= {con.rhs:.6g}    ({con.label})")
    lines.append("bounds")
    for name, (lo, hi) in zip(model.var_names, model.bounds):
        lines.append(f"  {lo:.6g} <= {name} <= {hi:.6g}")
    return "\n".join(lines) + "\n"
