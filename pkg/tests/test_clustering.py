"""Soft clustering, divergence, and edge membership behavior."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narrative_atlas.clustering import (
    MembershipMatrix,
    auto_num_clusters,
    cluster_similarity,
    cluster_similarity_row,
    edge_membership,
    edge_membership_vector,
    jensen_shannon_divergence,
    soft_cluster,
)
from narrative_atlas.embedding import EmbeddingTable
from narrative_atlas.errors import ValidationError

from .oracles import jsd_reference

distributions = st.integers(min_value=2, max_value=6).flatmap(
    lambda n: st.lists(
        st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=n, max_size=n
    )
).map(lambda w: None if sum(w) == 0 else [x / sum(w) for x in w]).filter(
    lambda d: d is not None
)


class TestAutoNumClusters:
    @pytest.mark.parametrize(
        "n,expected",
        [(2, 2), (8, 2), (9, 3), (50, 5), (200, 10), (288, 12), (10_000, 12)],
    )
    def test_square_root_rule_with_clamps(self, n, expected):
        assert auto_num_clusters(n) == expected

    def test_too_few_events(self):
        with pytest.raises(ValidationError, match="insufficient events"):
            auto_num_clusters(1)


class TestJensenShannon:
    def test_uniform_vs_point_mass(self):
        assert jensen_shannon_divergence([0.5, 0.5], [1.0, 0.0]) == pytest.approx(
            0.31127812445913283
        )

    def test_identical_distributions_are_zero(self):
        assert jensen_shannon_divergence([0.2, 0.3, 0.5], [0.2, 0.3, 0.5]) == 0.0

    def test_disjoint_support_is_one(self):
        assert jensen_shannon_divergence([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)

    @given(distributions, distributions)
    @settings(deadline=None, max_examples=80)
    def test_symmetry_range_and_reference(self, p, q):
        if len(p) != len(q):
            return
        d = jensen_shannon_divergence(p, q)
        assert 0.0 <= d <= 1.0 + 1e-12
        assert d == pytest.approx(jensen_shannon_divergence(q, p))
        assert d == pytest.approx(jsd_reference(p, q), abs=1e-12)

    @pytest.mark.parametrize(
        "p,q",
        [
            ([0.5, 0.6], [0.5, 0.5]),  # does not sum to 1
            ([-0.1, 1.1], [0.5, 0.5]),  # negative mass
            ([0.5, 0.5], [1.0, 0.0, 0.0]),  # length mismatch
        ],
    )
    def test_invalid_distributions_rejected(self, p, q):
        with pytest.raises(ValidationError, match="invalid distribution"):
            jensen_shannon_divergence(p, q)


class TestClusterSimilarity:
    def test_complement_of_divergence(self):
        assert cluster_similarity([0.5, 0.5], [1.0, 0.0]) == pytest.approx(
            0.6887218755408672
        )

    def test_row_form_matches_scalar_form(self):
        rng = np.random.default_rng(1)
        rows = rng.dirichlet(np.ones(4), size=5)
        sims = cluster_similarity_row(rows[0], rows)
        for i in range(5):
            assert sims[i] == pytest.approx(cluster_similarity(rows[0], rows[i]))
        assert sims[0] == pytest.approx(1.0)


class TestEdgeMembership:
    def test_geometric_mean_example(self):
        assert edge_membership([0.25, 0.75], [0.64, 0.36], 0) == pytest.approx(0.4)

    def test_zero_mass_on_either_side_kills_the_edge(self):
        assert edge_membership([0.0, 1.0], [0.5, 0.5], 0) == 0.0

    def test_invalid_cluster_index(self):
        with pytest.raises(ValidationError, match="invalid cluster index"):
            edge_membership([0.5, 0.5], [0.5, 0.5], 2)

    def test_vector_form_matches_scalar_form(self):
        p = [0.25, 0.75]
        q = [0.64, 0.36]
        vec = edge_membership_vector(p, q)
        assert vec == pytest.approx([edge_membership(p, q, 0), edge_membership(p, q, 1)])

    @given(distributions, distributions)
    @settings(deadline=None, max_examples=80)
    def test_total_edge_mass_never_exceeds_one(self, p, q):
        if len(p) != len(q):
            return
        total = float(edge_membership_vector(p, q).sum())
        assert total <= 1.0 + 1e-9
        if p == q:
            assert total == pytest.approx(1.0)


def _two_blob_table(n_per_blob: int = 6, dim: int = 8, seed: int = 0):
    """Two tight antipodal-ish groups of unit vectors plus their ids."""
    rng = np.random.default_rng(seed)
    table = EmbeddingTable(dim=dim)
    anchors = [np.eye(dim)[0], np.eye(dim)[1]]
    ids: list[str] = []
    for b, anchor in enumerate(anchors):
        for i in range(n_per_blob):
            noisy = anchor + rng.normal(scale=0.05, size=dim)
            sid = f"b{b}-{i}"
            table.add(sid, noisy)
            ids.append(sid)
    return table, ids


class TestSoftCluster:
    def test_memberships_are_distributions(self):
        table, ids = _two_blob_table()
        result = soft_cluster(table, ids, num_clusters=2, seed=0)
        for sid in ids:
            dist = result.require(sid)
            assert dist.shape == (2,)
            assert float(dist.sum()) == pytest.approx(1.0)
            assert np.all(dist >= 0)

    def test_recovers_planted_blobs(self):
        table, ids = _two_blob_table()
        result = soft_cluster(table, ids, num_clusters=2, seed=0)
        lead = {sid: int(np.argmax(result.require(sid))) for sid in ids}
        blob0 = {lead[sid] for sid in ids if sid.startswith("b0")}
        blob1 = {lead[sid] for sid in ids if sid.startswith("b1")}
        assert len(blob0) == 1 and len(blob1) == 1 and blob0 != blob1

    def test_deterministic_for_fixed_seed(self):
        table, ids = _two_blob_table()
        a = soft_cluster(table, ids, num_clusters=3, seed=7)
        b = soft_cluster(table, ids, num_clusters=3, seed=7)
        for sid in ids:
            assert np.array_equal(a.require(sid), b.require(sid))
        assert np.array_equal(a.centroids, b.centroids)

    def test_temperature_sharpens_memberships(self):
        table, ids = _two_blob_table()
        soft = soft_cluster(table, ids, num_clusters=2, seed=0, temperature=1.0)
        sharp = soft_cluster(table, ids, num_clusters=2, seed=0, temperature=0.01)
        sid = ids[0]
        assert float(sharp.require(sid).max()) > float(soft.require(sid).max())

    def test_cluster_count_bounds(self):
        table, ids = _two_blob_table(n_per_blob=2)
        with pytest.raises(ValidationError, match="invalid cluster count"):
            soft_cluster(table, ids, num_clusters=1, seed=0)
        with pytest.raises(ValidationError, match="invalid cluster count"):
            soft_cluster(table, ids, num_clusters=5, seed=0)

    def test_unembedded_id_rejected(self):
        table, ids = _two_blob_table(n_per_blob=2)
        with pytest.raises(ValidationError, match="unembedded event"):
            soft_cluster(table, ids + ["ghost"], num_clusters=2, seed=0)

    def test_duplicate_points_tolerated(self):
        # more clusters than distinct directions: empty clusters keep their
        # centroid and the result stays a valid distribution
        table = EmbeddingTable(dim=3)
        for i in range(5):
            table.add(f"s{i}", np.array([1.0, 0.0, 0.0]))
        result = soft_cluster(table, [f"s{i}" for i in range(5)], num_clusters=3, seed=0)
        for i in range(5):
            assert float(result.require(f"s{i}").sum()) == pytest.approx(1.0)

    def test_require_unknown_event(self):
        matrix = MembershipMatrix(num_clusters=2)
        with pytest.raises(ValidationError, match="unclustered event"):
            matrix.require("ghost")
