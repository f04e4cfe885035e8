import math
import random

import pytest
from hypothesis import given, strategies as st

from phylo.operads import PhyloTree
from phylo.sampling import random_metric, random_metric_on_grid, random_phylo
from phylo.trees import make_tree
from phylo.treespace import (
    ArityMismatch,
    ArityTooLarge,
    BasicOpenSet,
    ExactUnsupported,
    ExternalLengths,
    MetricTree,
    TreeSpaceError,
    WrongArity,
    bhv_distance,
    cluster_lengths,
    decompose,
    decompose1,
    enumerate_binary_topologies,
    enumerate_strata,
    metric_tree,
    neighborhood_contains,
    orthant_of,
    recompose,
    recompose1,
    tree_from_clusters,
    unit_metric_tree,
)


def seeds():
    return st.integers(0, 10 ** 9)


def fs(*xs):
    return frozenset(xs)


class TestDecompose:
    def test_already_metric_tree(self):
        m0 = random_metric(random.Random(1), 4)
        m, ext = decompose(m0.tree)
        assert m == m0
        assert ext.values == (0.0,) * 5

    def test_five_leaf_example_extraction(self):
        # shape: root vertex a over (leaf 3, leaf 1, w), w over (4, 5, 2);
        # one internal edge of length 0.7 above the cluster {2, 4, 5}
        shape = make_tree(5, "a", {"a": [3, 1, "w"], "w": [4, 5, 2]})
        lens = {3: 0.1, 1: 0.2, 4: 0.3, 5: 0.4, 2: 0.5, -2: 0.7, -1: 0.6}
        t = PhyloTree.make(shape, lens)
        m, ext = decompose(t)
        assert cluster_lengths(m.tree) == {fs(2, 4, 5): 0.7}
        # root first, then leaf edges in leaf order
        assert ext.values == (0.6, 0.2, 0.5, 0.1, 0.3, 0.4)
        assert recompose(m, ext) == t

    @given(seeds())
    def test_round_trip_random(self, seed):
        rng = random.Random(seed)
        t = random_phylo(rng, rng.randint(2, 6))
        m, ext = decompose(t)
        assert recompose(m, ext) == t

    def test_one_leaf_factors(self):
        m, length = decompose1(recompose1(2.5))
        assert m == unit_metric_tree()
        assert length == 2.5
        assert recompose1(length) == recompose1(2.5)

    def test_wrong_arities(self):
        with pytest.raises(WrongArity):
            decompose(recompose1(1.0))
        with pytest.raises(WrongArity):
            decompose1(random_phylo(random.Random(0), 3))
        with pytest.raises(WrongArity):
            recompose(unit_metric_tree(), ExternalLengths((0.0, 0.0)))


class TestTopologyEnumeration:
    def test_small_counts(self):
        assert len(enumerate_binary_topologies(2)) == 1
        assert len(enumerate_binary_topologies(3)) == 3
        assert len(enumerate_binary_topologies(4)) == 15
        assert len(enumerate_binary_topologies(5)) == 105

    def test_double_factorial_recursion_oracle(self):
        # inserting leaf n onto any of the 2n-3 edges of an (n-1)-leaf tree
        expected = {2: 1}
        for n in range(3, 7):
            expected[n] = expected[n - 1] * (2 * n - 3)
        for n in range(2, 7):
            assert len(enumerate_binary_topologies(n)) == expected[n]

    def test_deduplicated(self):
        tops = enumerate_binary_topologies(5)
        assert len({o.clusters for o in tops}) == 105

    def test_cap(self):
        with pytest.raises(ArityTooLarge):
            enumerate_binary_topologies(8)
        with pytest.raises(ArityTooLarge):
            enumerate_binary_topologies(1)

    def test_strata_census_n4(self):
        strata = enumerate_strata(4)
        assert {k: len(v) for k, v in strata.items()} == {2: 15, 1: 10, 0: 1}


class TestOrthants:
    def test_binary_tree_coordinates(self):
        x = metric_tree(4, {fs(1, 2): 1.0, fs(3, 4): 1.0})
        pos = orthant_of(x)
        assert pos.is_binary
        assert pos.coords == (1.0, 1.0)
        assert pos.orthant.dimension == 2
        assert [tuple(sorted(c)) for c in pos.axes] == [(1, 2), (3, 4)]

    def test_star_is_the_cone_point(self):
        pos = orthant_of(metric_tree(4, {}))
        assert not pos.is_binary
        assert len(pos.adjacent) == 15

    def test_single_edge_tree_meets_three_quadrants(self):
        pos = orthant_of(metric_tree(4, {fs(1, 2): 0.5}))
        assert not pos.is_binary
        assert len(pos.adjacent) == 3
        for o in pos.adjacent:
            assert fs(1, 2) in o.clusters

    def test_binary_dimension_rule(self):
        for n in (2, 3, 4, 5):
            for o in enumerate_binary_topologies(n):
                assert o.dimension == n - 2


class TestBhvDistance:
    def test_identical_trees(self):
        x = metric_tree(4, {fs(1, 2): 1.0, fs(1, 2, 3): 0.25})
        assert bhv_distance(x, x) == 0.0

    def test_same_quadrant_euclidean(self):
        x = metric_tree(4, {fs(1, 2): 1.0, fs(3, 4): 1.0})
        y = metric_tree(4, {fs(1, 2): 0.5, fs(3, 4): 1.0})
        assert bhv_distance(x, y, "exact4") == pytest.approx(0.5, abs=1e-15)

    def test_adjacent_quadrants_unfold(self):
        # both trees sit at 45 degrees from the shared ray {1,2}; unfolding
        # the two quadrants about that ray puts them at (1, 1) and (1, -1)
        a = metric_tree(4, {fs(1, 2): 1.0, fs(1, 2, 3): 1.0})
        b = metric_tree(4, {fs(1, 2): 1.0, fs(1, 2, 4): 1.0})
        assert bhv_distance(a, b, "exact4") == pytest.approx(2.0, abs=1e-12)

    def test_far_quadrants_go_through_the_cone_point(self):
        a = metric_tree(4, {fs(1, 2): 1.0, fs(3, 4): 1.0})
        b = metric_tree(4, {fs(1, 3): 1.0, fs(2, 4): 1.0})
        d = bhv_distance(a, b, "exact4")
        assert d == pytest.approx(a.norm + b.norm, abs=1e-12)

    def test_cone_upper_bound_and_symmetry(self):
        rng = random.Random(71)
        for _ in range(120):
            x = random_metric(rng, 4)
            y = random_metric(rng, 4)
            d = bhv_distance(x, y, "exact4")
            assert d == bhv_distance(y, x, "exact4")
            assert d <= bhv_distance(x, y, "cone") + 1e-15

    def test_triangle_inequality(self):
        rng = random.Random(73)
        for _ in range(100):
            x, y, z = (random_metric(rng, 4) for _ in range(3))
            dxz = bhv_distance(x, z, "exact4")
            dxy = bhv_distance(x, y, "exact4")
            dyz = bhv_distance(y, z, "exact4")
            assert dxz <= dxy + dyz + 1e-9

    def test_zero_distance_implies_equality(self):
        rng = random.Random(79)
        for _ in range(60):
            x = random_metric(rng, 4)
            y = random_metric(rng, 4)
            if bhv_distance(x, y, "exact4") == 0.0:
                assert x == y

    def test_nested_topologies_share_an_orthant_closure(self):
        x = metric_tree(4, {fs(1, 2): 0.6})
        y = metric_tree(4, {fs(1, 2): 0.2, fs(3, 4): 0.4})
        want = math.hypot(0.4, 0.4)
        assert bhv_distance(x, y, "exact4") == pytest.approx(want, abs=1e-15)
        assert bhv_distance(x, y, "cone") == pytest.approx(want, abs=1e-15)

    def test_exact_unsupported_above_four(self):
        x = random_metric(random.Random(3), 5)
        with pytest.raises(ExactUnsupported):
            bhv_distance(x, x, "exact4")
        assert bhv_distance(x, x, "auto") == 0.0

    def test_arity_mismatch(self):
        with pytest.raises(ArityMismatch):
            bhv_distance(random_metric(random.Random(5), 3),
                         random_metric(random.Random(6), 4))

    def test_grid_oracle_smoke(self):
        from gridoracle import GridComplex
        rng = random.Random(83)
        grid = GridComplex(radius=0.9, step=0.05)
        src = [random_metric_on_grid(rng, 4, 0.05, 12) for _ in range(4)]
        tgt = [random_metric_on_grid(rng, 4, 0.05, 12) for _ in range(6)]
        oracle = grid.distances(src, tgt)
        for i, x in enumerate(src):
            for j, y in enumerate(tgt):
                exact = bhv_distance(x, y, "exact4")
                assert exact <= oracle[i, j] + 1e-9
                assert abs(exact - oracle[i, j]) < 0.1


class TestNeighborhoods:
    def base_set(self, radius):
        base = tree_from_clusters(4, [fs(1, 2)])
        return BasicOpenSet(
            base,
            internal_windows=((0.5, 1.5),),
            external_windows=tuple((-1.0, 0.5) for _ in range(5)),
            radii=radius,
        )

    def test_center_is_inside(self):
        u = self.base_set(0.7)
        z = metric_tree(4, {fs(1, 2): 1.0}).tree
        assert neighborhood_contains(u, z)

    def test_collapsing_family_radius_rule(self):
        z = metric_tree(4, {fs(1, 2): 1.0, fs(3, 4): 0.5}).tree
        assert neighborhood_contains(self.base_set(0.7), z)
        assert not neighborhood_contains(self.base_set(0.4), z)

    def test_non_refining_topology_excluded(self):
        z = metric_tree(4, {fs(1, 3): 1.0, fs(1, 2, 3): 0.1}).tree
        assert not neighborhood_contains(self.base_set(0.7), z)

    def test_external_windows_checked(self):
        u = self.base_set(0.7)
        shape = tree_from_clusters(4, [fs(1, 2)])
        lens = {n: 0.0 for n in shape.nodes}
        for v in shape.internal_edge_sources():
            lens[v] = 1.0
        lens[1] = 2.0  # outside the external window
        assert not neighborhood_contains(u, PhyloTree.make(shape, lens))

    def test_intermediate_refinement_excluded(self):
        # a non-binary proper refinement is not among the resolved topologies
        base = tree_from_clusters(5, [fs(1, 2)])
        u = BasicOpenSet(base, ((0.5, 1.5),),
                         tuple((-1.0, 0.5) for _ in range(6)), radii=1.0)
        z = metric_tree(5, {fs(1, 2): 1.0, fs(3, 4): 0.2}).tree
        assert not neighborhood_contains(u, z)
        zb = metric_tree(5, {fs(1, 2): 1.0, fs(3, 4): 0.2, fs(3, 4, 5): 0.2}).tree
        assert neighborhood_contains(u, zb)

    def test_convergence_to_the_limit(self):
        # shrinking one internal edge: eventually inside every neighborhood
        # of the limit, and the distance to it is monotone decreasing to 0
        limit = metric_tree(4, {fs(1, 2): 1.0})
        last = math.inf
        for s in (0.5, 0.25, 0.1, 0.05, 0.01):
            z = metric_tree(4, {fs(1, 2): 1.0, fs(3, 4): s})
            d = bhv_distance(z, limit, "exact4")
            assert d == pytest.approx(s, abs=1e-12)
            assert d < last
            last = d
            assert neighborhood_contains(self.base_set(2 * s), z.tree)

    def test_window_shape_validation(self):
        with pytest.raises(TreeSpaceError):
            BasicOpenSet(tree_from_clusters(4, [fs(1, 2)]),
                         internal_windows=(),
                         external_windows=tuple((-1.0, 0.5) for _ in range(5)))


class TestMetricTreeValidation:
    def test_nonzero_external_rejected(self):
        t = random_phylo(random.Random(2), 4)
        while all(x == 0.0 for x in t.external_lengths()):
            t = random_phylo(random.Random(3), 4)
        with pytest.raises(TreeSpaceError):
            MetricTree(t)

    def test_recompose_length_mismatch(self):
        m = random_metric(random.Random(4), 3)
        with pytest.raises(ArityMismatch):
            recompose(m, ExternalLengths((0.0, 0.0, 0.0)))

    def test_negative_external_rejected(self):
        with pytest.raises(TreeSpaceError):
            ExternalLengths((0.0, -1.0))


class TestResolutions:
    def test_five_leaf_star_resolves_to_every_binary_topology(self):
        star = metric_tree(5, {})
        pos = orthant_of(star)
        assert len(pos.adjacent) == 105
        assert {o.clusters for o in pos.adjacent} == \
            {o.clusters for o in enumerate_binary_topologies(5)}

    def test_resolutions_refine_the_base(self):
        base = metric_tree(5, {frozenset({1, 2, 3}): 0.4})
        for o in orthant_of(base).adjacent:
            assert frozenset({1, 2, 3}) in o.clusters
