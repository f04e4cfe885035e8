import random
from itertools import permutations

import pytest
from hypothesis import given, strategies as st

from conftest import FORMAL, brute_force_isomorphic, formal_op
from phylo.sampling import random_perm, random_shape
from phylo.trees import (
    EmptyEdgeSet,
    TreeError,
    LabelledTree,
    LeafIndexOutOfRange,
    MultipleRootEdges,
    NoRootEdge,
    NotInternalEdge,
    PermutationSizeMismatch,
    SourceNotBijective,
    Subtree,
    InvalidSubtree,
    UnknownVertex,
    UnreachableRoot,
    canonical_form,
    compose_perms,
    contract_subtree,
    corolla,
    invert_perm,
    isomorphic,
    make_tree,
    unit_tree,
    validate,
)


def seeds():
    return st.integers(0, 10 ** 9)


# -- validation --------------------------------------------------------------

class TestValidate:
    def test_bare_edge_is_a_one_tree(self):
        t = validate(1, vertices=[], edges=["e"], source={"e": 1}, target={"e": 0})
        assert t.n == 1 and t.num_vertices == 0

    @pytest.mark.parametrize("n", [0, 1, 2, 3, 5])
    def test_corollas_valid_for_every_arity(self, n):
        edges = {f"e{j}": (j, "v") for j in range(1, n + 1)}
        edges["root"] = ("v", 0)
        t = validate(n, ["v"], edges, {e: s for e, (s, _) in edges.items()},
                     {e: tg for e, (_, tg) in edges.items()})
        assert t.num_vertices == 1 and t.arity(t.root) == n

    def test_two_root_edges_rejected(self):
        with pytest.raises(MultipleRootEdges):
            validate(2, [], ["a", "b"], {"a": 1, "b": 2}, {"a": 0, "b": 0})

    def test_no_root_edge_rejected(self):
        with pytest.raises(NoRootEdge):
            validate(1, ["v"], ["e", "f"], {"e": 1, "f": "v"},
                     {"e": "v", "f": "v"})

    def test_cycle_unreachable(self):
        with pytest.raises(UnreachableRoot):
            validate(1, ["a", "b"], ["e", "f", "g"],
                     {"e": 1, "f": "a", "g": "b"},
                     {"e": 0, "f": "b", "g": "a"})

    def test_duplicate_source_rejected(self):
        with pytest.raises(SourceNotBijective):
            validate(1, ["v"], ["e", "f"], {"e": 1, "f": 1},
                     {"e": "v", "f": 0})

    def test_missing_source_rejected(self):
        with pytest.raises(SourceNotBijective):
            validate(2, ["v"], ["e", "root"], {"e": 1, "root": "v"},
                     {"e": "v", "root": 0})

    def test_empty_edge_set_rejected(self):
        with pytest.raises(EmptyEdgeSet):
            validate(0, [], [], {}, {})


# -- arity -------------------------------------------------------------------

class TestArity:
    def test_corolla(self):
        assert corolla(3).arity(-1) == 3

    def test_terminus_has_arity_zero(self):
        # 3-tree with two termini hanging off the spine
        t = make_tree(3, "a", {"a": [1, "t1", "b"], "b": ["t2", 3, 2],
                               "t1": [], "t2": []})
        termini = [v for v in t.vertices if t.arity(v) == 0]
        assert len(termini) == 2

    def test_unary_vertex(self):
        t = make_tree(2, "a", {"a": ["b"], "b": [2, 1]})
        assert t.arity(t.root) == 1

    def test_unknown_vertex(self):
        with pytest.raises(UnknownVertex):
            corolla(2).arity(-9)


# -- grafting ----------------------------------------------------------------

class TestGraft:
    def test_graft_at_first_label(self):
        # outer corolla drawn with leaves (2, 1); graft at label 1
        f = make_tree(2, "v", {"v": [2, 1]})
        g = corolla(2)
        r = f.graft(1, g)
        assert r.n == 3
        assert r.leaf_order() == (3, 1, 2)
        expected = make_tree(3, "f", {"f": [3, "g"], "g": [1, 2]})
        assert isomorphic(r, expected, "planar")

    def test_graft_at_second_label(self):
        f = make_tree(2, "v", {"v": [2, 1]})
        r = f.graft(2, corolla(2))
        assert r.leaf_order() == (2, 3, 1)
        expected = make_tree(3, "f", {"f": ["g", 1], "g": [2, 3]})
        assert isomorphic(r, expected, "planar")

    def test_unit_laws(self):
        rng = random.Random(7)
        for _ in range(25):
            t = random_shape(rng, rng.randint(1, 6))
            i = rng.randint(1, t.n)
            assert isomorphic(t.graft(i, unit_tree()), t, "planar")
            assert isomorphic(unit_tree().graft(1, t), t, "planar")

    @given(seeds(), seeds())
    def test_leaf_count_arithmetic(self, s1, s2):
        rng = random.Random(s1)
        outer = random_shape(rng, rng.randint(1, 6))
        inner = random_shape(random.Random(s2), rng.randint(1, 6))
        i = rng.randint(1, outer.n)
        assert outer.graft(i, inner).n == outer.n + inner.n - 1

    def test_zero_leaf_inner_tree_allowed(self):
        outer = corolla(2)
        inner = corolla(0)
        r = outer.graft(1, inner)
        assert r.n == 1 and r.num_vertices == 2

    def test_out_of_range(self):
        with pytest.raises(LeafIndexOutOfRange):
            corolla(2).graft(3, corolla(2))

    def test_associativity_random_triples(self):
        rng = random.Random(11)
        for _ in range(60):
            a = random_shape(rng, rng.randint(1, 4))
            b = random_shape(rng, rng.randint(1, 4))
            c = random_shape(rng, rng.randint(1, 4))
            i = rng.randint(1, a.n)
            j = rng.randint(1, b.n)
            lhs = a.graft(i, b).graft(i - 1 + j, c)
            rhs = a.graft(i, b.graft(j, c))
            assert isomorphic(lhs, rhs, "planar")


# -- leaf relabelling --------------------------------------------------------

class TestPermuteLeaves:
    def test_identity(self):
        t = make_tree(3, "a", {"a": [2, "b"], "b": [3, 1]})
        assert t.permute_leaves((1, 2, 3)) == t

    def test_cyclic_relabelling_sorts_leaves(self):
        # leaves in planar order (2, 3, 1); the cycle 1->2->3->1 sorts them
        t = make_tree(3, "a", {"a": ["b", 1], "b": [2, 3]})
        moved = t.permute_leaves((2, 3, 1))
        assert moved.leaf_order() == (1, 2, 3)

    @given(seeds())
    def test_action_inverse(self, seed):
        rng = random.Random(seed)
        t = random_shape(rng, rng.randint(1, 6))
        sigma = random_perm(rng, t.n)
        assert t.permute_leaves(sigma).permute_leaves(invert_perm(sigma)) == t

    @given(seeds())
    def test_action_composition(self, seed):
        rng = random.Random(seed)
        t = random_shape(rng, rng.randint(1, 6))
        sigma, tau = random_perm(rng, t.n), random_perm(rng, t.n)
        assert (t.permute_leaves(sigma).permute_leaves(tau)
                == t.permute_leaves(compose_perms(sigma, tau)))

    def test_size_mismatch(self):
        with pytest.raises(PermutationSizeMismatch):
            corolla(3).permute_leaves((1, 2))


# -- contraction -------------------------------------------------------------

class TestContractEdge:
    def test_contract_splices_children_in_place(self):
        # 4-leaf tree with a terminus; contract the edge between the spine
        # vertices M and S: S's children (terminus, leaf 1) replace S in place
        t = make_tree(4, "B", {"B": [4, "M", 2], "M": [3, "S"],
                               "S": ["T", 1], "T": []})
        s_id = [v for v in t.vertices if t.child_map[v] and
                all(c < 0 or c == 1 for c in t.child_map[v]) and t.arity(v) == 2
                and any(c < 0 and t.arity(c) == 0 for c in t.child_map[v])][0]
        r = t.contract_edge(s_id)
        expected = make_tree(4, "B", {"B": [4, "X", 2], "X": [3, "T", 1],
                                      "T": []})
        assert isomorphic(r, expected, "planar")

    def test_binary_three_tree_contracts_to_corolla(self):
        t = make_tree(3, "a", {"a": [1, "b"], "b": [2, 3]})
        (e,) = t.internal_edge_sources()
        got = t.contract_edge(e)
        assert brute_force_isomorphic(got, corolla(3))
        assert isomorphic(got, corolla(3))

    def test_arity_bookkeeping_random(self):
        rng = random.Random(3)
        done = 0
        while done < 200:
            t = random_shape(rng, rng.randint(2, 7))
            internals = t.internal_edge_sources()
            if not internals:
                continue
            u = rng.choice(internals)
            k1, k2 = t.arity(t.parent[u]), t.arity(u)
            merged = t.contract_edge(u)
            # the surviving vertex keeps the parent's id
            assert merged.arity(t.parent[u]) == k1 + k2 - 1
            done += 1

    def test_leaf_edge_rejected(self):
        with pytest.raises(NotInternalEdge):
            corolla(2).contract_edge(1)

    def test_root_edge_rejected(self):
        with pytest.raises(NotInternalEdge):
            corolla(2).contract_edge(-1)


class TestSubtree:
    def host(self):
        # root vertex f with children (g, h); h has children (k, 4, 3); g (2, 1)
        return make_tree(4, "f", {"f": ["g", "h"], "g": [2, 1],
                                  "h": ["k", 4, 3], "k": []})

    def ids(self, t):
        f = t.root
        g, h = t.child_map[f]
        k = t.child_map[h][0]
        return f, g, h, k

    def test_no_internal_edges_is_identity(self):
        t = self.host()
        _, g, _, _ = self.ids(t)
        s = Subtree(t, frozenset({g}))
        assert contract_subtree(t, s) == t

    def test_labelled_green_ellipse_contraction(self):
        t = self.host()
        f, g, h, k = self.ids(t)
        lab = LabelledTree.make(t, {f: formal_op("f", 2), g: formal_op("g", 2),
                                    h: formal_op("h", 3), k: formal_op("k", 0)})
        s = Subtree(t, frozenset({f, h, k}))
        out = lab.contract_edges(s.internal_edge_sources(), FORMAL.compose)
        assert out.shape.num_vertices == 2
        merged = out.label(out.shape.root)
        assert merged == ("comp", formal_op("f", 2), 2,
                          ("comp", formal_op("h", 3), 1, formal_op("k", 0)))

    def test_contraction_order_independent(self):
        rng = random.Random(5)
        for _ in range(30):
            t = random_shape(rng, rng.randint(3, 7))
            internals = list(t.internal_edge_sources())
            if len(internals) < 2:
                continue
            keys = set()
            for order in permutations(internals):
                cur = t
                for u in order:
                    cur = cur.contract_edge(u)
                keys.add(canonical_form(cur, "planar")[1])
            assert len(keys) == 1

    def test_disconnected_vertex_set_rejected(self):
        t = self.host()
        f, g, h, k = self.ids(t)
        with pytest.raises(InvalidSubtree):
            Subtree(t, frozenset({g, k}))

    def test_subtree_boundary(self):
        t = self.host()
        f, g, h, k = self.ids(t)
        s = Subtree(t, frozenset({h, k}))
        assert s.root_source == h and s.root_target == f
        assert s.in_set == frozenset({3, 4})


# -- canonical forms ---------------------------------------------------------

class TestCanonicalForm:
    def test_five_leaf_redraw_same_class(self):
        # same tree drawn twice: planar order and the labels of two leaves swapped
        a = make_tree(5, "a", {"a": [3, 1, "w"], "w": [4, 5, 2]})
        b = make_tree(5, "b", {"b": [1, 3, "w"], "w": [4, 5, 2]})
        assert canonical_form(a, "unordered")[1] == canonical_form(b, "unordered")[1]

    def test_planar_vs_unordered_three_trees(self):
        a = make_tree(3, "v", {"v": [1, "w"], "w": [2, 3]})
        b = make_tree(3, "v", {"v": [1, "w"], "w": [3, 2]})
        assert canonical_form(a)[1] == canonical_form(b)[1]
        assert canonical_form(a, "planar")[1] != canonical_form(b, "planar")[1]

    @given(seeds())
    def test_shuffled_ids_invariance(self, seed):
        rng = random.Random(seed)
        t = random_shape(rng, rng.randint(1, 6))
        relabel = {v: f"x{j}" for j, v in enumerate(t.vertices)}
        shuffled = make_tree(
            t.n, relabel.get(t.root, t.root),
            {relabel[v]: [relabel.get(c, c) for c in cs]
             for v, cs in t.children})
        assert canonical_form(t, "planar")[1] == canonical_form(shuffled, "planar")[1]
        assert canonical_form(t)[1] == canonical_form(shuffled)[1]

    def test_agrees_with_brute_force(self):
        rng = random.Random(13)
        trees = [random_shape(rng, rng.randint(2, 4)) for _ in range(40)]
        for a in trees[:20]:
            for b in trees[20:]:
                assert isomorphic(a, b) == brute_force_isomorphic(a, b)
                assert (isomorphic(a, b, "planar")
                        == brute_force_isomorphic(a, b, planar=True))

    def test_canonical_rep_is_isomorphic_to_input(self):
        rng = random.Random(17)
        for _ in range(20):
            t = random_shape(rng, rng.randint(1, 6))
            rep, _ = canonical_form(t)
            assert brute_force_isomorphic(rep, t)


class TestValidateChildOrder:
    def test_child_order_fixes_planar_structure(self):
        edges = {"e1": (1, "v"), "e2": (2, "v"), "root": ("v", 0)}
        src = {e: s for e, (s, _) in edges.items()}
        tgt = {e: t for e, (_, t) in edges.items()}
        a = validate(2, ["v"], edges, src, tgt, child_order={"v": ["e2", "e1"]})
        b = validate(2, ["v"], edges, src, tgt, child_order={"v": ["e1", "e2"]})
        assert a.leaf_order() == (2, 1)
        assert b.leaf_order() == (1, 2)
        with pytest.raises(TreeError):
            validate(2, ["v"], edges, src, tgt, child_order={"v": ["e1"]})
