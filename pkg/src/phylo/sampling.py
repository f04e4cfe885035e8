"""Seeded random generators for trees, used by tests, law suites and the
experiment scripts."""

from __future__ import annotations

import random

from .operads import PhyloTree, WeightedTree
from .trees import PlanarTree, _freeze
from .treespace import MetricTree, metric_tree


def random_shape(rng: random.Random, n: int) -> PlanarTree:
    """A random shape on leaves 1..n with no unary or 0-ary vertices."""
    if n == 1:
        return PlanarTree(1, 1, ())
    kids: dict[int, tuple[int, ...]] = {}
    counter = [0]

    def build(leaves: list[int]) -> int:
        if len(leaves) == 1:
            return leaves[0]
        counter[0] -= 1
        v = counter[0]
        rng.shuffle(leaves)
        parts = rng.randint(2, len(leaves))
        cuts = sorted(rng.sample(range(1, len(leaves)), parts - 1))
        blocks = [leaves[a:b] for a, b in zip([0] + cuts, cuts + [len(leaves)])]
        kids[v] = tuple(build(b) for b in blocks)
        return v

    root = build(list(range(1, n + 1)))
    return PlanarTree(n, root, _freeze(kids))


def random_length(rng: random.Random, zero_prob: float = 0.0,
                  lo: float = 0.05, hi: float = 2.0) -> float:
    """Dyadic lengths (multiples of 1/1024), so float sums are exact and the
    algebraic laws hold as bitwise equalities."""
    if rng.random() < zero_prob:
        return 0.0
    return rng.randint(max(1, round(lo * 1024)), round(hi * 1024)) / 1024.0


def random_phylo(rng: random.Random, n: int | None = None,
                 max_leaves: int = 6, zero_external_prob: float = 0.3
                 ) -> PhyloTree:
    if n is None:
        n = rng.randint(1, max_leaves)
    shape = random_shape(rng, n)
    lens = {}
    for u in shape.nodes:
        if shape.is_internal_edge(u):
            lens[u] = random_length(rng)
        else:
            lens[u] = random_length(rng, zero_prob=zero_external_prob)
    return PhyloTree.make(shape, lens)


def random_metric(rng: random.Random, n: int) -> MetricTree:
    t = random_phylo(rng, n, zero_external_prob=1.0)
    return MetricTree(t)


def random_metric_on_grid(rng: random.Random, n: int, step: float,
                          max_steps: int, clusters: int | None = None
                          ) -> MetricTree:
    """Metric tree whose internal lengths are positive multiples of ``step``."""
    t = random_phylo(rng, n, zero_external_prob=1.0)
    fam = [t.shape.leaves_below(v) for v in t.shape.internal_edge_sources()]
    if clusters is not None:
        fam = fam[:clusters]
    return metric_tree(n, {c: step * rng.randint(1, max_steps) for c in fam})


def random_weighted(rng: random.Random, n: int | None = None,
                    max_leaves: int = 6) -> WeightedTree:
    """A mixed tree for the rewrite engine: random shape with extra unary
    vertices inserted and a fair share of exact zero lengths."""
    if n is None:
        n = rng.randint(1, max_leaves)
    shape = random_shape(rng, n)
    for _ in range(rng.randint(0, 4)):
        shape = shape.insert_vertex(rng.choice(shape.nodes))
    lens = {u: random_length(rng, zero_prob=0.4) for u in shape.nodes}
    return WeightedTree.make(shape, lens)


def random_perm(rng: random.Random, n: int) -> tuple[int, ...]:
    perm = list(range(1, n + 1))
    rng.shuffle(perm)
    return tuple(perm)
