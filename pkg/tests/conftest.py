"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

from itertools import permutations

import numpy as np
from hypothesis import settings

from phylo.operads import Operad
from phylo.trees import PlanarTree

settings.register_profile("suite", max_examples=50, deadline=None)
settings.load_profile("suite")


def brute_force_isomorphic(t1: PlanarTree, t2: PlanarTree,
                           planar: bool = False) -> bool:
    """Try every vertex bijection; the oracle the canonical forms must match."""
    if t1.n != t2.n or t1.num_vertices != t2.num_vertices:
        return False
    fixed = {j: j for j in range(0, t1.n + 1)}
    for image in permutations(t2.vertices):
        f = dict(zip(t1.vertices, image))
        f.update(fixed)
        ok = all(t2.parent.get(f[u]) == f[t1.parent[u]] for u in t1.nodes)
        if ok and planar:
            ok = all(tuple(f[c] for c in t1.child_map[v]) == t2.child_map[f[v]]
                     for v in t1.vertices)
        if ok:
            return True
    return False


def expm_taylor(a: np.ndarray, terms: int = 30) -> np.ndarray:
    """Plain truncated exponential series, no scaling: the expm oracle."""
    total = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, terms + 1):
        term = term @ a / k
        total = total + term
    return total


def _formal_arity(f) -> int:
    if f[0] == "id":
        return 1
    if f[0] == "op":
        return f[2]
    _, g, _, h = f
    return _formal_arity(g) + _formal_arity(h) - 1


# composition recorded as a syntax tree, for checking which slots were used
FORMAL = Operad(
    "formal",
    arity=_formal_arity,
    compose=lambda f, i, g: ("comp", f, i, g),
    identity=("id",),
    contains=lambda f: isinstance(f, tuple),
)


def formal_op(name: str, arity: int):
    return ("op", name, arity)
