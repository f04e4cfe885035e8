"""Evaluating trees against Markov models: joint leaf distributions.

A tree with n leaves acts on a state distribution as a linear map into
the n-fold tensor power: evolve along the root edge, copy the state at
each branching vertex (the diagonal duplication), keep evolving along
each child edge.  Infinite edge lengths evolve by the equilibrium
projector, extending the action to trees with lengths in [0, inf].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .markov import (
    Distribution,
    MarkovGenerator,
    NonFiniteTime,
    SizeCap,
    StateSpace,
    _check_same_states,
    _frozen_array,
    expm,
)
from .operads import PhyloTree

TENSOR_CAP = 10 ** 6


class CoalgebraError(ValueError):
    pass


class BadArity(CoalgebraError):
    pass


class IndexOutOfRange(CoalgebraError):
    pass


class DomainError(CoalgebraError):
    pass


class ParameterOutOfRange(CoalgebraError):
    pass


@dataclass(frozen=True)
class LeafTensor:
    """A real function on n-tuples of states, leaf 1 on the outermost axis."""

    states: StateSpace
    n: int
    data: np.ndarray

    @staticmethod
    def make(states: StateSpace, n: int, data: np.ndarray,
             stochastic: bool = False) -> "LeafTensor":
        s = states.size
        if s ** n > TENSOR_CAP:
            raise SizeCap(f"{s}^{n} tensor entries exceed the cap {TENSOR_CAP}")
        arr = np.asarray(data, dtype=float).reshape((s,) * n)
        if stochastic:
            if float(arr.min(initial=0.0)) < -1e-12:
                raise CoalgebraError(f"negative tensor entry {arr.min()}")
            if abs(float(arr.sum()) - 1.0) > 1e-10:
                raise CoalgebraError(f"tensor mass {arr.sum()} is not 1")
        return LeafTensor(states, n, _frozen_array(arr))

    @property
    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)


def duplicate_matrix(states: StateSpace, k: int) -> np.ndarray:
    """The diagonal embedding of one state axis into k axes, as a
    (size**k, size) matrix."""
    if k < 1:
        raise BadArity(f"duplication needs arity >= 1, got {k}")
    s = states.size
    if s ** k > TENSOR_CAP:
        raise SizeCap(f"{s}^{k} exceeds the cap {TENSOR_CAP}")
    m = np.zeros((s ** k,) + (s,))
    step = (s ** k - 1) // (s - 1) if s > 1 else 1
    for x in range(s):
        m[x * step, x] = 1.0
    return m


def duplicate(k: int, f: Distribution) -> LeafTensor:
    """k-fold duplication: mass f(x) on the constant tuple (x, ..., x)."""
    m = duplicate_matrix(f.states, k)
    return LeafTensor.make(f.states, k, m @ f.p)


def _edge_matrix(tree: PhyloTree, node: int, g: MarkovGenerator) -> np.ndarray:
    t = tree.length(node)
    if math.isinf(t):
        return np.asarray(g.limit.M)
    return np.asarray(expm(g, t).M)


def _neutral_key(tree: PhyloTree, node: int) -> str:
    """Canonical key of the subtree above ``node`` ignoring leaf labels.
    Fixes the multiplication order below, so relabelling leaves permutes
    tensor axes without changing a single bit of the entries."""
    prefix = repr(tree.length(node)) + ":"
    if node > 0:
        return prefix + "L"
    inner = sorted(_neutral_key(tree, c) for c in tree.shape.child_map[node])
    return prefix + "(" + ",".join(inner) + ")"


def _edge_operator(tree: PhyloTree, node: int, g: MarkovGenerator
                   ) -> tuple[np.ndarray, list[int]]:
    """Linear map from the state below this edge to the tensor over the
    leaves above it; axes are (leaves ..., input)."""
    a = _edge_matrix(tree, node, g)
    if node > 0:
        return a, [node]
    s = g.size
    cur: np.ndarray | None = None
    labels: list[int] = []
    kids = sorted(tree.shape.child_map[node],
                  key=lambda c: _neutral_key(tree, c))
    for c in kids:
        sub, labs = _edge_operator(tree, c, g)
        labels.extend(labs)
        if cur is None:
            cur = sub
        else:
            left = cur.reshape(cur.shape[:-1] + (1,) * (sub.ndim - 1) + (s,))
            cur = left * sub[(None,) * (cur.ndim - 1)]
    assert cur is not None, "vertices have at least one child here"
    return np.tensordot(cur, a, axes=([-1], [0])), labels


def evaluate_operator(t: PhyloTree, g: MarkovGenerator) -> np.ndarray:
    """The tree as a matrix of shape (size**n, size): column x is the joint
    leaf tensor produced from the point distribution at state x."""
    s = g.size
    if s ** t.n > TENSOR_CAP:
        raise SizeCap(f"{s}^{t.n} tensor entries exceed the cap {TENSOR_CAP}")
    op, labels = _edge_operator(t, t.shape.root, g)
    order = np.argsort(labels)
    op = np.transpose(op, tuple(order) + (t.n,))
    return op.reshape(s ** t.n, s)


def evaluate(t: PhyloTree, g: MarkovGenerator, f: Distribution) -> LeafTensor:
    """Joint distribution of the leaf states, starting from ``f`` at the root."""
    _check_same_states(g.states, f.states)
    if t.is_extended:
        raise NonFiniteTime("tree has infinite lengths; use evaluate_extended")
    return LeafTensor.make(g.states, t.n, evaluate_operator(t, g) @ f.p,
                           stochastic=True)


def evaluate_extended(t: PhyloTree, g: MarkovGenerator,
                      f: Distribution) -> LeafTensor:
    """As ``evaluate``; edges of infinite length apply the equilibrium
    projector (cached per generator)."""
    _check_same_states(g.states, f.states)
    return LeafTensor.make(g.states, t.n, evaluate_operator(t, g) @ f.p,
                           stochastic=True)


def marginal(lt: LeafTensor, leaf: int) -> Distribution:
    """Distribution of one leaf: sum out every other leaf axis."""
    if not 1 <= leaf <= lt.n:
        raise IndexOutOfRange(f"leaf {leaf} not in 1..{lt.n}")
    axes = tuple(j for j in range(lt.n) if j != leaf - 1)
    return Distribution.make(lt.states, lt.data.sum(axis=axes))


# ---------------------------------------------------------------------------
# the compactified length monoid and trees with infinite external edges
# ---------------------------------------------------------------------------

def star(x: float, y: float) -> float:
    """The monoid operation x + y - xy on [0, 1]."""
    return x + y - x * y


def to_unit(t: float) -> float:
    """Isomorphism ([0, inf], +) -> ([0, 1], star): t -> 1 - exp(-t)."""
    if isinstance(t, (int, float)) and not math.isnan(t) and t >= 0:
        return 1.0 - math.exp(-t)
    raise DomainError(f"{t!r} is not a length in [0, inf]")


def from_unit(u: float) -> float:
    """Inverse isomorphism: u -> -log(1 - u), sending 1 to inf."""
    if isinstance(u, (int, float)) and 0 <= u <= 1:
        if u == 1:
            return math.inf
        return -math.log1p(-u) + 0.0
    raise DomainError(f"{u!r} is not in [0, 1]")


def w_membership(t: PhyloTree) -> bool:
    """True when every external edge (root and leaves) has infinite length."""
    return all(math.isinf(x) for x in t.external_lengths())


def homotopy_retract(t: PhyloTree, s: float) -> PhyloTree:
    """Rescale the external lengths through the unit-interval coordinates:
    at s = 0 the tree is unchanged, at s = 1 all external edges become
    infinite, so the image satisfies ``w_membership``.  Internal lengths
    never move."""
    if not (isinstance(s, (int, float)) and 0 <= s <= 1):
        raise ParameterOutOfRange(f"parameter {s!r} not in [0, 1]")
    if s == 0:
        return t
    new: dict[int, float] = {}
    for j in range(1, t.n + 1):
        new[j] = from_unit((1.0 - s) * to_unit(t.leaf_length(j)) + s)
    root = t.shape.root
    new[root] = from_unit((1.0 - s) * to_unit(t.root_length) + s)
    return t.with_lengths(new, extended=True)


# ---------------------------------------------------------------------------
# tensor JSON schema shared with the command line
# ---------------------------------------------------------------------------

def tensor_to_json(lt: LeafTensor) -> dict:
    return {"states": list(lt.states.labels), "n": lt.n,
            "data": [float(x) for x in lt.flat]}


def tensor_from_json(doc: Mapping) -> LeafTensor:
    try:
        states = StateSpace(tuple(doc["states"]))
        return LeafTensor.make(states, int(doc["n"]), np.array(doc["data"]))
    except KeyError as exc:
        raise CoalgebraError(f"tensor JSON needs key {exc}") from exc
