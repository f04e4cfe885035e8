"""Finite-state continuous-time Markov processes.

Column convention throughout: a generator H has nonnegative off-diagonal
rates and zero column sums, the transition matrix exp(tH) is column
stochastic, and distributions are column vectors, so evolving for time t
is p -> exp(tH) p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np

from .operads import PhyloTree

COLUMN_SUM_TOL = 1e-10
GENERATOR_SUM_TOL = 1e-12
NEGATIVE_CLAMP = 1e-12
LIMIT_TOL = 1e-10
IDEMPOTENT_TOL = 1e-8
MAX_DOUBLINGS = 64


class MarkovError(ValueError):
    pass


class ShapeMismatch(MarkovError):
    pass


class NegativeOffDiagonal(MarkovError):
    pass


class ColumnSumNonzero(MarkovError):
    pass


class NegativeTime(MarkovError):
    pass


class NonFiniteTime(MarkovError):
    pass


class NoConvergence(MarkovError):
    pass


class SizeCap(MarkovError):
    pass


class BadRate(MarkovError):
    pass


class BadAlphabet(MarkovError):
    pass


class StateSpaceMismatch(MarkovError):
    pass


def _frozen_array(a: Any, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpace:
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.labels) < 1:
            raise MarkovError("a state space has at least one state")
        if len(set(self.labels)) != len(self.labels):
            raise MarkovError("state labels must be distinct")

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)


def _check_same_states(a: StateSpace, b: StateSpace) -> None:
    if a != b:
        raise StateSpaceMismatch(f"{a.labels} vs {b.labels}")


@dataclass(frozen=True)
class MarkovGenerator:
    states: StateSpace
    H: np.ndarray

    @cached_property
    def limit(self) -> "StochasticMatrix":
        return limit_operator(self)

    @property
    def size(self) -> int:
        return self.states.size


def validate_generator(H: Any, states: StateSpace | Sequence[str] | None = None
                       ) -> MarkovGenerator:
    """Check rate-matrix shape, nonnegative off-diagonals, zero column sums."""
    arr = np.array(H, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeMismatch(f"rate matrix must be square, got {arr.shape}")
    s = arr.shape[0]
    if states is None:
        space = StateSpace(tuple(f"S{i}" for i in range(s)))
    else:
        space = states if isinstance(states, StateSpace) else StateSpace(tuple(states))
    if space.size != s:
        raise ShapeMismatch(f"{space.size} labels for a {s}x{s} matrix")
    off = arr[~np.eye(s, dtype=bool)]
    if off.size and off.min() < 0:
        raise NegativeOffDiagonal(f"min off-diagonal rate {off.min()}")
    sums = arr.sum(axis=0)
    worst = float(np.abs(sums).max())
    if worst > GENERATOR_SUM_TOL:
        raise ColumnSumNonzero(f"column sums deviate by {worst}")
    return MarkovGenerator(space, _frozen_array(arr))


@dataclass(frozen=True)
class StochasticMatrix:
    states: StateSpace
    M: np.ndarray

    @staticmethod
    def make(states: StateSpace, M: np.ndarray) -> "StochasticMatrix":
        arr = np.array(M, dtype=float)
        if arr.shape != (states.size, states.size):
            raise ShapeMismatch(f"matrix shape {arr.shape} vs {states.size} states")
        if arr.min() < -NEGATIVE_CLAMP:
            raise MarkovError(f"entry {arr.min()} below the roundoff clamp")
        arr[arr < 0] = 0.0
        dev = float(np.abs(arr.sum(axis=0) - 1.0).max())
        if dev > COLUMN_SUM_TOL:
            raise MarkovError(f"column sums deviate from 1 by {dev}")
        return StochasticMatrix(states, _frozen_array(arr))

    def apply(self, f: "Distribution") -> "Distribution":
        _check_same_states(self.states, f.states)
        return Distribution.make(self.states, self.M @ f.p)


@dataclass(frozen=True)
class Distribution:
    states: StateSpace
    p: np.ndarray

    @staticmethod
    def make(states: StateSpace, p: Any) -> "Distribution":
        arr = np.array(p, dtype=float)
        if arr.shape != (states.size,):
            raise ShapeMismatch(f"vector shape {arr.shape} vs {states.size} states")
        if arr.min() < -NEGATIVE_CLAMP:
            raise MarkovError(f"negative probability {arr.min()}")
        arr[arr < 0] = 0.0
        if abs(float(arr.sum()) - 1.0) > 1e-12:
            raise MarkovError(f"probabilities sum to {arr.sum()}")
        return Distribution(states, _frozen_array(arr))

    @staticmethod
    def uniform(states: StateSpace) -> "Distribution":
        return Distribution.make(states, np.full(states.size, 1.0 / states.size))

    @staticmethod
    def point(states: StateSpace, label: str) -> "Distribution":
        p = np.zeros(states.size)
        p[states.index(label)] = 1.0
        return Distribution.make(states, p)


def _expm_core(A: np.ndarray) -> np.ndarray:
    """Scaling and squaring with a machine-precision truncated series."""
    norm = float(np.abs(A).sum(axis=0).max())
    squarings = 0 if norm <= 1.0 else int(math.ceil(math.log2(norm)))
    B = A / (2.0 ** squarings)
    s = A.shape[0]
    term = np.eye(s)
    total = np.eye(s)
    for k in range(1, 120):
        term = term @ B / k
        total = total + term
        if float(np.abs(term).max()) < 1e-18 * max(1.0, float(np.abs(total).max())):
            break
    for _ in range(squarings):
        total = total @ total
    return total


def expm(g: MarkovGenerator, t: float) -> StochasticMatrix:
    """The transition matrix exp(tH) for a finite time t >= 0."""
    t = float(t)
    if math.isnan(t) or math.isinf(t):
        raise NonFiniteTime("use limit_operator for the infinite-time matrix")
    if t < 0:
        raise NegativeTime(f"time {t} < 0")
    return StochasticMatrix.make(g.states, _expm_core(t * g.H))


def limit_operator(g: MarkovGenerator) -> StochasticMatrix:
    """The infinite-time limit of exp(tH), computed by repeated squaring of
    the time-1 matrix until the Cauchy increment is below tolerance."""
    M = np.array(expm(g, 1.0).M)
    for _ in range(MAX_DOUBLINGS):
        M2 = M @ M
        gap = float(np.abs(M2 - M).sum(axis=1).max())
        M = M2
        if gap < LIMIT_TOL:
            resid = float(np.abs(M @ M - M).sum(axis=1).max())
            if resid > IDEMPOTENT_TOL:
                raise NoConvergence(f"limit candidate is not idempotent: {resid}")
            return StochasticMatrix.make(g.states, M)
    raise NoConvergence(f"doubling cap hit; last increment {gap}")


def semigroup_defect(g: MarkovGenerator, s: float, t: float) -> float:
    """Max-entry gap between exp((s+t)H) and exp(sH) exp(tH)."""
    lhs = expm(g, s + t).M
    rhs = expm(g, s).M @ expm(g, t).M
    return float(np.abs(lhs - rhs).max())


@dataclass(frozen=True)
class Semigroup:
    """The one-parameter family t -> exp(tH) of a generator."""

    generator: MarkovGenerator

    def at(self, t: float) -> StochasticMatrix:
        return expm(self.generator, t)

    @property
    def states(self) -> StateSpace:
        return self.generator.states


DNA = ("A", "T", "C", "G")


def jukes_cantor(mu: float, k: int = 4) -> MarkovGenerator:
    """Uniform substitution rates: every state flips to every other at rate mu."""
    if not (isinstance(mu, (int, float)) and math.isfinite(mu) and mu > 0):
        raise BadRate(f"rate must be finite and positive, got {mu!r}")
    if not (isinstance(k, int) and k >= 2):
        raise BadAlphabet(f"alphabet size must be an int >= 2, got {k!r}")
    labels = DNA if k == 4 else tuple(f"S{i}" for i in range(k))
    H = np.full((k, k), float(mu))
    np.fill_diagonal(H, -(k - 1) * float(mu))
    return validate_generator(H, labels)


def site_product(g: MarkovGenerator, sites: int) -> MarkovGenerator:
    """Independent sites evolving in parallel: the Kronecker-sum generator
    on the product state space, so exp(tH_N) factors as the N-fold tensor
    power of exp(tH)."""
    if not (isinstance(sites, int) and sites >= 1):
        raise MarkovError(f"site count must be an int >= 1, got {sites!r}")
    s = g.size
    if s ** sites > 64:
        raise SizeCap(f"{s}^{sites} states exceeds the cap of 64")
    if sites == 1:
        return g
    eye = np.eye(s)
    total = np.zeros((s ** sites, s ** sites))
    for j in range(sites):
        factors = [eye] * sites
        factors[j] = np.asarray(g.H)
        term = factors[0]
        for f in factors[1:]:
            term = np.kron(term, f)
        total += term
    joiner = "" if all(len(l) == 1 for l in g.states.labels) else "|"
    labels = g.states.labels
    for _ in range(sites - 1):
        labels = tuple(a + joiner + b for a in labels for b in g.states.labels)
    return validate_generator(total, labels)


# ---------------------------------------------------------------------------
# stochastic simulation along a tree
# ---------------------------------------------------------------------------

def _evolve(rng: np.random.Generator, H: np.ndarray, start: np.ndarray,
            t: float) -> np.ndarray:
    """Jump-chain simulation: exponential holding times at rate -H[x,x],
    jump kernel proportional to the off-diagonal entries of column x."""
    s = H.shape[0]
    rates = -np.diag(H).copy()
    cum = np.zeros((s, s))
    for j in range(s):
        if rates[j] > 0:
            col = H[:, j].copy()
            col[j] = 0.0
            cum[j] = np.cumsum(col / rates[j])
    x = np.array(start, dtype=np.int64)
    remaining = np.full(x.shape[0], float(t))
    while True:
        active = np.nonzero((remaining > 0) & (rates[x] > 0))[0]
        if active.size == 0:
            return x
        dt = rng.exponential(1.0, size=active.size) / rates[x[active]]
        rem = remaining[active] - dt
        remaining[active] = rem
        jump = active[rem > 0]
        if jump.size:
            u = rng.random(jump.size)
            targets = np.empty(jump.size, dtype=np.int64)
            xs = x[jump]
            for j in np.unique(xs):
                mask = xs == j
                targets[mask] = np.searchsorted(cum[j], u[mask], side="right")
            x[jump] = np.minimum(targets, s - 1)


def simulate_branching(tree: PhyloTree, g: MarkovGenerator, root: Distribution,
                       seed: int, samples: int) -> np.ndarray:
    """Empirical joint leaf-state counts from ``samples`` runs of the
    branching walk: draw the root state, evolve along each edge for its
    length, copy the state to every child at each vertex.  Deterministic
    for a fixed seed.  Returns an integer array of shape (size,) * n."""
    _check_same_states(g.states, root.states)
    if samples < 1:
        raise MarkovError("need at least one sample")
    if tree.is_extended:
        raise NonFiniteTime("simulation needs finite edge lengths")
    rng = np.random.default_rng(seed)
    s = g.size
    cut = np.cumsum(root.p)
    start = np.searchsorted(cut, rng.random(samples), side="right")
    start = np.minimum(start, s - 1).astype(np.int64)
    leaf_states: dict[int, np.ndarray] = {}

    def walk(node: int, incoming: np.ndarray) -> None:
        here = _evolve(rng, np.asarray(g.H), incoming, tree.length(node))
        if node > 0:
            leaf_states[node] = here
            return
        for c in tree.shape.child_map[node]:
            walk(c, here)

    walk(tree.shape.root, start)
    flat = np.zeros(samples, dtype=np.int64)
    for j in range(1, tree.n + 1):
        flat = flat * s + leaf_states[j]
    counts = np.bincount(flat, minlength=s ** tree.n)
    return counts.reshape((s,) * tree.n)


# ---------------------------------------------------------------------------
# JSON schemas shared with the command line
# ---------------------------------------------------------------------------

def matrix_to_json(states: StateSpace, M: np.ndarray) -> dict:
    return {"states": list(states.labels),
            "rows": [[float(x) for x in row] for row in np.asarray(M)]}


def generator_from_json(doc: Mapping) -> MarkovGenerator:
    try:
        return validate_generator(doc["rows"], tuple(doc["states"]))
    except KeyError as exc:
        raise MarkovError(f"matrix JSON needs key {exc}") from exc


def distribution_from_json(doc: Mapping) -> Distribution:
    try:
        return Distribution.make(StateSpace(tuple(doc["states"])), doc["p"])
    except KeyError as exc:
        raise MarkovError(f"distribution JSON needs key {exc}") from exc


def distribution_to_json(f: Distribution) -> dict:
    return {"states": list(f.states.labels), "p": [float(x) for x in f.p]}
