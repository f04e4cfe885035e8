"""Rooted trees with numbered leaves, directed toward the root.

A tree with n leaves is a finite set of edges, each pointing from its
source (a vertex or a leaf label 1..n) to its target (a vertex or the
root marker 0).  The source map is a bijection onto vertices-plus-leaves,
so every node has exactly one outgoing edge and we identify each edge
with its source node.  Nodes are plain ints: leaves are 1..n, internal
vertices are negative ids, 0 is the root marker and never stored as a
node.

A planar tree additionally orders the children of every vertex.  The
same concrete class carries both readings: compare planar-canonical
forms for planar isomorphism, unordered-canonical forms for plain
isomorphism of rooted trees.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Iterable, Mapping, Sequence


class TreeError(ValueError):
    """Base class for tree construction and manipulation errors."""


class EmptyEdgeSet(TreeError):
    pass


class SourceNotBijective(TreeError):
    pass


class NoRootEdge(TreeError):
    pass


class MultipleRootEdges(TreeError):
    pass


class UnreachableRoot(TreeError):
    pass


class UnknownVertex(TreeError):
    pass


class LeafIndexOutOfRange(TreeError):
    pass


class PermutationSizeMismatch(TreeError):
    pass


class NotInternalEdge(TreeError):
    pass


class InvalidSubtree(TreeError):
    pass


@dataclass(frozen=True)
class PlanarTree:
    """A rooted tree with ordered children, leaves 1..n and vertex ids < 0.

    ``root`` is the source node of the root edge.  ``children`` lists, for
    each vertex, the ordered tuple of its child nodes (children of a vertex
    are the sources of the edges targeting it).
    """

    n: int
    root: int
    children: tuple[tuple[int, tuple[int, ...]], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        vertex_ids = set()
        for v, kids in self.children:
            if not isinstance(v, int) or v >= 0:
                raise TreeError(f"vertex id {v!r} must be a negative int")
            if v in vertex_ids:
                raise TreeError(f"duplicate vertex id {v}")
            vertex_ids.add(v)
            for c in kids:
                if c in seen:
                    raise SourceNotBijective(f"node {c} has two outgoing edges")
                seen.add(c)
        if self.root in seen:
            raise MultipleRootEdges("root edge source also appears as a child")
        seen.add(self.root)
        leaves = {u for u in seen if u > 0}
        if leaves != set(range(1, self.n + 1)):
            raise SourceNotBijective(
                f"leaf labels {sorted(leaves)} do not cover 1..{self.n}")
        if {u for u in seen if u < 0} != vertex_ids:
            raise UnreachableRoot("some vertex is not connected to the root")
        cmap = dict(self.children)
        reached = 0
        stack = [self.root]
        while stack:
            u = stack.pop()
            reached += 1
            if u < 0:
                stack.extend(cmap[u])
        if reached != self.n + len(vertex_ids):
            raise UnreachableRoot("some node cannot reach the root")

    # -- basic accessors -------------------------------------------------

    @cached_property
    def child_map(self) -> dict[int, tuple[int, ...]]:
        return dict(self.children)

    @cached_property
    def parent(self) -> dict[int, int]:
        """Target of each node's outgoing edge; the root maps to 0."""
        par = {self.root: 0}
        for v, kids in self.children:
            for c in kids:
                par[c] = v
        return par

    @cached_property
    def vertices(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.children)

    @property
    def num_vertices(self) -> int:
        return len(self.children)

    @cached_property
    def nodes(self) -> tuple[int, ...]:
        """All edge sources: every leaf and every vertex."""
        return tuple(range(1, self.n + 1)) + self.vertices

    def arity(self, v: int) -> int:
        if v not in self.child_map:
            raise UnknownVertex(f"no vertex {v}")
        return len(self.child_map[v])

    def is_internal_edge(self, u: int) -> bool:
        """The edge out of node ``u`` is internal when both ends are vertices."""
        return u < 0 and self.parent[u] < 0

    def internal_edge_sources(self) -> tuple[int, ...]:
        return tuple(v for v in self.vertices if self.parent[v] < 0)

    def leaves_below(self, u: int) -> frozenset[int]:
        if u > 0:
            return frozenset((u,))
        acc: set[int] = set()
        stack = [u]
        while stack:
            x = stack.pop()
            if x > 0:
                acc.add(x)
            else:
                stack.extend(self.child_map[x])
        return frozenset(acc)

    def leaf_order(self) -> tuple[int, ...]:
        """Leaf labels in planar (left to right, depth first) order."""
        out: list[int] = []
        stack = [self.root]
        while stack:
            x = stack.pop()
            if x > 0:
                out.append(x)
            else:
                stack.extend(reversed(self.child_map[x]))
        return tuple(out)

    # -- operations ------------------------------------------------------

    def graft(self, i: int, inner: "PlanarTree") -> "PlanarTree":
        """Identify ``inner``'s root edge with this tree's i-th leaf edge.

        Leaves of this tree strictly below i keep their labels, leaves of
        ``inner`` shift up by i - 1, remaining leaves of this tree shift up
        by inner.n - 1.  The identified edge takes inner's position in the
        child order at the attachment vertex.
        """
        m, n = self.n, inner.n
        if not 1 <= i <= m:
            raise LeafIndexOutOfRange(f"leaf index {i} not in 1..{m}")
        shift = min(self.vertices, default=0)

        def relabel_inner(u: int) -> int:
            return u + i - 1 if u > 0 else u + shift

        def relabel_outer(u: int) -> int:
            return u + n - 1 if u > i else u

        kids: dict[int, tuple[int, ...]] = {}
        for v, cs in inner.children:
            kids[v + shift] = tuple(relabel_inner(c) for c in cs)
        graft_node = relabel_inner(inner.root)
        for v, cs in self.children:
            kids[v] = tuple(
                graft_node if c == i else relabel_outer(c) for c in cs)
        root = graft_node if self.root == i else relabel_outer(self.root)
        return PlanarTree(m + n - 1, root, _freeze(kids))

    def permute_leaves(self, sigma: Sequence[int]) -> "PlanarTree":
        """Right action: the leaf labelled k is relabelled sigma^-1(k)."""
        inv = _inverse_perm(sigma, self.n)

        def rl(u: int) -> int:
            return inv[u] if u > 0 else u

        kids = {v: tuple(rl(c) for c in cs) for v, cs in self.children}
        return PlanarTree(self.n, rl(self.root), _freeze(kids))

    def permute_children(self, v: int, sigma: Sequence[int]) -> "PlanarTree":
        """Reorder the children of ``v`` so position p holds child sigma^-1(p)."""
        k = self.arity(v)
        inv = _inverse_perm(sigma, k)
        kids = dict(self.children)
        old = kids[v]
        kids[v] = tuple(old[inv[p] - 1] for p in range(1, k + 1))
        return PlanarTree(self.n, self.root, _freeze(kids))

    def contract_edges(self, sources: Iterable[int]) -> "PlanarTree":
        """Contract the internal edges out of ``sources``, merging endpoints.

        Each contracted vertex's children are spliced into its parent's
        child order at the contracted edge's position.  The surviving merged
        vertex keeps the lowest target's id.
        """
        gone = set(sources)
        for u in gone:
            if u >= 0 or u not in self.parent:
                raise NotInternalEdge(f"{u} is not a vertex of this tree")
            if not self.is_internal_edge(u):
                raise NotInternalEdge(f"edge out of {u} is not internal")

        def splice(cs: tuple[int, ...]) -> tuple[int, ...]:
            out: list[int] = []
            for c in cs:
                if c in gone:
                    out.extend(splice(self.child_map[c]))
                else:
                    out.append(c)
            return tuple(out)

        kids = {v: splice(cs) for v, cs in self.children if v not in gone}
        return PlanarTree(self.n, self.root, _freeze(kids))

    def contract_edge(self, u: int) -> "PlanarTree":
        return self.contract_edges((u,))

    def insert_vertex(self, u: int, new_id: int | None = None) -> "PlanarTree":
        """Subdivide the edge out of ``u`` with a fresh unary vertex."""
        w = new_id if new_id is not None else min(self.vertices, default=0) - 1
        kids = {v: tuple(w if c == u else c for c in cs)
                for v, cs in self.children}
        kids[w] = (u,)
        root = w if self.root == u else self.root
        return PlanarTree(self.n, root, _freeze(kids))

    # -- canonical forms ---------------------------------------------------

    def canonical(self, mode: str = "unordered",
                  edge_key: Callable[[int], str] | None = None,
                  vertex_key: Callable[[int], str] | None = None,
                  ) -> tuple["PlanarTree", str, dict[int, int]]:
        """Canonical representative, its key string, and the vertex renaming.

        Two trees are isomorphic as planar trees (mode="planar") or as plain
        rooted trees (mode="unordered") exactly when their canonical keys
        agree.  Vertices of the representative are renumbered -1, -2, ... in
        depth-first order; in unordered mode children are sorted by their
        encoding first.  ``edge_key``/``vertex_key`` let callers mix edge and
        vertex labels into the encoding.
        """
        if mode not in ("unordered", "planar"):
            raise ValueError(f"unknown mode {mode!r}")

        def enc(u: int) -> tuple[str, tuple]:
            prefix = edge_key(u) + ":" if edge_key else ""
            if u > 0:
                return prefix + "L" + str(u), (u, ())
            pieces = [enc(c) for c in self.child_map[u]]
            if mode == "unordered":
                pieces.sort(key=lambda p: p[0])
            suffix = "@" + vertex_key(u) if vertex_key else ""
            key = prefix + "(" + ",".join(p[0] for p in pieces) + ")" + suffix
            return key, (u, tuple(p[1] for p in pieces))

        key, order_tree = enc(self.root)
        rename: dict[int, int] = {}
        kids: dict[int, tuple[int, ...]] = {}

        def rebuild(node: tuple) -> int:
            u, sub = node
            if u > 0:
                return u
            new = -(len(rename) + 1)
            rename[u] = new
            kids[new] = tuple(rebuild(s) for s in sub)
            return new

        root = rebuild(order_tree)
        return PlanarTree(self.n, root, _freeze(kids)), key, rename


RootedTree = PlanarTree


def _freeze(kids: Mapping[int, Sequence[int]]) -> tuple[tuple[int, tuple[int, ...]], ...]:
    return tuple(sorted((v, tuple(cs)) for v, cs in kids.items()))


def _node_depth(shape: PlanarTree, u: int) -> int:
    d = 0
    while u != 0:
        u = shape.parent[u]
        d += 1
    return d


def _inverse_perm(sigma: Sequence[int], n: int) -> dict[int, int]:
    sig = tuple(sigma)
    if sorted(sig) != list(range(1, n + 1)):
        raise PermutationSizeMismatch(
            f"{sig} is not a permutation of 1..{n}")
    return {sig[j]: j + 1 for j in range(n)}


def compose_perms(sigma: Sequence[int], tau: Sequence[int]) -> tuple[int, ...]:
    """(sigma tau)(k) = sigma(tau(k))."""
    return tuple(sigma[t - 1] for t in tau)


def invert_perm(sigma: Sequence[int]) -> tuple[int, ...]:
    inv = _inverse_perm(sigma, len(tuple(sigma)))
    return tuple(inv[k] for k in range(1, len(inv) + 1))


def make_tree(n: int, root: int, children: Mapping[Any, Sequence[Any]]) -> PlanarTree:
    """Build a tree from any hashable vertex ids; leaves are ints 1..n.

    Vertex ids are renamed to fresh negative ints (insertion order), so the
    input may use strings or nonnegative ints for vertices.  Vertices
    appearing only as children (termini) get an empty child list.
    """
    fresh: dict[Any, int] = {}

    def node_id(u: Any) -> int:
        if isinstance(u, int) and 0 < u <= n:
            return u
        if u not in fresh:
            fresh[u] = -(len(fresh) + 1)
        return fresh[u]

    kids = {}
    for v in children:
        vid = node_id(v)
        if vid > 0:
            raise TreeError(f"leaf {v} cannot have children")
        kids[vid] = tuple(node_id(c) for c in children[v])
    for vid in fresh.values():
        kids.setdefault(vid, ())
    return PlanarTree(n, node_id(root), _freeze(kids))


def validate(n: int,
             vertices: Iterable[Any],
             edges: Iterable[Any],
             source: Mapping[Any, Any],
             target: Mapping[Any, Any],
             child_order: Mapping[Any, Sequence[Any]] | None = None,
             ) -> PlanarTree:
    """Check a raw (vertices, edges, source, target) description.

    Raises the specific violation: EmptyEdgeSet, SourceNotBijective,
    NoRootEdge / MultipleRootEdges, or UnreachableRoot.  ``child_order``
    optionally fixes a planar structure per vertex, as a list of edge ids;
    without it children are ordered by their string form, which is the
    right reading for a plain rooted tree (compare unordered forms).
    """
    vset = set(vertices)
    eset = set(edges)
    if not eset:
        raise EmptyEdgeSet("a tree has at least its root edge")
    amb = {v for v in vset if isinstance(v, int) and 0 <= v <= n}
    if amb:
        raise TreeError(f"vertex ids {sorted(amb)} collide with leaf labels")

    domain = {("v", v) for v in vset} | {("l", j) for j in range(1, n + 1)}
    sources_seen = set()
    for e in eset:
        if e not in source:
            raise SourceNotBijective(f"edge {e!r} has no source")
        s = source[e]
        tag = ("v", s) if s in vset else ("l", s)
        if tag not in domain:
            raise SourceNotBijective(f"edge {e!r} has source {s!r} outside the tree")
        if tag in sources_seen:
            raise SourceNotBijective(f"two edges share the source {s!r}")
        sources_seen.add(tag)
    if sources_seen != domain:
        missing = domain - sources_seen
        raise SourceNotBijective(f"nodes {sorted(map(str, missing))} have no outgoing edge")

    root_edges = [e for e in eset if target.get(e) == 0]
    if not root_edges:
        raise NoRootEdge("no edge targets the root 0")
    if len(root_edges) > 1:
        raise MultipleRootEdges(f"{len(root_edges)} edges target the root 0")
    for e in eset:
        t = target.get(e)
        if t != 0 and t not in vset:
            raise TreeError(f"edge {e!r} has target {t!r} outside the tree")

    by_target: dict[Any, list[Any]] = {v: [] for v in vset}
    for e in eset:
        if target[e] != 0:
            by_target[target[e]].append(e)
    if child_order is not None:
        for v in vset:
            given = list(child_order.get(v, ()))
            if sorted(map(str, given)) != sorted(map(str, by_target[v])):
                raise TreeError(
                    f"child order of {v!r} does not list exactly its children")
            by_target[v] = given
    else:
        for v in vset:
            by_target[v].sort(key=str)

    kids = {v: [source[e] for e in by_target[v]] for v in vset}
    root_src = source[root_edges[0]]
    try:
        return make_tree(n, root_src, {v: kids[v] for v in vset})
    except SourceNotBijective:
        raise
    except TreeError as exc:
        # make_tree only fails here when some vertex cannot reach the root
        raise UnreachableRoot(str(exc)) from exc


def canonical_form(t: PlanarTree, mode: str = "unordered") -> tuple[PlanarTree, str]:
    rep, key, _ = t.canonical(mode)
    return rep, key


def isomorphic(t1: PlanarTree, t2: PlanarTree, mode: str = "unordered") -> bool:
    return canonical_form(t1, mode)[1] == canonical_form(t2, mode)[1]


def corolla(n: int) -> PlanarTree:
    """The unique shape with one vertex and n leaf edges."""
    return PlanarTree(n, -1, ((-1, tuple(range(1, n + 1))),))


def unit_tree() -> PlanarTree:
    """The 1-leaf tree with no vertices at all."""
    return PlanarTree(1, 1, ())


@dataclass(frozen=True)
class Subtree:
    """A connected piece of a host tree, determined by its vertex set.

    The subtree owns every edge into or out of one of its vertices; the one
    edge leaving the vertex set is its root edge, the sources outside the
    vertex set form its leaf-like boundary ``in_set``.
    """

    host: PlanarTree
    vs: frozenset[int]

    def __post_init__(self) -> None:
        if not self.vs:
            if self.host.num_vertices:
                raise InvalidSubtree("empty subtrees exist only in the bare tree")
            return
        unknown = self.vs - set(self.host.vertices)
        if unknown:
            raise InvalidSubtree(f"not vertices of the host: {sorted(unknown)}")
        exits = [v for v in self.vs if self.host.parent[v] not in self.vs]
        if len(exits) != 1:
            raise InvalidSubtree(
                f"{len(exits)} edges leave the vertex set; a subtree has exactly one")

    @cached_property
    def root_source(self) -> int:
        """Source of the subtree's root edge."""
        if not self.vs:
            return self.host.root
        (exit_v,) = [v for v in self.vs if self.host.parent[v] not in self.vs]
        return exit_v

    @property
    def root_target(self) -> int:
        """The host node playing the role of the subtree's root marker."""
        return self.host.parent[self.root_source]

    @cached_property
    def edge_sources(self) -> frozenset[int]:
        out = set(self.vs)
        for v in self.vs:
            out.update(self.host.child_map[v])
        out.add(self.root_source)
        return frozenset(out)

    @cached_property
    def in_set(self) -> frozenset[int]:
        return self.edge_sources - self.vs

    def internal_edge_sources(self) -> tuple[int, ...]:
        return tuple(v for v in self.vs if self.host.parent[v] in self.vs)


def contract_subtree(t: PlanarTree, s: Subtree) -> PlanarTree:
    if s.host is not t and s.host != t:
        raise InvalidSubtree("subtree belongs to a different host")
    return t.contract_edges(s.internal_edge_sources())


@dataclass(frozen=True)
class LabelledTree:
    """A planar tree whose vertices carry labels (stored as sorted pairs)."""

    shape: PlanarTree
    vlabels: tuple[tuple[int, Any], ...]

    @staticmethod
    def make(shape: PlanarTree, labels: Mapping[int, Any]) -> "LabelledTree":
        if set(labels) != set(shape.vertices):
            raise TreeError("labels must cover exactly the vertices")
        return LabelledTree(shape, tuple(sorted(labels.items())))

    @cached_property
    def label_map(self) -> dict[int, Any]:
        return dict(self.vlabels)

    @property
    def n(self) -> int:
        return self.shape.n

    def label(self, v: int) -> Any:
        return self.label_map[v]

    def graft(self, i: int, inner: "LabelledTree") -> "LabelledTree":
        shifted = self.shape.graft(i, inner.shape)
        shift = min(self.shape.vertices, default=0)
        labels = dict(self.vlabels)
        for v, lab in inner.vlabels:
            labels[v + shift] = lab
        return LabelledTree.make(shifted, labels)

    def permute_leaves(self, sigma: Sequence[int]) -> "LabelledTree":
        return LabelledTree(self.shape.permute_leaves(sigma), self.vlabels)

    def permute_children(self, v: int, sigma: Sequence[int]) -> "LabelledTree":
        return LabelledTree(self.shape.permute_children(v, sigma), self.vlabels)

    def relabel(self, v: int, new_label: Any) -> "LabelledTree":
        labels = dict(self.vlabels)
        labels[v] = new_label
        return LabelledTree.make(self.shape, labels)

    def insert_vertex(self, u: int, label: Any) -> "LabelledTree":
        w = min(self.shape.vertices, default=0) - 1
        shape = self.shape.insert_vertex(u, w)
        labels = dict(self.vlabels)
        labels[w] = label
        return LabelledTree.make(shape, labels)

    def contract_edge(self, u: int,
                      compose: Callable[[Any, int, Any], Any]) -> "LabelledTree":
        """Contract the internal edge out of ``u``; the merged vertex is
        labelled compose(parent label, position of u, label of u)."""
        p = self.shape.parent.get(u)
        if u >= 0 or p is None or p >= 0:
            raise NotInternalEdge(f"edge out of {u!r} is not internal")
        pos = self.shape.child_map[p].index(u) + 1
        labels = dict(self.vlabels)
        merged = compose(labels.pop(p), pos, labels.pop(u))
        shape = self.shape.contract_edge(u)
        labels[p] = merged
        return LabelledTree.make(shape, labels)

    def contract_edges(self, sources: Iterable[int],
                       compose: Callable[[Any, int, Any], Any]) -> "LabelledTree":
        """Contract several internal edges, innermost first, so nested merges
        read as f o_i (g o_j h).  Any order gives the same result when
        ``compose`` is operadic composition."""
        t = self
        remaining = set(sources)
        while remaining:
            u = max(remaining, key=lambda v: (_node_depth(t.shape, v), v))
            t = t.contract_edge(u, compose)
            remaining.discard(u)
        return t

    def canonical(self, mode: str = "unordered",
                  label_key: Callable[[Any], str] = repr,
                  ) -> tuple["LabelledTree", str]:
        labels = self.label_map
        shape, key, rename = self.shape.canonical(
            mode, vertex_key=lambda v: label_key(labels[v]))
        new_labels = {rename[v]: labels[v] for v in labels}
        return LabelledTree.make(shape, new_labels), key
