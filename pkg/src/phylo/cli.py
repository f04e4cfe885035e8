"""Command-line interface: thin wrappers over the library.

Tree-valued results print as canonical Newick text; structured results
print as JSON.  Diagnostics go to stderr.  Exit codes: 0 success, 1 bad
input, 2 internal invariant violation, 3 numeric non-convergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Sequence

from . import coalgebra, markov, newick, operads, treespace
from .operads import MalformedLabelling, PhyloTree, WeightedTree
from .trees import PlanarTree, TreeError, _freeze


def reporting_tol() -> float:
    """Reporting tolerance for stderr diagnostics; PHYLO_TOL overrides the
    default 1e-10.  Exact algebraic equalities are never affected."""
    try:
        return float(os.environ.get("PHYLO_TOL", "1e-10"))
    except ValueError:
        return 1e-10


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _read_json(path: str) -> Any:
    return json.loads(_read(path))


def _load_tree(path: str, allow_infinite: bool = False) -> PhyloTree:
    return newick.parse_newick(_read(path).strip(), allow_infinite=allow_infinite)


def _emit_json(doc: Any) -> None:
    print(json.dumps(doc))


def _weighted_from_json(doc: Any) -> WeightedTree:
    kids: dict[int, tuple[int, ...]] = {}
    lengths: dict[int, float] = {}
    leaves: list[int] = []
    counter = [0]

    def walk(node: Any) -> int:
        if not isinstance(node, dict) or "length" not in node:
            raise MalformedLabelling("each node needs a 'length'")
        if "leaf" in node:
            leaf = int(node["leaf"])
            leaves.append(leaf)
            lengths[leaf] = float(node["length"])
            return leaf
        if "children" not in node:
            raise MalformedLabelling("each node needs 'leaf' or 'children'")
        counter[0] -= 1
        v = counter[0]
        kids[v] = tuple(walk(c) for c in node["children"])
        lengths[v] = float(node["length"])
        return v

    root = walk(doc)
    n = len(leaves)
    if sorted(leaves) != list(range(1, n + 1)):
        raise MalformedLabelling(f"leaf labels must be 1..{n}")
    return WeightedTree.make(PlanarTree(n, root, _freeze(kids)), lengths)


def _shape_string(shape: PlanarTree) -> str:
    def render(u: int) -> str:
        if u > 0:
            return str(u)
        return "(" + ",".join(render(c) for c in shape.child_map[u]) + ")"

    return render(shape.root)


def _perm_arg(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise TreeError(f"bad permutation {text!r}") from exc


# -- subcommand bodies -------------------------------------------------------

def _cmd_validate(args: argparse.Namespace) -> int:
    t = _load_tree(args.tree)
    _emit_json({"valid": True, "n": t.n,
                "internal_edges": len(t.shape.internal_edge_sources())})
    return 0


def _cmd_canon(args: argparse.Namespace) -> int:
    print(newick.serialize_newick(_load_tree(args.tree)))
    return 0


def _cmd_compose(args: argparse.Namespace) -> int:
    outer = _load_tree(args.outer)
    inner = _load_tree(args.inner)
    print(newick.serialize_newick(operads.phylo_compose(outer, args.at, inner)))
    return 0


def _cmd_act(args: argparse.Namespace) -> int:
    t = _load_tree(args.tree)
    print(newick.serialize_newick(operads.phylo_act(t, _perm_arg(args.perm))))
    return 0


def _cmd_reduce(args: argparse.Namespace) -> int:
    w = _weighted_from_json(_read_json(args.tree))
    print(newick.serialize_newick(operads.to_phylo(operads.normal_form(w))))
    return 0


def _cmd_decompose(args: argparse.Namespace) -> int:
    t = _load_tree(args.tree)
    if t.n == 1:
        unit, length = treespace.decompose1(t)
        _emit_json({"metric": newick.serialize_newick(unit.tree),
                    "external": [length]})
        return 0
    m, ext = treespace.decompose(t)
    _emit_json({"metric": newick.serialize_newick(m.tree),
                "external": list(ext.values)})
    return 0


def _cmd_recompose(args: argparse.Namespace) -> int:
    doc = _read_json(args.factors)
    ext = [float(x) for x in doc["external"]]
    m_tree = newick.parse_newick(doc["metric"].strip())
    if m_tree.n == 1:
        if len(ext) != 1:
            raise TreeError("a 1-leaf tree has exactly one external length")
        print(newick.serialize_newick(treespace.recompose1(ext[0])))
        return 0
    m = treespace.MetricTree(m_tree)
    out = treespace.recompose(m, treespace.ExternalLengths(tuple(ext)))
    print(newick.serialize_newick(out))
    return 0


def _cmd_topologies(args: argparse.Namespace) -> int:
    tops = treespace.enumerate_binary_topologies(args.n)
    strings = sorted(_shape_string(o.shape) for o in tops)
    _emit_json({"n": args.n, "count": len(strings), "topologies": strings})
    return 0


def _cmd_dist(args: argparse.Namespace) -> int:
    x = treespace.MetricTree(_load_tree(args.x))
    y = treespace.MetricTree(_load_tree(args.y))
    d = treespace.bhv_distance(x, y, mode=args.mode)
    _emit_json({"mode": args.mode, "distance": d})
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    g = markov.generator_from_json(_read_json(args.model))
    f = markov.distribution_from_json(_read_json(args.root))
    t = _load_tree(args.tree, allow_infinite=args.extended)
    if args.extended:
        lt = coalgebra.evaluate_extended(t, g, f)
    else:
        lt = coalgebra.evaluate(t, g, f)
    mass_gap = abs(float(lt.data.sum()) - 1.0)
    if mass_gap > reporting_tol():
        print(f"warning: tensor mass off by {mass_gap:g}", file=sys.stderr)
    _emit_json(coalgebra.tensor_to_json(lt))
    return 0


def _cmd_limit(args: argparse.Namespace) -> int:
    g = markov.generator_from_json(_read_json(args.model))
    p = markov.limit_operator(g)
    _emit_json(markov.matrix_to_json(p.states, p.M))
    return 0


def _cmd_jc(args: argparse.Namespace) -> int:
    g = markov.jukes_cantor(args.mu, args.k)
    _emit_json(markov.matrix_to_json(g.states, g.H))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    g = markov.generator_from_json(_read_json(args.model))
    f = markov.distribution_from_json(_read_json(args.root))
    t = _load_tree(args.tree)
    counts = markov.simulate_branching(t, g, f, seed=args.seed,
                                       samples=args.samples)
    _emit_json({"states": list(g.states.labels), "n": t.n,
                "samples": args.samples,
                "counts": [int(c) for c in counts.reshape(-1)]})
    return 0


def _cmd_wcheck(args: argparse.Namespace) -> int:
    t = _load_tree(args.tree, allow_infinite=True)
    _emit_json({"w_member": coalgebra.w_membership(t)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phylo", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a Newick tree")
    p.add_argument("tree")
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("canon", help="canonical Newick form")
    p.add_argument("tree")
    p.set_defaults(fn=_cmd_canon)

    p = sub.add_parser("compose", help="graft B onto leaf i of A")
    p.add_argument("--at", type=int, required=True, metavar="I")
    p.add_argument("outer", metavar="A.nwk")
    p.add_argument("inner", metavar="B.nwk")
    p.set_defaults(fn=_cmd_compose)

    p = sub.add_parser("act", help="relabel leaves by a permutation")
    p.add_argument("--perm", required=True, help='e.g. "2,3,1"')
    p.add_argument("tree")
    p.set_defaults(fn=_cmd_act)

    p = sub.add_parser("reduce", help="normal form of a labelled-tree JSON file")
    p.add_argument("tree", metavar="TREE.json")
    p.set_defaults(fn=_cmd_reduce)

    p = sub.add_parser("decompose", help="split into metric tree + external lengths")
    p.add_argument("tree")
    p.set_defaults(fn=_cmd_decompose)

    p = sub.add_parser("recompose", help="rebuild a tree from decompose output")
    p.add_argument("factors", metavar="FACTORS.json")
    p.set_defaults(fn=_cmd_recompose)

    p = sub.add_parser("topologies", help="enumerate binary topologies")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(fn=_cmd_topologies)

    p = sub.add_parser("dist", help="tree-space distance between metric trees")
    p.add_argument("--mode", choices=["exact4", "cone", "auto"], default="auto")
    p.add_argument("x", metavar="X.nwk")
    p.add_argument("y", metavar="Y.nwk")
    p.set_defaults(fn=_cmd_dist)

    p = sub.add_parser("evaluate", help="joint leaf tensor of a tree under a model")
    p.add_argument("--model", required=True, metavar="H.json")
    p.add_argument("--root", required=True, metavar="f.json")
    p.add_argument("--extended", action="store_true",
                   help="accept 'inf' lengths and use the limit matrix")
    p.add_argument("tree")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("limit", help="infinite-time transition matrix")
    p.add_argument("--model", required=True, metavar="H.json")
    p.set_defaults(fn=_cmd_limit)

    p = sub.add_parser("jc", help="uniform-rate substitution generator")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--k", type=int, default=4)
    p.set_defaults(fn=_cmd_jc)

    p = sub.add_parser("simulate", help="seeded joint leaf-state counts")
    p.add_argument("--model", required=True, metavar="H.json")
    p.add_argument("--root", required=True, metavar="f.json")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("tree")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("wcheck", help="are all external edges infinite?")
    p.add_argument("tree")
    p.set_defaults(fn=_cmd_wcheck)

    return ap


_INPUT_ERRORS = (
    TreeError,
    operads.OperadError,
    treespace.TreeSpaceError,
    markov.MarkovError,
    coalgebra.CoalgebraError,
    newick.NewickError,
    json.JSONDecodeError,
    OSError,
    KeyError,
)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except markov.NoConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - invariant violation, report as a bug
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
