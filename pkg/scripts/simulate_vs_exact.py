#!/usr/bin/env python3
"""Total variation between simulated and analytic joint leaf distributions
as the sample count grows, on a two-leaf tree under the two-state flip
process."""

import argparse

import numpy as np

from phylo.coalgebra import evaluate
from phylo.markov import Distribution, simulate_branching, validate_generator
from phylo.newick import parse_newick


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tree", default="(1:1,2:0.5):0.2;")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, nargs="+",
                    default=[100, 1000, 10000, 100000])
    args = ap.parse_args()

    g = validate_generator([[-1.0, 1.0], [1.0, -1.0]], ("a", "b"))
    f = Distribution.uniform(g.states)
    t = parse_newick(args.tree)
    exact = evaluate(t, g, f).data
    print(f"tree {args.tree}   exact joint:\n{exact}\n")
    print("  samples   total variation")
    for n in args.samples:
        counts = simulate_branching(t, g, f, seed=args.seed, samples=n)
        tv = 0.5 * float(np.abs(counts / counts.sum() - exact).sum())
        print(f"{n:9d}   {tv:.5f}")


if __name__ == "__main__":
    main()
