#!/usr/bin/env python3
"""Measure how far chained streams can drag grouping below the exact optimum.

Chains are the hard case for streaming deduplication: consecutive photos are
similar but the ends of the chain are not, so which photos become anchors
decides how many groups survive. This sweeps chain lengths and insertion
orders and prints, per length, the observed coverage range against the exact
maximum-independent-set size.
"""

import itertools
import math
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from crowdreport.model import ConstraintLayerSpec
from crowdreport.oracle import build_graph, max_independent_set
from crowdreport.tree import ConstraintTree
from helpers import chain_sets, make_submission

LAYERS = (ConstraintLayerSpec.from_dict({"kind": "VISUAL", "threshold": 10.0}),)
MAX_EXHAUSTIVE = 6  # all permutations up to here, sampled beyond


def coverage_for_order(order, optimum):
    tree = ConstraintTree("t1", LAYERS)
    for sub in order:
        tree.insert(sub)
    return tree.group_count / optimum


def main() -> int:
    rnd = random.Random(0)
    print(f"{'length':>6}  {'optimum':>7}  {'orders':>6}  {'min':>6}  {'mean':>6}  {'max':>6}")
    for length in range(2, 11):
        subs = [
            make_submission(f"c{i}", t=0, keypoints=kp)
            for i, kp in enumerate(chain_sets(length))
        ]
        optimum, _ = max_independent_set(build_graph(subs, LAYERS))
        assert optimum == math.ceil(length / 2)

        if length <= MAX_EXHAUSTIVE:
            orders = [list(p) for p in itertools.permutations(subs)]
        else:
            orders = [rnd.sample(subs, length) for _ in range(500)]
        covs = [coverage_for_order(order, optimum) for order in orders]
        print(
            f"{length:>6}  {optimum:>7}  {len(orders):>6}  "
            f"{min(covs):>6.3f}  {sum(covs) / len(covs):>6.3f}  {max(covs):>6.3f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
