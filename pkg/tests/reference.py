"""Independent reference implementations used as test oracles.

Everything here is deliberately written the dumb way (brute force, plain
Python, different formulas where possible) so agreement with the package is
evidence, not tautology.
"""

from __future__ import annotations

import math
from collections import defaultdict
from itertools import combinations
from typing import Iterable, Sequence


def brute_match_count(a: Sequence[Sequence[float]], b: Sequence[Sequence[float]], ratio: float) -> int:
    """All-pairs nearest/second-nearest ratio test, no vectorization."""
    if len(a) == 0 or len(b) < 2:
        return 0
    count = 0
    for row in a:
        dists = sorted(math.dist(row, other) for other in b)
        if dists[0] <= ratio * dists[1]:
            count += 1
    return count


def atan2_haversine_km(lat1: float, lon1: float, lat2: float, lon2: float, radius: float = 6371.0088) -> float:
    """Great-circle distance via the atan2 form (the package uses asin)."""
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dp = math.radians(lat2 - lat1)
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return radius * 2.0 * math.atan2(math.sqrt(a), math.sqrt(1.0 - a))


def plurality_winner(votes: Iterable[tuple[int, float]]) -> int:
    """Plurality with the count -> summed confidence -> smallest id chain."""
    groups: dict[int, list[float]] = defaultdict(list)
    for class_id, confidence in votes:
        groups[class_id].append(confidence)
    best_key = None
    best_id = None
    for class_id, confs in groups.items():
        key = (-len(confs), -math.fsum(confs), class_id)
        if best_key is None or key < best_key:
            best_key = key
            best_id = class_id
    if best_id is None:
        raise ValueError("no votes")
    return best_id


def brute_max_independent_set(n: int, edges: Iterable[tuple[int, int]]) -> tuple[int, tuple[int, ...]]:
    """Maximum independent set by trying subsets largest-first.

    combinations() yields lexicographically, so the first independent subset
    of the winning size is the lexicographically smallest witness.
    """
    edge_set = {frozenset(e) for e in edges}
    for size in range(n, 0, -1):
        for combo in combinations(range(n), size):
            if all(frozenset(pair) not in edge_set for pair in combinations(combo, 2)):
                return size, combo
    return 0, ()
