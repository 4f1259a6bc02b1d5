"""Exact reference for the photo-selection problem.

Builds the pairwise similarity graph over a finished stream and solves
maximum independent set exactly, so the greedy streaming tree can be scored
against the true optimum on small instances. Exponential search: instances
above MAX_EXACT_N vertices are refused, not approximated.
"""

from __future__ import annotations

from dataclasses import dataclass

from .matching import DEFAULT_RATIO, haversine_km, match_keypoints
from .model import ConstraintLayerSpec, LayerKind, Submission

MAX_EXACT_N = 24


@dataclass(frozen=True)
class SimilarityGraph:
    """Undirected graph on submission indices; an edge means the pair is
    similar under every layer predicate at once."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        for i, j in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge ({i}, {j}) is not a sorted in-range pair")


def _pair_similar(
    a: Submission,
    b: Submission,
    layers: tuple[ConstraintLayerSpec, ...],
    ratio: float,
) -> bool:
    for spec in layers:
        if spec.kind is LayerKind.TIME:
            ok = abs(a.captured_at - b.captured_at) <= spec.threshold
        elif spec.kind is LayerKind.POSITION:
            ok = haversine_km(a.location, b.location) <= spec.threshold
        else:
            # The ratio test is directional; the undirected graph calls the
            # pair similar when either direction clears k_min.
            ok = (
                match_keypoints(a.keypoints, b.keypoints, ratio) >= spec.k_min
                or match_keypoints(b.keypoints, a.keypoints, ratio) >= spec.k_min
            )
        if not ok:
            return False
    return True


def build_graph(
    submissions: list[Submission],
    layers: tuple[ConstraintLayerSpec, ...],
    ratio: float = DEFAULT_RATIO,
) -> SimilarityGraph:
    """All-pairs similarity graph (conjunction over layers)."""
    n = len(submissions)
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if _pair_similar(submissions[i], submissions[j], tuple(layers), ratio):
                edges.add((i, j))
    return SimilarityGraph(n=n, edges=frozenset(edges))


def max_independent_set(g: SimilarityGraph) -> tuple[int, tuple[int, ...]]:
    """Exact maximum independent set with a deterministic witness.

    Depth-first over vertex indices, include branch first, pruned by the
    count of vertices not yet decided. Because the include branch is
    explored first and only strictly larger solutions replace the
    incumbent, the witness is the lexicographically smallest maximum set.
    """
    if g.n > MAX_EXACT_N:
        raise ValueError(f"instance has {g.n} vertices, exact search capped at {MAX_EXACT_N}")
    if g.n == 0:
        return 0, ()

    adjacency = [0] * g.n
    for i, j in g.edges:
        adjacency[i] |= 1 << j
        adjacency[j] |= 1 << i

    best_size = -1
    best_mask = 0

    def descend(idx: int, chosen: int, size: int) -> None:
        nonlocal best_size, best_mask
        if size + (g.n - idx) <= best_size:
            return
        if idx == g.n:
            best_size = size
            best_mask = chosen
            return
        if not (adjacency[idx] & chosen):
            descend(idx + 1, chosen | (1 << idx), size + 1)
        descend(idx + 1, chosen, size)

    descend(0, 0, 0)
    witness = tuple(i for i in range(g.n) if best_mask >> i & 1)

    for i, j in g.edges:
        if best_mask >> i & 1 and best_mask >> j & 1:
            raise RuntimeError(f"witness contains edge ({i}, {j}); solver is broken")
    return best_size, witness


def coverage_ratio(tree_groups: int, oracle_size: int) -> float:
    """Greedy group count over the exact optimum; raw, unclamped."""
    if oracle_size < 1:
        raise ValueError(f"oracle size must be at least 1, got {oracle_size}")
    return tree_groups / oracle_size
