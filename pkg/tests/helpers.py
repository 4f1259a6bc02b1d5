"""Builders for descriptor sets and submissions with known match structure.

All descriptor constructions live on the first axis of the vector space:
rows inside one block sit 100 apart, distinct blocks sit at least 10_000
apart, and a "shared" block reappears shifted by 0.01. Under the 0.75 ratio
test this makes every intended match unambiguous (0.01 vs ~100) and every
unintended pair hopeless (nearest and second nearest nearly equal).
"""

from __future__ import annotations

import numpy as np

from crowdreport.model import GeoPoint, KeypointDescriptorSet, Submission

EPS = 0.01


def axis_rows(values: list[float], dim: int = 4) -> np.ndarray:
    rows = np.zeros((len(values), dim))
    rows[:, 0] = values
    return rows


def block(base: float, count: int = 10, step: float = 100.0) -> list[float]:
    return [base + i * step for i in range(count)]


def descriptor_set(values: list[float], dim: int = 4) -> KeypointDescriptorSet:
    return KeypointDescriptorSet(axis_rows(values, dim))


def chain_sets(length: int, k: int = 10, dim: int = 4) -> list[KeypointDescriptorSet]:
    """Sets where consecutive entries share exactly one k-block.

    Adjacent sets match k keypoints in both directions; non-adjacent sets
    match none. length=3 gives the classic A~B, B~C, A!~C triple.
    """
    if length < 2:
        raise ValueError("chain needs at least 2 sets")
    shared_blocks = [block(1.0e5 * (i + 1), k) for i in range(length - 1)]
    sets = []
    for i in range(length):
        values: list[float] = []
        if i > 0:
            values += [v + EPS for v in shared_blocks[i - 1]]
        if i < length - 1:
            values += shared_blocks[i]
        sets.append(descriptor_set(values, dim))
    return sets


def sharing_pair(k_shared: int, dim: int = 4) -> tuple[KeypointDescriptorSet, KeypointDescriptorSet]:
    """Two sets sharing exactly k_shared near-identical descriptors; the
    rest of each set is far from everything in the other."""
    shared = block(0.0, k_shared)
    x = descriptor_set(shared + block(3.0e4, 6), dim)
    y = descriptor_set([v + EPS for v in shared] + block(6.0e4, 6), dim)
    return x, y


def make_submission(
    sid: str,
    task_id: str = "t1",
    worker: str = "w0",
    t: int = 0,
    lat: float = 0.0,
    lon: float = 0.0,
    keypoints: KeypointDescriptorSet | None = None,
    feature: np.ndarray | None = None,
    dim: int = 8,
) -> Submission:
    return Submission(
        submission_id=sid,
        task_id=task_id,
        worker_id=worker,
        captured_at=t,
        location=GeoPoint(lat, lon),
        keypoints=keypoints if keypoints is not None else KeypointDescriptorSet.empty(),
        global_feature=feature if feature is not None else np.zeros(dim),
    )
