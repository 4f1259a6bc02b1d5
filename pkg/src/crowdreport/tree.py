"""Streaming duplicate grouping over a layered constraint tree.

The tree has a bare root at layer 0, one node layer per configured
constraint, and leaf groups one level below the last constraint layer. Each
node remembers the first submission routed through it (its anchor) and all
later comparisons at that node are made against the anchor, never against a
recomputed centroid. Insertion order therefore matters: the same submissions
in a different order can produce a different grouping, which is accepted
behavior, not a defect.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .matching import DEFAULT_RATIO, haversine_km, match_keypoints
from .model import ConstraintLayerSpec, LayerKind, Submission


class TreeClosedError(RuntimeError):
    """Raised when inserting into a tree that has been sealed."""


class LeafGroup:
    """Ordered bucket of duplicate submissions.

    Members are submission ids in arrival order; the list is never empty
    once the group exists.
    """

    __slots__ = ("members",)

    def __init__(self) -> None:
        self.members: list[str] = []

    def __len__(self) -> int:
        return len(self.members)

    def __repr__(self) -> str:
        return f"LeafGroup({self.members!r})"


class TreeNode:
    """One tree node: an anchor plus ordered children.

    The root carries no anchor. Nodes on the last constraint layer own a
    LeafGroup instead of child nodes.
    """

    __slots__ = ("layer_index", "anchor", "children", "group")

    def __init__(self, layer_index: int, anchor: Submission | None) -> None:
        self.layer_index = layer_index
        self.anchor = anchor
        self.children: list[TreeNode] = []
        self.group: LeafGroup | None = None


@dataclass(frozen=True)
class HandoverResult:
    """One representative per leaf group, in group creation order."""

    representatives: tuple[str, ...]
    group_sizes: tuple[int, ...]
    redundancy_ratio: float


def _layer_distance(
    spec: ConstraintLayerSpec,
    incoming: Submission,
    anchor: Submission,
    ratio: float,
) -> tuple[float, bool]:
    """Distance of ``incoming`` from ``anchor`` under one layer, plus whether
    the pair passes the layer's threshold. Smaller distance = better match;
    the visual distance is the negated match count so that more shared
    keypoints rank closer.
    """
    if spec.kind is LayerKind.TIME:
        dt = abs(incoming.captured_at - anchor.captured_at)
        return float(dt), dt <= spec.threshold
    if spec.kind is LayerKind.POSITION:
        dkm = haversine_km(incoming.location, anchor.location)
        return dkm, dkm <= spec.threshold
    matches = match_keypoints(incoming.keypoints, anchor.keypoints, ratio)
    return -float(matches), matches >= spec.k_min


class ConstraintTree:
    """Single-writer grouping structure for one task's accepted stream.

    Callers must serialize insert() calls in arrival order; reads
    (snapshot, handover) are safe against the structure between inserts.
    """

    def __init__(
        self,
        task_id: str,
        layers: tuple[ConstraintLayerSpec, ...],
        ratio: float = DEFAULT_RATIO,
    ) -> None:
        if not layers:
            raise ValueError("a constraint tree needs at least one layer")
        self.task_id = task_id
        self.layers = tuple(layers)
        self.ratio = ratio
        self.root = TreeNode(0, None)
        self.insertion_log: list[tuple[str, tuple[int, ...]]] = []
        self._groups: list[LeafGroup] = []  # creation order, for handover
        self._closed = False

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def group_count(self) -> int:
        return len(self._groups)

    @property
    def accepted_count(self) -> int:
        return len(self.insertion_log)

    def close(self) -> None:
        self._closed = True

    def insert(self, s: Submission) -> tuple[int, ...]:
        """Route a submission to its leaf group, growing nodes as needed.

        At each layer the submission is compared against every child's
        anchor; among the children whose anchor passes the layer threshold,
        the closest one wins, oldest first on ties. With no passing child a
        new node anchored at the submission is created, which cascades into
        fresh nodes (and a fresh singleton group) on all deeper layers.
        Returns the per-layer child indices of the path taken.
        """
        if self._closed:
            raise TreeClosedError(f"tree for task {self.task_id} is closed")
        if s.task_id != self.task_id:
            raise ValueError(f"submission {s.submission_id} belongs to task {s.task_id}, not {self.task_id}")

        node = self.root
        path: list[int] = []
        for depth, spec in enumerate(self.layers, start=1):
            best_idx = -1
            best_dist = 0.0
            for idx, child in enumerate(node.children):
                dist, ok = _layer_distance(spec, s, child.anchor, self.ratio)
                if ok and (best_idx < 0 or dist < best_dist):
                    best_idx = idx
                    best_dist = dist
            if best_idx < 0:
                node.children.append(TreeNode(depth, s))
                best_idx = len(node.children) - 1
            path.append(best_idx)
            node = node.children[best_idx]

        if node.group is None:
            node.group = LeafGroup()
            self._groups.append(node.group)
        node.group.members.append(s.submission_id)
        taken = tuple(path)
        self.insertion_log.append((s.submission_id, taken))
        return taken

    def leaf_groups(self) -> list[LeafGroup]:
        """Groups in creation order."""
        return list(self._groups)

    def iter_nodes(self) -> Iterator[TreeNode]:
        """Depth-first walk over all nodes, root included."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def handover(self, policy: str) -> HandoverResult:
        """Pick one representative per group: its first or last member.

        Group order follows group creation order. The redundancy ratio is
        the fraction of accepted submissions not forwarded,
        (total - groups) / total, and 0 for an empty tree.
        """
        pick_first = str(policy).upper() == "FIRST"
        reps: list[str] = []
        sizes: list[int] = []
        for group in self._groups:
            reps.append(group.members[0] if pick_first else group.members[-1])
            sizes.append(len(group.members))
        total = sum(sizes)
        ratio = (total - len(reps)) / total if total else 0.0
        return HandoverResult(tuple(reps), tuple(sizes), ratio)

    def snapshot(self) -> dict:
        """Plain-data export of the whole tree for dashboards and replay checks.

        Inner nodes carry {layer_index, anchor, children}; each node on the
        last constraint layer gets a single child record
        {layer_index: depth+1, members: [...]} for its leaf group.
        """
        return {
            "task_id": self.task_id,
            "depth": self.depth,
            "size": self.accepted_count,
            "group_count": self.group_count,
            "root": self._node_dict(self.root),
        }

    def _node_dict(self, node: TreeNode) -> dict:
        record: dict = {
            "layer_index": node.layer_index,
            "anchor": node.anchor.submission_id if node.anchor is not None else None,
        }
        if node.group is not None:
            record["children"] = [
                {"layer_index": node.layer_index + 1, "members": list(node.group.members)}
            ]
        else:
            record["children"] = [self._node_dict(child) for child in node.children]
        return record
