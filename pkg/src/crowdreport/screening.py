"""Submission screening: classify photo features, reject false submissions
immediately when the event class is known, or defer and settle by plurality
vote at close when it is not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ClassRegistry, Decision, Task, TaskMode, TaskStatus, Verdict

REASON_CLASS_MISMATCH = "class_mismatch"
REASON_MINORITY_CLASS = "minority_class"
REASON_NO_EVENT = "no_event"
REASON_PREDICTOR_UNAVAILABLE = "predictor_unavailable"


@dataclass(frozen=True)
class ClassifierModel:
    """Nearest-centroid classifier with softmax-of-negative-distance confidence.

    One centroid per registered class, all sharing the feature dimension.
    Temperature scales confidence only; the winning class is temperature
    independent.
    """

    centroids: dict[int, np.ndarray]
    temperature: float = 1.0

    def __post_init__(self) -> None:
        if not self.centroids:
            raise ValueError("model needs at least one centroid")
        if not (self.temperature > 0 and math.isfinite(self.temperature)):
            raise ValueError(f"temperature must be positive and finite, got {self.temperature}")
        dims = set()
        frozen: dict[int, np.ndarray] = {}
        for class_id, vec in self.centroids.items():
            arr = np.asarray(vec, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"centroid for class {class_id} must be a 1-D vector")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"centroid for class {class_id} has non-finite components")
            arr = arr.copy()
            arr.setflags(write=False)
            frozen[int(class_id)] = arr
            dims.add(arr.shape[0])
        if len(dims) != 1:
            raise ValueError(f"centroids disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "centroids", frozen)

    @property
    def dim(self) -> int:
        return next(iter(self.centroids.values())).shape[0]

    def covers(self, registry: ClassRegistry) -> bool:
        return set(self.centroids) == set(registry.ids())

    def to_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "centroids": {str(cid): vec.tolist() for cid, vec in self.centroids.items()},
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ClassifierModel":
        return cls(
            centroids={int(cid): np.asarray(vec, dtype=float) for cid, vec in raw["centroids"].items()},
            temperature=float(raw.get("temperature", 1.0)),
        )


def synthetic_model(registry: ClassRegistry, dim: int, scale: float = 10.0) -> ClassifierModel:
    """Well-separated demo model: class c gets centroid scale * one_hot(c).

    Intended for simulations and local serving without a trained model;
    centroid separation is scale * sqrt(2), far above unit-scale noise.
    """
    ids = registry.ids()
    if dim < max(ids) + 1:
        raise ValueError(f"dim {dim} too small for class ids up to {max(ids)}")
    centroids = {}
    for cid in ids:
        vec = np.zeros(dim)
        vec[cid] = scale
        centroids[cid] = vec
    return ClassifierModel(centroids=centroids)


def classify(model: ClassifierModel, feature: np.ndarray) -> tuple[int, float]:
    """Return (class id, confidence) for one global feature vector.

    Winner is the centroid at minimum Euclidean distance, ties to the
    smallest class id. Confidence is softmax over negative scaled distances,
    computed relative to the winning distance for numerical stability.
    """
    arr = np.asarray(feature, dtype=float)
    if arr.ndim != 1:
        raise ValueError("feature must be a 1-D vector")
    if arr.shape[0] != model.dim:
        raise ValueError(f"feature dimension {arr.shape[0]} does not match model dimension {model.dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("feature has non-finite components")

    distances = sorted(
        (float(np.linalg.norm(arr - centroid)), cid) for cid, centroid in model.centroids.items()
    )
    d_win, winner = distances[0]
    denom = math.fsum(math.exp(-(d - d_win) / model.temperature) for d, _ in distances)
    return winner, 1.0 / denom


def judge_online(task: Task, submission_id: str, class_id: int, confidence: float) -> Verdict:
    """Accept iff the predicted class is the task's expected class."""
    if task.mode is not TaskMode.ONLINE:
        raise ValueError(f"task {task.task_id} is not an online task")
    if class_id == task.expected_class:
        decision, reason = Decision.ACCEPTED, None
    else:
        decision, reason = Decision.REJECTED_FALSE, REASON_CLASS_MISMATCH
    return Verdict(
        submission_id=submission_id,
        predicted_class=class_id,
        confidence=confidence,
        decision=decision,
        reason=reason,
    )


def judge_offline_defer(task: Task, submission_id: str, class_id: int, confidence: float) -> Verdict:
    """Record the prediction and postpone the decision to close time."""
    if task.mode is not TaskMode.OFFLINE:
        raise ValueError(f"task {task.task_id} is not an offline task")
    if task.state is not TaskStatus.OPEN:
        raise ValueError(f"task {task.task_id} is closed")
    return Verdict(
        submission_id=submission_id,
        predicted_class=class_id,
        confidence=confidence,
        decision=Decision.DEFERRED,
    )


@dataclass(frozen=True)
class VoteOutcome:
    """Result of the deadline vote over deferred predictions."""

    determined_class: int
    no_event: bool
    verdicts: tuple[Verdict, ...] = field(default_factory=tuple)


def resolve_offline(
    verdicts: list[Verdict],
    registry: ClassRegistry,
) -> VoteOutcome:
    """Settle deferred verdicts by plurality over predicted classes.

    Ties break first toward the larger summed confidence, then toward the
    smaller class id; the chain is a total order, so any permutation of the
    same multiset settles identically (summed confidences use fsum so float
    rounding cannot depend on order either). A win by the normal class means
    no event happened: everything is rejected.
    """
    normal_id = registry.normal.id
    if not verdicts:
        return VoteOutcome(determined_class=normal_id, no_event=True)

    counts: dict[int, int] = {}
    confidences: dict[int, list[float]] = {}
    for v in verdicts:
        counts[v.predicted_class] = counts.get(v.predicted_class, 0) + 1
        confidences.setdefault(v.predicted_class, []).append(v.confidence)

    determined = min(
        counts,
        key=lambda cid: (-counts[cid], -math.fsum(confidences[cid]), cid),
    )

    no_event = determined == normal_id
    final: list[Verdict] = []
    for v in verdicts:
        if not no_event and v.predicted_class == determined:
            decision, reason = Decision.ACCEPTED, None
        else:
            decision = Decision.REJECTED_FALSE
            reason = REASON_NO_EVENT if no_event else REASON_MINORITY_CLASS
        final.append(
            Verdict(
                submission_id=v.submission_id,
                predicted_class=v.predicted_class,
                confidence=v.confidence,
                decision=decision,
                reason=reason,
            )
        )
    return VoteOutcome(determined_class=determined, no_event=no_event, verdicts=tuple(final))
