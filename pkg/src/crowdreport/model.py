"""Shared domain types: classes, tasks, submissions, verdicts, and reports.

Every type here is immutable after construction and validates its own
invariants, so a constructed instance is always safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

DEFAULT_FEATURE_DIM = 64
DEFAULT_DESCRIPTOR_DIM = 128


class LayerKind(str, Enum):
    """Constraint families a task can stack, one layer per kind."""

    TIME = "TIME"
    POSITION = "POSITION"
    VISUAL = "VISUAL"


class TaskMode(str, Enum):
    ONLINE = "ONLINE"
    OFFLINE = "OFFLINE"


class TaskStatus(str, Enum):
    OPEN = "OPEN"
    CLOSED = "CLOSED"


class RepresentativePolicy(str, Enum):
    FIRST = "FIRST"
    LAST = "LAST"


class Decision(str, Enum):
    ACCEPTED = "ACCEPTED"
    REJECTED_FALSE = "REJECTED_FALSE"
    DEFERRED = "DEFERRED"


@dataclass(frozen=True)
class EventClass:
    """One reportable photo class.

    Exactly one registered class carries ``is_normal`` and models everyday
    non-event photos; it can never be the target of a task.
    """

    id: int
    name: str
    is_normal: bool = False

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"class id must be non-negative, got {self.id}")
        if not self.name:
            raise ValueError("class name must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "name": self.name, "is_normal": self.is_normal}


@dataclass(frozen=True)
class ClassRegistry:
    """The closed set of event classes a deployment can report."""

    classes: tuple[EventClass, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        ids = [c.id for c in self.classes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate class ids in registry")
        normals = [c for c in self.classes if c.is_normal]
        if len(normals) != 1:
            raise ValueError("registry must contain exactly one normal class")

    @classmethod
    def default(cls) -> "ClassRegistry":
        return cls(
            (
                EventClass(0, "fire"),
                EventClass(1, "flood"),
                EventClass(2, "damaged_infrastructure"),
                EventClass(3, "normal", is_normal=True),
            )
        )

    @property
    def normal(self) -> EventClass:
        return next(c for c in self.classes if c.is_normal)

    def get(self, class_id: int) -> EventClass:
        for c in self.classes:
            if c.id == class_id:
                return c
        raise KeyError(f"unknown event class id {class_id}")

    def ids(self) -> tuple[int, ...]:
        return tuple(sorted(c.id for c in self.classes))

    def __contains__(self, class_id: object) -> bool:
        return any(c.id == class_id for c in self.classes)

    def __len__(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class GeoPoint:
    """Coordinate pair in degrees; longitude uses the (-180, 180] convention."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        lat = float(self.lat)
        lon = float(self.lon)
        if not (-90.0 <= lat <= 90.0):
            raise ValueError(f"latitude out of range [-90, 90]: {self.lat}")
        if not (-180.0 < lon <= 180.0):
            raise ValueError(f"longitude out of range (-180, 180]: {self.lon}")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", lon)

    def to_dict(self) -> dict[str, float]:
        return {"lat": self.lat, "lon": self.lon}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GeoPoint":
        return cls(lat=data["lat"], lon=data["lon"])


class KeypointDescriptorSet:
    """Precomputed local feature descriptors for one photo.

    Stored as an (n, dim) float array. All rows share one dimension and every
    component must be finite; an empty set is legal (a photo can yield no
    keypoints). The array is frozen after construction.
    """

    __slots__ = ("descriptors",)

    def __init__(self, descriptors: Sequence[Sequence[float]] | np.ndarray):
        try:
            arr = np.asarray(descriptors, dtype=float)
        except (ValueError, TypeError) as exc:
            raise ValueError(f"descriptors must share one dimension: {exc}") from exc
        if arr.size == 0:
            arr = arr.reshape(0, arr.shape[1] if arr.ndim == 2 else 0)
        if arr.ndim != 2:
            raise ValueError("descriptors must be a list of equal-length vectors")
        if arr.size and not np.isfinite(arr).all():
            raise ValueError("descriptor components must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.descriptors = arr

    @classmethod
    def empty(cls) -> "KeypointDescriptorSet":
        return cls(np.zeros((0, 0)))

    @property
    def count(self) -> int:
        return int(self.descriptors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.descriptors.shape[1])

    def to_list(self) -> list[list[float]]:
        return [[float(x) for x in row] for row in self.descriptors]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KeypointDescriptorSet):
            return NotImplemented
        return self.descriptors.shape == other.descriptors.shape and bool(
            np.array_equal(self.descriptors, other.descriptors)
        )

    def __repr__(self) -> str:
        return f"KeypointDescriptorSet(count={self.count}, dim={self.dim})"


def _as_epoch_seconds(value: Any, what: str) -> int:
    """Coerce an integral timestamp; sub-second precision is rejected."""
    if isinstance(value, bool) or value is None:
        raise ValueError(f"{what} must be an integer timestamp")
    if isinstance(value, float) and not value.is_integer():
        raise ValueError(f"{what} must be whole seconds, got {value}")
    try:
        return int(value)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{what} must be an integer timestamp") from exc


@dataclass(frozen=True, eq=False)
class Submission:
    """One worker upload: identity plus the context the server screens and
    groups on (capture time, location, local descriptors, global feature)."""

    submission_id: str
    task_id: str
    worker_id: str
    captured_at: int
    location: GeoPoint
    keypoints: KeypointDescriptorSet
    global_feature: np.ndarray
    thumbnail_ref: str | None = None

    def __post_init__(self) -> None:
        if not self.submission_id:
            raise ValueError("submission_id must be non-empty")
        object.__setattr__(self, "captured_at", _as_epoch_seconds(self.captured_at, "captured_at"))
        feat = np.asarray(self.global_feature, dtype=float)
        if feat.ndim != 1:
            raise ValueError("global_feature must be a flat vector")
        if not np.isfinite(feat).all():
            raise ValueError("global_feature components must be finite")
        feat = np.ascontiguousarray(feat)
        feat.setflags(write=False)
        object.__setattr__(self, "global_feature", feat)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Submission):
            return NotImplemented
        return (
            self.submission_id == other.submission_id
            and self.task_id == other.task_id
            and self.worker_id == other.worker_id
            and self.captured_at == other.captured_at
            and self.location == other.location
            and self.keypoints == other.keypoints
            and bool(np.array_equal(self.global_feature, other.global_feature))
            and self.thumbnail_ref == other.thumbnail_ref
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "submission_id": self.submission_id,
            "task_id": self.task_id,
            "worker_id": self.worker_id,
            "captured_at": self.captured_at,
            "location": self.location.to_dict(),
            "keypoints": self.keypoints.to_list(),
            "global_feature": [float(x) for x in self.global_feature],
            "thumbnail_ref": self.thumbnail_ref,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Submission":
        return cls(
            submission_id=str(data["submission_id"]),
            task_id=str(data["task_id"]),
            worker_id=str(data["worker_id"]),
            captured_at=data["captured_at"],
            location=GeoPoint.from_dict(data["location"]),
            keypoints=KeypointDescriptorSet(data["keypoints"]),
            global_feature=np.asarray(data["global_feature"], dtype=float),
            thumbnail_ref=data.get("thumbnail_ref"),
        )


@dataclass(frozen=True)
class ConstraintLayerSpec:
    """One similarity criterion with its requester-chosen threshold.

    Units depend on the kind: seconds for TIME, kilometers for POSITION, and
    a minimum matched-keypoint count for VISUAL.
    """

    kind: LayerKind
    threshold: float

    def __post_init__(self) -> None:
        kind = LayerKind(self.kind)
        object.__setattr__(self, "kind", kind)
        thr = float(self.threshold)
        if not math.isfinite(thr) or thr <= 0:
            raise ValueError(f"{kind.value} threshold must be positive, got {self.threshold}")
        if kind is LayerKind.VISUAL and thr != int(thr):
            raise ValueError(f"VISUAL threshold must be a positive integer, got {self.threshold}")
        object.__setattr__(self, "threshold", thr)

    @property
    def k_min(self) -> int:
        """The VISUAL threshold as the integer it is."""
        return int(self.threshold)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "threshold": self.threshold}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ConstraintLayerSpec":
        return cls(kind=data["kind"], threshold=data["threshold"])


@dataclass(frozen=True)
class Task:
    """A crowdsourcing request and the knobs that drive screening and grouping."""

    task_id: str
    name: str
    mode: TaskMode
    layers: tuple[ConstraintLayerSpec, ...]
    opened_at: int
    deadline: int
    expected_class: int | None = None
    representative_policy: RepresentativePolicy = RepresentativePolicy.LAST
    state: TaskStatus = TaskStatus.OPEN

    def __post_init__(self) -> None:
        if not self.task_id:
            raise ValueError("task_id must be non-empty")
        object.__setattr__(self, "mode", TaskMode(self.mode))
        object.__setattr__(self, "representative_policy", RepresentativePolicy(self.representative_policy))
        object.__setattr__(self, "state", TaskStatus(self.state))
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "opened_at", _as_epoch_seconds(self.opened_at, "opened_at"))
        object.__setattr__(self, "deadline", _as_epoch_seconds(self.deadline, "deadline"))
        if not self.layers:
            raise ValueError("layers must be non-empty")
        kinds = [layer.kind for layer in self.layers]
        if len(set(kinds)) != len(kinds):
            raise ValueError("duplicate layer kind")
        if self.deadline <= self.opened_at:
            raise ValueError("deadline must be after opened_at")
        if self.mode is TaskMode.ONLINE and self.expected_class is None:
            raise ValueError("missing expected_class")

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "name": self.name,
            "mode": self.mode.value,
            "expected_class": self.expected_class,
            "layers": [layer.to_dict() for layer in self.layers],
            "opened_at": self.opened_at,
            "deadline": self.deadline,
            "representative_policy": self.representative_policy.value,
            "state": self.state.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Task":
        return cls(
            task_id=data["task_id"],
            name=data.get("name", ""),
            mode=data["mode"],
            expected_class=data.get("expected_class"),
            layers=tuple(ConstraintLayerSpec.from_dict(d) for d in data["layers"]),
            opened_at=data["opened_at"],
            deadline=data["deadline"],
            representative_policy=data.get("representative_policy", RepresentativePolicy.LAST),
            state=data.get("state", TaskStatus.OPEN),
        )


@dataclass(frozen=True)
class Verdict:
    """Screening outcome for one submission."""

    submission_id: str
    predicted_class: int
    confidence: float
    decision: Decision
    reason: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "decision", Decision(self.decision))
        conf = float(self.confidence)
        if not (0.0 <= conf <= 1.0):
            raise ValueError(f"confidence out of [0, 1]: {self.confidence}")
        object.__setattr__(self, "confidence", conf)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "submission_id": self.submission_id,
            "predicted_class": self.predicted_class,
            "confidence": self.confidence,
            "decision": self.decision.value,
        }
        if self.reason is not None:
            out["reason"] = self.reason
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Verdict":
        return cls(
            submission_id=data["submission_id"],
            predicted_class=data["predicted_class"],
            confidence=data["confidence"],
            decision=data["decision"],
            reason=data.get("reason"),
        )


@dataclass(frozen=True)
class AggregationReport:
    """Handover artifact: one representative per leaf group plus the counts
    a requester needs to judge redundancy."""

    task_id: str
    determined_class: int
    representatives: tuple[str, ...]
    group_sizes: tuple[int, ...]
    redundancy_ratio: float
    total_accepted: int
    rejected_false: int
    no_event: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "representatives", tuple(self.representatives))
        object.__setattr__(self, "group_sizes", tuple(int(s) for s in self.group_sizes))
        if len(self.representatives) != len(self.group_sizes):
            raise ValueError("representatives and group_sizes must align")
        if any(s < 1 for s in self.group_sizes):
            raise ValueError("group sizes must be positive")
        if sum(self.group_sizes) != self.total_accepted:
            raise ValueError("group sizes must sum to total_accepted")
        expected = self._ratio(self.total_accepted, len(self.representatives))
        if self.redundancy_ratio != expected:
            raise ValueError(f"redundancy_ratio must be {expected}, got {self.redundancy_ratio}")

    @staticmethod
    def _ratio(total_accepted: int, n_groups: int) -> float:
        if total_accepted <= 0:
            return 0.0
        return (total_accepted - n_groups) / total_accepted

    @classmethod
    def assemble(
        cls,
        task_id: str,
        determined_class: int,
        representatives: Sequence[str],
        group_sizes: Sequence[int],
        rejected_false: int,
        no_event: bool = False,
    ) -> "AggregationReport":
        total = int(sum(group_sizes))
        return cls(
            task_id=task_id,
            determined_class=determined_class,
            representatives=tuple(representatives),
            group_sizes=tuple(group_sizes),
            redundancy_ratio=cls._ratio(total, len(representatives)),
            total_accepted=total,
            rejected_false=rejected_false,
            no_event=no_event,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "determined_class": self.determined_class,
            "representatives": list(self.representatives),
            "group_sizes": list(self.group_sizes),
            "redundancy_ratio": self.redundancy_ratio,
            "total_accepted": self.total_accepted,
            "rejected_false": self.rejected_false,
            "no_event": self.no_event,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AggregationReport":
        return cls(
            task_id=data["task_id"],
            determined_class=data["determined_class"],
            representatives=tuple(data["representatives"]),
            group_sizes=tuple(data["group_sizes"]),
            redundancy_ratio=data["redundancy_ratio"],
            total_accepted=data["total_accepted"],
            rejected_false=data["rejected_false"],
            no_event=data.get("no_event", False),
        )


class TaskValidationError(ValueError):
    """Raised when a raw task description violates one or more invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def validate_task(raw: Mapping[str, Any], registry: ClassRegistry) -> Task:
    """Build a Task from a raw description, collecting every violation.

    A single pass reports all problems at once instead of failing on the
    first. OFFLINE descriptions may carry an expected_class; it is dropped
    here because the vote at close determines the class (the caller decides
    whether to surface a warning).
    """
    violations: list[str] = []

    task_id = raw.get("task_id")
    if not task_id or not isinstance(task_id, str):
        violations.append("task_id must be a non-empty string")
    name = raw.get("name", "")

    mode: TaskMode | None = None
    try:
        mode = TaskMode(raw.get("mode"))
    except ValueError:
        violations.append(f"mode must be one of {[m.value for m in TaskMode]}")

    layers: list[ConstraintLayerSpec] = []
    raw_layers = raw.get("layers")
    if not isinstance(raw_layers, Sequence) or isinstance(raw_layers, (str, bytes)) or not raw_layers:
        violations.append("layers must be a non-empty list")
    else:
        seen_kinds: set[LayerKind] = set()
        for i, entry in enumerate(raw_layers):
            try:
                layer = ConstraintLayerSpec.from_dict(entry)
            except (ValueError, TypeError, KeyError) as exc:
                violations.append(f"layer {i}: {exc}")
                continue
            if layer.kind in seen_kinds:
                violations.append(f"duplicate layer kind: {layer.kind.value}")
                continue
            seen_kinds.add(layer.kind)
            layers.append(layer)

    opened_at = deadline = None
    try:
        opened_at = _as_epoch_seconds(raw.get("opened_at"), "opened_at")
    except ValueError as exc:
        violations.append(str(exc))
    try:
        deadline = _as_epoch_seconds(raw.get("deadline"), "deadline")
    except ValueError as exc:
        violations.append(str(exc))
    if opened_at is not None and deadline is not None and deadline <= opened_at:
        violations.append("deadline must be after opened_at")

    try:
        policy = RepresentativePolicy(raw.get("representative_policy", RepresentativePolicy.LAST))
    except ValueError:
        policy = RepresentativePolicy.LAST
        violations.append(f"representative_policy must be one of {[p.value for p in RepresentativePolicy]}")

    expected_class: int | None = None
    if mode is TaskMode.ONLINE:
        raw_expected = raw.get("expected_class")
        if raw_expected is None:
            violations.append("missing expected_class")
        elif raw_expected not in registry:
            violations.append(f"unknown expected_class: {raw_expected}")
        elif registry.get(raw_expected).is_normal:
            violations.append("expected_class must not be the normal class")
        else:
            expected_class = int(raw_expected)
    # OFFLINE: any expected_class is ignored; the deadline vote decides.

    if violations:
        raise TaskValidationError(violations)
    assert mode is not None and opened_at is not None and deadline is not None
    return Task(
        task_id=str(task_id),
        name=str(name),
        mode=mode,
        expected_class=expected_class,
        layers=tuple(layers),
        opened_at=opened_at,
        deadline=deadline,
        representative_policy=policy,
        state=TaskStatus.OPEN,
    )
