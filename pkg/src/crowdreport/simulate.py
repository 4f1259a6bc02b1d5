"""Synthetic submission streams with ground truth built in.

Real photo corpora are out of reach here, so correctness is checked against
scenarios where the right answer is forced: duplicate clusters are generated
with within-cluster noise strictly inside every layer threshold and
between-cluster separation strictly outside every one, each by a declared
safety factor. On such a stream the correct grouping is the cluster plan
itself, regardless of arrival order. Every generated stream is re-measured
against the real predicates afterwards; a spec whose margins do not hold up
is rejected rather than silently producing a meaningless benchmark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .config import ServiceConfig
from .matching import EARTH_RADIUS_KM, haversine_km, match_keypoints
from .model import (
    DEFAULT_FEATURE_DIM,
    ClassRegistry,
    Decision,
    GeoPoint,
    KeypointDescriptorSet,
    LayerKind,
    Submission,
)
from .oracle import MAX_EXACT_N, build_graph, coverage_ratio, max_independent_set
from .predictor import ReferencePredictor
from .screening import synthetic_model
from .service import Platform
from .tree import ConstraintTree

DEFAULT_LAYER_ORDER = (LayerKind.TIME, LayerKind.POSITION, LayerKind.VISUAL)


class InfeasibleScenarioError(ValueError):
    """The requested jitter/separation margins do not hold on the generated
    stream (clusters too close, or noise too large for the thresholds)."""


@dataclass(frozen=True)
class ClusterPlan:
    """One intended duplicate group: where, when, and how many."""

    size: int
    center: GeoPoint
    center_time: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError(f"cluster size must be at least 1, got {self.size}")


@dataclass(frozen=True)
class ScenarioSpec:
    """Deterministic generation recipe; see module docstring for the margin
    contract enforced at generation time."""

    seed: int
    n_workers: int
    true_class: int
    false_rate: float
    clusters: tuple[ClusterPlan, ...]
    tau_s: float
    delta_km: float
    k_min: int
    safety: float = 2.0
    feature_dim: int = DEFAULT_FEATURE_DIM
    descriptor_dim: int = 8
    descriptors_per_photo: int = 0  # 0 means 2 * k_min

    def __post_init__(self) -> None:
        object.__setattr__(self, "clusters", tuple(self.clusters))
        if not self.clusters:
            raise ValueError("scenario needs at least one cluster")
        if not (0.0 <= self.false_rate <= 1.0):
            raise ValueError(f"false_rate out of [0, 1]: {self.false_rate}")
        if self.safety < 2.0:
            raise ValueError(f"safety factor must be at least 2, got {self.safety}")
        if self.n_workers < 1:
            raise ValueError("n_workers must be at least 1")
        if self.tau_s <= 0 or self.delta_km <= 0 or self.k_min < 1:
            raise ValueError("layer thresholds must be positive")
        if self.descriptor_dim < 1:
            raise ValueError("descriptor_dim must be at least 1")

    @property
    def n_submissions(self) -> int:
        return sum(c.size for c in self.clusters)

    @property
    def n_descriptors(self) -> int:
        return self.descriptors_per_photo or 2 * self.k_min

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "n_workers": self.n_workers,
            "true_class": self.true_class,
            "false_rate": self.false_rate,
            "tau_s": self.tau_s,
            "delta_km": self.delta_km,
            "k_min": self.k_min,
            "safety": self.safety,
            "feature_dim": self.feature_dim,
            "descriptor_dim": self.descriptor_dim,
            "descriptors_per_photo": self.descriptors_per_photo,
            "clusters": [
                {"size": c.size, "lat": c.center.lat, "lon": c.center.lon, "time": c.center_time}
                for c in self.clusters
            ],
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ScenarioSpec":
        clusters = tuple(
            ClusterPlan(
                size=int(c["size"]),
                center=GeoPoint(c["lat"], c["lon"]),
                center_time=int(c["time"]),
            )
            for c in raw["clusters"]
        )
        return cls(
            seed=int(raw["seed"]),
            n_workers=int(raw.get("n_workers", 8)),
            true_class=int(raw["true_class"]),
            false_rate=float(raw.get("false_rate", 0.0)),
            clusters=clusters,
            tau_s=float(raw["tau_s"]),
            delta_km=float(raw["delta_km"]),
            k_min=int(raw["k_min"]),
            safety=float(raw.get("safety", 2.0)),
            feature_dim=int(raw.get("feature_dim", DEFAULT_FEATURE_DIM)),
            descriptor_dim=int(raw.get("descriptor_dim", 8)),
            descriptors_per_photo=int(raw.get("descriptors_per_photo", 0)),
        )


@dataclass(frozen=True)
class LabeledSubmission:
    """A generated submission plus the ground truth it was built from."""

    submission: Submission
    cluster_index: int
    intended_class: int
    is_false: bool


def _offset_point(center: GeoPoint, north_km: float, east_km: float) -> GeoPoint:
    lat = center.lat + math.degrees(north_km / EARTH_RADIUS_KM)
    lon = center.lon + math.degrees(east_km / (EARTH_RADIUS_KM * math.cos(math.radians(center.lat))))
    return GeoPoint(lat, lon)


def _base_cloud(tag: int, n: int, dim: int) -> np.ndarray:
    """Descriptor cloud for one cluster: rows 100 apart on the first axis,
    whole cloud shifted 1e5 per cluster so clouds can never cross-match."""
    rows = np.zeros((n, dim))
    rows[:, 0] = tag * 1.0e5 + np.arange(n) * 100.0
    return rows


def generate(
    spec: ScenarioSpec,
    registry: ClassRegistry,
    task_id: str = "sim",
) -> list[LabeledSubmission]:
    """Deterministic stream for a scenario; same seed, same stream.

    Raises InfeasibleScenarioError when the generated stream fails the
    margin re-measurement (see _validate_margins).
    """
    if spec.true_class not in registry:
        raise ValueError(f"true_class {spec.true_class} is not registered")
    if spec.feature_dim < max(registry.ids()) + 1:
        raise ValueError("feature_dim too small for the registered class ids")

    rng = np.random.default_rng(spec.seed)
    model = synthetic_model(registry, spec.feature_dim)
    time_jitter = int(spec.tau_s // (2.0 * spec.safety))
    radius_km = spec.delta_km / (2.0 * spec.safety)
    other_ids = [cid for cid in registry.ids() if cid != spec.true_class]

    n = spec.n_submissions
    n_false = round(spec.false_rate * n)
    false_slots = set(rng.choice(n, size=n_false, replace=False).tolist()) if n_false else set()

    labeled: list[LabeledSubmission] = []
    seq = 0
    for cluster_index, cluster in enumerate(spec.clusters):
        base = _base_cloud(cluster_index, spec.n_descriptors, spec.descriptor_dim)
        for _ in range(cluster.size):
            is_false = seq in false_slots
            intended = int(rng.choice(other_ids)) if is_false else spec.true_class

            captured = cluster.center_time + (
                int(rng.integers(-time_jitter, time_jitter + 1)) if time_jitter else 0
            )
            theta = rng.uniform(0.0, 2.0 * math.pi)
            r = radius_km * math.sqrt(rng.uniform())
            location = _offset_point(cluster.center, r * math.cos(theta), r * math.sin(theta))

            descriptors = base + rng.uniform(-0.01, 0.01, size=base.shape)

            noise = rng.normal(0.0, 0.15, size=spec.feature_dim)
            norm = float(np.linalg.norm(noise))
            if norm > 1.9:
                noise *= 1.9 / norm
            feature = model.centroids[intended] + noise

            labeled.append(
                LabeledSubmission(
                    submission=Submission(
                        submission_id=f"s{seq:03d}",
                        task_id=task_id,
                        worker_id=f"w{seq % spec.n_workers}",
                        captured_at=captured,
                        location=location,
                        keypoints=KeypointDescriptorSet(descriptors),
                        global_feature=feature,
                    ),
                    cluster_index=cluster_index,
                    intended_class=intended,
                    is_false=is_false,
                )
            )
            seq += 1

    order = rng.permutation(n)
    stream = [labeled[i] for i in order]
    _validate_margins(spec, stream)
    return stream


def _validate_margins(spec: ScenarioSpec, stream: Sequence[LabeledSubmission]) -> None:
    """Re-measure every pair with the real predicates.

    Within a cluster: time gap <= tau/safety, distance <= delta/safety, and
    match count >= k_min both ways. Across clusters: time gap >= safety*tau,
    distance >= safety*delta, match count <= k_min/2 both ways.
    """
    s = spec.safety
    for i in range(len(stream)):
        for j in range(i + 1, len(stream)):
            a, b = stream[i], stream[j]
            sa, sb = a.submission, b.submission
            dt = abs(sa.captured_at - sb.captured_at)
            dkm = haversine_km(sa.location, sb.location)
            m_ab = match_keypoints(sa.keypoints, sb.keypoints)
            m_ba = match_keypoints(sb.keypoints, sa.keypoints)
            pair = f"{sa.submission_id}/{sb.submission_id}"
            if a.cluster_index == b.cluster_index:
                if dt > spec.tau_s / s:
                    raise InfeasibleScenarioError(f"within-cluster time gap {dt}s too wide for pair {pair}")
                if dkm > spec.delta_km / s:
                    raise InfeasibleScenarioError(f"within-cluster distance {dkm:.4f}km too wide for pair {pair}")
                if min(m_ab, m_ba) < spec.k_min:
                    raise InfeasibleScenarioError(f"within-cluster match count {min(m_ab, m_ba)} below k_min for pair {pair}")
            else:
                if dt < s * spec.tau_s:
                    raise InfeasibleScenarioError(f"cross-cluster time gap {dt}s too narrow for pair {pair}")
                if dkm < s * spec.delta_km:
                    raise InfeasibleScenarioError(f"cross-cluster distance {dkm:.4f}km too narrow for pair {pair}")
                if max(m_ab, m_ba) > spec.k_min / 2:
                    raise InfeasibleScenarioError(f"cross-cluster match count {max(m_ab, m_ba)} too high for pair {pair}")


def layer_specs(
    spec: ScenarioSpec,
    order: Sequence[LayerKind | str] = DEFAULT_LAYER_ORDER,
) -> list[dict[str, Any]]:
    threshold = {
        LayerKind.TIME: spec.tau_s,
        LayerKind.POSITION: spec.delta_km,
        LayerKind.VISUAL: float(spec.k_min),
    }
    return [{"kind": LayerKind(k).value, "threshold": threshold[LayerKind(k)]} for k in order]


def make_task_request(
    spec: ScenarioSpec,
    mode: str = "ONLINE",
    task_id: str = "sim",
    layer_order: Sequence[LayerKind | str] = DEFAULT_LAYER_ORDER,
    representative_policy: str = "LAST",
) -> dict[str, Any]:
    """Task creation payload whose window covers every generated timestamp."""
    margin = int(spec.tau_s // (2.0 * spec.safety)) + 1
    times = [c.center_time for c in spec.clusters]
    request: dict[str, Any] = {
        "task_id": task_id,
        "name": f"scenario seed {spec.seed}",
        "mode": mode,
        "layers": layer_specs(spec, layer_order),
        "opened_at": min(times) - margin,
        "deadline": max(times) + margin,
        "representative_policy": representative_policy,
    }
    if mode == "ONLINE":
        request["expected_class"] = spec.true_class
    return request


@dataclass(frozen=True)
class SimulationMetrics:
    """End-to-end outcome of one scenario run."""

    n_submissions: int
    n_accepted: int
    rejected_false: int
    false_rejection_accuracy: float  # injected false submissions actually rejected
    true_rejections: int  # genuine submissions wrongly rejected
    groups_found: int
    ground_truth_groups: int
    redundancy_ratio: float
    coverage_ratio: float | None  # None when the oracle is out of reach
    determined_class: int
    no_event: bool = False
    oracle_size: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_submissions": self.n_submissions,
            "n_accepted": self.n_accepted,
            "rejected_false": self.rejected_false,
            "false_rejection_accuracy": self.false_rejection_accuracy,
            "true_rejections": self.true_rejections,
            "groups_found": self.groups_found,
            "ground_truth_groups": self.ground_truth_groups,
            "redundancy_ratio": self.redundancy_ratio,
            "coverage_ratio": self.coverage_ratio,
            "determined_class": self.determined_class,
            "no_event": self.no_event,
            "oracle_size": self.oracle_size,
        }


def evaluate(
    stream: Sequence[LabeledSubmission],
    task_request: Mapping[str, Any],
    registry: ClassRegistry,
    config: ServiceConfig | None = None,
) -> SimulationMetrics:
    """Drive the full pipeline over a labeled stream and score it.

    Uses an in-memory platform (no log) with the reference predictor over
    the same synthetic model the generator used, so a submission's predicted
    class always equals its intended class.
    """
    config = config or ServiceConfig()
    if not stream:
        raise ValueError("cannot evaluate an empty stream")
    dim = stream[0].submission.global_feature.shape[0]
    predictor = ReferencePredictor(synthetic_model(registry, dim), registry)
    platform = Platform(config, registry, predictor, log=None)

    task, _ = platform.create_task(dict(task_request), now=task_request["opened_at"])
    for item in stream:
        payload = item.submission.to_dict()
        payload["task_id"] = task.task_id
        platform.submit(task.task_id, payload)
    report = platform.close_task(task.task_id)
    status = platform.status(task.task_id)

    decisions = {v["submission_id"]: v["decision"] for v in status["verdicts"]}
    accepted_ids = {sid for sid, d in decisions.items() if d == Decision.ACCEPTED.value}
    false_ids = {it.submission.submission_id for it in stream if it.is_false}
    true_ids = {it.submission.submission_id for it in stream if not it.is_false}
    false_rejected = sum(1 for sid in false_ids if decisions[sid] == Decision.REJECTED_FALSE.value)
    true_rejected = sum(1 for sid in true_ids if decisions[sid] == Decision.REJECTED_FALSE.value)

    surviving_clusters = {it.cluster_index for it in stream if it.submission.submission_id in accepted_ids}

    oracle_size = None
    cov = None
    accepted_stream = [it.submission for it in stream if it.submission.submission_id in accepted_ids]
    if 0 < len(accepted_stream) <= MAX_EXACT_N:
        graph = build_graph(accepted_stream, task.layers, ratio=config.ratio)
        oracle_size, _ = max_independent_set(graph)
        cov = coverage_ratio(len(report.representatives), oracle_size)

    return SimulationMetrics(
        n_submissions=len(stream),
        n_accepted=report.total_accepted,
        rejected_false=report.rejected_false,
        false_rejection_accuracy=(false_rejected / len(false_ids)) if false_ids else 1.0,
        true_rejections=true_rejected,
        groups_found=len(report.representatives),
        ground_truth_groups=len(surviving_clusters),
        redundancy_ratio=report.redundancy_ratio,
        coverage_ratio=cov,
        determined_class=report.determined_class,
        no_event=report.no_event,
        oracle_size=oracle_size,
    )


def run_tree_only(
    stream: Sequence[LabeledSubmission],
    layers: Sequence[Mapping[str, Any]],
    ratio: float = 0.75,
    task_id: str = "sim",
) -> ConstraintTree:
    """Push a labeled stream straight through a tree, skipping screening.

    Handy for grouping-only experiments where every submission counts."""
    from .model import ConstraintLayerSpec

    tree = ConstraintTree(task_id, tuple(ConstraintLayerSpec.from_dict(d) for d in layers), ratio=ratio)
    for item in stream:
        tree.insert(item.submission)
    return tree
