"""Streaming photo-report collection: screen crowdsourced submissions by
predicted event class, then deduplicate the survivors with a layered
constraint tree and hand one representative per group to the requester."""

__version__ = "0.1.0"

from .config import ServiceConfig, load_config
from .matching import (
    DEFAULT_K_MIN,
    DEFAULT_RATIO,
    EARTH_RADIUS_KM,
    haversine_km,
    match_keypoints,
    similar_position,
    similar_time,
    similar_visual,
)
from .model import (
    AggregationReport,
    ClassRegistry,
    ConstraintLayerSpec,
    Decision,
    EventClass,
    GeoPoint,
    KeypointDescriptorSet,
    LayerKind,
    RepresentativePolicy,
    Submission,
    Task,
    TaskMode,
    TaskStatus,
    TaskValidationError,
    Verdict,
    validate_task,
)
from .oracle import SimilarityGraph, build_graph, coverage_ratio, max_independent_set
from .screening import (
    ClassifierModel,
    VoteOutcome,
    classify,
    judge_offline_defer,
    judge_online,
    resolve_offline,
    synthetic_model,
)
from .service import Platform
from .tree import ConstraintTree, HandoverResult, LeafGroup, TreeNode

__all__ = [
    "AggregationReport",
    "ClassRegistry",
    "ClassifierModel",
    "ConstraintLayerSpec",
    "ConstraintTree",
    "DEFAULT_K_MIN",
    "DEFAULT_RATIO",
    "Decision",
    "EARTH_RADIUS_KM",
    "EventClass",
    "GeoPoint",
    "HandoverResult",
    "KeypointDescriptorSet",
    "LayerKind",
    "LeafGroup",
    "Platform",
    "RepresentativePolicy",
    "ServiceConfig",
    "SimilarityGraph",
    "Submission",
    "Task",
    "TaskMode",
    "TaskStatus",
    "TaskValidationError",
    "TreeNode",
    "Verdict",
    "VoteOutcome",
    "build_graph",
    "classify",
    "coverage_ratio",
    "haversine_km",
    "judge_offline_defer",
    "judge_online",
    "load_config",
    "match_keypoints",
    "max_independent_set",
    "resolve_offline",
    "similar_position",
    "similar_time",
    "similar_visual",
    "synthetic_model",
    "validate_task",
]
