"""Per-layer similarity predicates: time windows, great-circle distance, and
descriptor matching.

All threshold comparisons are inclusive: a pair sitting exactly at the
threshold counts as similar.
"""

from __future__ import annotations

import math

import numpy as np

from .model import GeoPoint, KeypointDescriptorSet

EARTH_RADIUS_KM = 6371.0088  # IUGG mean earth radius
DEFAULT_RATIO = 0.75
DEFAULT_K_MIN = 10


def similar_time(t1: int, t2: int, tau: float) -> bool:
    """True when two capture timestamps are at most ``tau`` seconds apart."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return abs(t1 - t2) <= tau


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in kilometers on a sphere of EARTH_RADIUS_KM.

    Uses the asin form, which is well conditioned for nearby points; the
    intermediate is clamped so antipodal rounding cannot push the sqrt
    argument above 1.
    """
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, h)))


def similar_position(a: GeoPoint, b: GeoPoint, delta_km: float) -> bool:
    """True when two points lie within ``delta_km`` kilometers of each other."""
    if delta_km <= 0:
        raise ValueError(f"delta_km must be positive, got {delta_km}")
    return haversine_km(a, b) <= delta_km


def match_keypoints(
    a: KeypointDescriptorSet,
    b: KeypointDescriptorSet,
    ratio: float = DEFAULT_RATIO,
) -> int:
    """Count descriptors of ``a`` that match into ``b`` under the
    nearest-neighbor ratio test.

    For each row of ``a`` the nearest and second-nearest rows of ``b`` by
    Euclidean distance are found; the row counts as a match when
    ``d1 <= ratio * d2``. A target set with fewer than two descriptors can
    match nothing because the second-nearest distance is undefined. The count
    is not symmetric in its arguments.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    if a.count == 0 or b.count == 0:
        return 0
    if a.dim != b.dim:
        raise ValueError(f"descriptor dimensions differ: {a.dim} vs {b.dim}")
    if b.count < 2:
        return 0
    diff = a.descriptors[:, None, :] - b.descriptors[None, :, :]
    dists = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    two_smallest = np.partition(dists, 1, axis=1)
    d1 = two_smallest[:, 0]
    d2 = two_smallest[:, 1]
    return int(np.count_nonzero(d1 <= ratio * d2))


def similar_visual(
    a: KeypointDescriptorSet,
    b: KeypointDescriptorSet,
    k_min: int = DEFAULT_K_MIN,
    ratio: float = DEFAULT_RATIO,
) -> bool:
    """True when at least ``k_min`` descriptors of ``a`` match into ``b``."""
    if k_min < 1:
        raise ValueError(f"k_min must be at least 1, got {k_min}")
    return match_keypoints(a, b, ratio) >= k_min
