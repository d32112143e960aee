"""Weighting and fusion of vision and tactile clouds, plus cloud metrics.

A weight policy assigns one constant weight per modality. The metrics here
(occlusion, frame-to-frame noise, point count, hull volume) describe cloud
quality and feed the optional metric-driven weight model.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .cloud import LabeledPointCloud, Modality, concat_clouds
from .errors import BothEmpty, EmptyGroundTruth, ModelLabelPresent, TooFewFrames
from .spatial import SpatialIndex

# A ground-truth surface point counts as captured when a vision point lies
# within this distance of it.
DEFAULT_CAPTURE_RADIUS = 2.0

# Clamp range for the metric-driven tactile weight.
_TACTILE_WEIGHT_MIN = 0.5
_TACTILE_WEIGHT_MAX = 50.0

_MODES = ("fixed", "dynamic")


@dataclass(frozen=True)
class WeightPolicy:
    """Per-modality constant weights applied at fusion time."""

    vision_weight: float = 1.0
    tactile_weight: float = 1.0
    mode: str = "fixed"

    def __post_init__(self):
        if self.vision_weight < 0.0 or self.tactile_weight < 0.0:
            raise ValueError("weights must be nonnegative")
        if self.vision_weight + self.tactile_weight <= 0.0:
            raise ValueError("at least one modality weight must be positive")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class CloudMetrics:
    """Quality summary of one modality's cloud."""

    occlusion: float
    noise_mm: float
    point_count: int
    volume_mm3: float

    def __post_init__(self):
        if not 0.0 <= self.occlusion <= 1.0:
            raise ValueError("occlusion must be within [0, 1]")
        if self.noise_mm < 0.0 or self.volume_mm3 < 0.0 or self.point_count < 0:
            raise ValueError("metrics must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "occlusion": float(self.occlusion),
            "noise_mm": float(self.noise_mm),
            "point_count": int(self.point_count),
            "volume_mm3": float(self.volume_mm3),
        }


def assign_weights(cloud: LabeledPointCloud, policy: WeightPolicy) -> LabeledPointCloud:
    """Set each point's weight from its modality label.

    Only sensor points may be weighted; a model label anywhere is an error.
    """
    if np.any(cloud.labels == int(Modality.MODEL)):
        raise ModelLabelPresent("weight policies apply to sensor points only")
    weights = np.where(
        cloud.labels == int(Modality.VISION), policy.vision_weight, policy.tactile_weight
    )
    return cloud.with_weights(weights)


def fuse(
    vision: LabeledPointCloud, tactile: LabeledPointCloud, policy: WeightPolicy
) -> LabeledPointCloud:
    """Concatenate vision then tactile with policy weights applied."""
    if len(vision) == 0 and len(tactile) == 0:
        raise BothEmpty("cannot fuse two empty clouds")
    return assign_weights(concat_clouds([vision, tactile]), policy)


def occlusion_metric(
    vision: LabeledPointCloud,
    gt_surface: LabeledPointCloud,
    capture_radius: float = DEFAULT_CAPTURE_RADIUS,
) -> float:
    """Fraction of the reference surface with no vision point nearby.

    1.0 for an empty vision cloud. Inclusive at the radius: a surface point
    exactly capture_radius away counts as captured.
    """
    if capture_radius <= 0.0:
        raise ValueError("capture radius must be positive")
    if len(gt_surface) == 0:
        raise EmptyGroundTruth("occlusion metric needs a nonempty reference surface")
    if len(vision) == 0:
        return 1.0
    dist, _ = SpatialIndex(vision.points).query(gt_surface.points)
    return float((dist > capture_radius).mean())


def noise_metric(frames) -> float:
    """Mean frame-to-frame drift over consecutive frame pairs, in mm.

    For each consecutive pair, the mean distance from each point of the
    earlier frame to its nearest point in the later frame; pairs with an
    empty side contribute nothing. Needs at least two frames.
    """
    frames = list(frames)
    if len(frames) < 2:
        raise TooFewFrames("noise metric needs at least two frames")
    pair_means = []
    for earlier, later in zip(frames, frames[1:]):
        if len(earlier) == 0 or len(later) == 0:
            continue
        dist, _ = SpatialIndex(later.points).query(earlier.points)
        pair_means.append(dist.mean())
    if not pair_means:
        return 0.0
    return float(np.mean(pair_means))


def volume_metric(cloud: LabeledPointCloud) -> float:
    """Convex-hull volume of the cloud in mm^3; 0 for degenerate clouds."""
    if len(cloud) < 4:
        return 0.0
    try:
        return float(ConvexHull(cloud.points).volume)
    except QhullError:
        return 0.0


def describe_cloud(
    cloud: LabeledPointCloud,
    gt_surface: LabeledPointCloud,
    frames=None,
    capture_radius: float = DEFAULT_CAPTURE_RADIUS,
) -> CloudMetrics:
    """Assemble CloudMetrics for one modality.

    Noise needs the raw frame sequence; a modality captured in a single shot
    reports 0 noise.
    """
    noise = noise_metric(frames) if frames is not None and len(list(frames)) >= 2 else 0.0
    return CloudMetrics(
        occlusion=occlusion_metric(cloud, gt_surface, capture_radius),
        noise_mm=noise,
        point_count=len(cloud),
        volume_mm3=volume_metric(cloud),
    )


@dataclass(frozen=True)
class DynamicWeightModel:
    """Affine map from modality metrics to a tactile weight.

    tactile weight = intercept + sum of slope * metric over both modalities,
    clamped to [0.5, 50]. The vision weight stays 1. All slopes default to
    zero, which reduces to a fixed policy at the intercept.
    """

    intercept: float = 1.0
    vision_slopes: dict = field(default_factory=dict)
    tactile_slopes: dict = field(default_factory=dict)

    _METRIC_NAMES = ("occlusion", "noise_mm", "point_count", "volume_mm3")

    def __post_init__(self):
        for slopes in (self.vision_slopes, self.tactile_slopes):
            unknown = set(slopes) - set(self._METRIC_NAMES)
            if unknown:
                raise ValueError(f"unknown metric names in slopes: {sorted(unknown)}")


def dynamic_weight(
    vision_metrics: CloudMetrics,
    tactile_metrics: CloudMetrics,
    model: DynamicWeightModel,
) -> WeightPolicy:
    """Evaluate the affine weight model on a scene's metrics."""
    value = model.intercept
    for name, slope in model.vision_slopes.items():
        value += slope * getattr(vision_metrics, name)
    for name, slope in model.tactile_slopes.items():
        value += slope * getattr(tactile_metrics, name)
    clamped = float(np.clip(value, _TACTILE_WEIGHT_MIN, _TACTILE_WEIGHT_MAX))
    return WeightPolicy(vision_weight=1.0, tactile_weight=clamped, mode="dynamic")
