"""Point-cloud cleanup: voxel thinning, outlier removal, frame averaging.

These run on sensor clouds before fusion so both modalities enter
registration at a comparable density.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .cloud import LabeledPointCloud, Modality, concat_clouds
from .errors import TooFewPoints
from .spatial import SpatialIndex

DEFAULT_NEIGHBOR_COUNT = 8
DEFAULT_STD_RATIO = 2.0
# Merge radius (half a voxel edge) matching the standard 1 mm sampling grid.
DEFAULT_MERGE_RADIUS = 0.5

# Label chosen for a voxel on a tied point count: tactile beats model beats
# vision, because tactile points are scarce and should not be absorbed.
_LABEL_TIE_BONUS = np.array([0.0, 2.0, 1.0])


@dataclass(frozen=True)
class FrameSequence:
    """Ordered capture frames from one sensor; frames may be empty."""

    frames: tuple[LabeledPointCloud, ...]

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("a frame sequence needs at least one frame")
        modality = None
        for i, frame in enumerate(frames):
            if not isinstance(frame, LabeledPointCloud):
                raise TypeError(f"frame {i} is not a LabeledPointCloud")
            if len(frame) == 0:
                continue
            present = np.unique(frame.labels)
            if len(present) != 1:
                raise ValueError(f"frame {i} mixes modalities")
            if modality is None:
                modality = int(present[0])
            elif int(present[0]) != modality:
                raise ValueError(f"frame {i} does not match the sequence modality")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[LabeledPointCloud]:
        return iter(self.frames)

    def __getitem__(self, i) -> LabeledPointCloud:
        return self.frames[i]


def voxel_downsample(cloud: LabeledPointCloud, voxel_edge: float) -> LabeledPointCloud:
    """Collapse each occupied voxel to one point.

    The surviving point is the weight-weighted centroid of the voxel's
    points (plain mean if all weights in the voxel are zero), its weight is
    the voxel's weight sum, and its label is the most common label in the
    voxel with ties resolved tactile > model > vision. Total weight is
    conserved. Output rows are ordered by voxel key, so the result is
    deterministic and independent of input order.
    """
    if voxel_edge <= 0.0:
        raise ValueError("voxel edge must be positive")
    if len(cloud) == 0:
        return cloud
    keys = np.floor(cloud.points / voxel_edge).astype(np.int64)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    n_voxels = int(inverse.max()) + 1

    weight_sums = np.bincount(inverse, weights=cloud.weights, minlength=n_voxels)
    weighted = np.zeros((n_voxels, 3))
    np.add.at(weighted, inverse, cloud.points * cloud.weights[:, None])
    plain = np.zeros((n_voxels, 3))
    np.add.at(plain, inverse, cloud.points)
    counts = np.bincount(inverse, minlength=n_voxels)

    centroids = np.empty((n_voxels, 3))
    zero = weight_sums == 0.0
    nz = ~zero
    centroids[nz] = weighted[nz] / weight_sums[nz, None]
    centroids[zero] = plain[zero] / counts[zero, None]

    label_counts = np.zeros((n_voxels, 3))
    np.add.at(label_counts, (inverse, cloud.labels.astype(np.intp)), 1.0)
    scores = label_counts * 4.0 + _LABEL_TIE_BONUS
    labels = scores.argmax(axis=1).astype(np.uint8)

    return LabeledPointCloud(centroids, labels, weight_sums)


def remove_outliers(
    cloud: LabeledPointCloud,
    neighbor_count: int = DEFAULT_NEIGHBOR_COUNT,
    std_ratio: float = DEFAULT_STD_RATIO,
) -> LabeledPointCloud:
    """Drop points whose mean distance to their k nearest neighbors is high.

    A point survives iff its statistic is at most mean + std_ratio * std of
    the statistic over the cloud. Requires more points than neighbors,
    otherwise TooFewPoints. Order of survivors is preserved.
    """
    if neighbor_count < 1:
        raise ValueError("neighbor_count must be at least 1")
    if len(cloud) <= neighbor_count:
        raise TooFewPoints(
            f"outlier removal with {neighbor_count} neighbors needs more than "
            f"{neighbor_count} points, got {len(cloud)}"
        )
    index = SpatialIndex(cloud.points)
    dists, _ = index.query_knn(cloud.points, k=neighbor_count + 1)
    stat = dists[:, 1:].mean(axis=1)  # first column is the point itself
    threshold = stat.mean() + std_ratio * stat.std()
    return cloud.subset(stat <= threshold)


def temporal_average(frames, merge_radius: float) -> LabeledPointCloud:
    """Average repeated captures of a static scene into one cloud.

    Frames are concatenated and voxel-thinned with a voxel edge of twice the
    merge radius (points of the same surface spot within the radius land in
    one voxel), then accumulated weights are divided by the frame count so a
    stack of identical frames reduces to a single frame.
    """
    if merge_radius <= 0.0:
        raise ValueError("merge radius must be positive")
    if not isinstance(frames, FrameSequence):
        frames = FrameSequence(tuple(frames))
    merged = voxel_downsample(concat_clouds(frames), 2.0 * merge_radius)
    return merged.with_weights(merged.weights / len(frames))


def segment_modality(cloud: LabeledPointCloud, keep) -> LabeledPointCloud:
    """Rows whose label is in keep (a Modality or an iterable of them)."""
    if isinstance(keep, (Modality, int)):
        wanted = {int(keep)}
    else:
        wanted = {int(m) for m in keep}
    mask = np.isin(cloud.labels, sorted(wanted))
    return cloud.subset(mask)
