"""Labeled, weighted point clouds and their ASCII PLY persistence.

Every point carries a modality label (vision / tactile / model) and a
nonnegative weight. Coordinates are millimetres.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import MeshFormatError
from .geometry import RigidTransform


class Modality(IntEnum):
    """Origin of a point; the integer values are the on-disk encoding."""

    VISION = 0
    TACTILE = 1
    MODEL = 2


def _float_column(values, n: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class LabeledPointCloud:
    """Immutable point cloud with per-point modality labels and weights."""

    points: np.ndarray
    labels: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        n = len(pts)
        labels = np.array(self.labels, dtype=np.uint8)
        if labels.shape != (n,):
            raise ValueError(f"labels must have shape ({n},), got {labels.shape}")
        if n and not np.all(labels <= Modality.MODEL):
            raise ValueError("labels must be vision (0), tactile (1) or model (2)")
        weights = _float_column(self.weights, n, "weights")
        if n and weights.min() < 0.0:
            raise ValueError("weights must be nonnegative")
        for name, arr in (("points", pts), ("labels", labels), ("weights", weights)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def empty(cls) -> "LabeledPointCloud":
        return cls(np.empty((0, 3)), np.empty(0, dtype=np.uint8), np.empty(0))

    @classmethod
    def from_points(cls, points, modality: Modality, weight: float = 1.0) -> "LabeledPointCloud":
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        n = len(pts)
        return cls(pts, np.full(n, int(modality), dtype=np.uint8), np.full(n, float(weight)))

    def transformed(self, transform: RigidTransform) -> "LabeledPointCloud":
        """Apply a rigid transform to the coordinates; labels and weights ride along."""
        return LabeledPointCloud(transform.apply(self.points), self.labels, self.weights)

    def subset(self, selector) -> "LabeledPointCloud":
        """Rows selected by a boolean mask or an index array, order preserved."""
        sel = np.asarray(selector)
        return LabeledPointCloud(self.points[sel], self.labels[sel], self.weights[sel])

    def with_weights(self, weights) -> "LabeledPointCloud":
        return LabeledPointCloud(self.points, self.labels, weights)

    def with_labels(self, modality: Modality) -> "LabeledPointCloud":
        return LabeledPointCloud(
            self.points, np.full(len(self), int(modality), dtype=np.uint8), self.weights
        )


def concat_clouds(clouds: Iterable[LabeledPointCloud]) -> LabeledPointCloud:
    """Concatenate clouds in the given order; empty input yields an empty cloud."""
    clouds = [c for c in clouds]
    if not clouds:
        return LabeledPointCloud.empty()
    return LabeledPointCloud(
        np.concatenate([c.points for c in clouds]),
        np.concatenate([c.labels for c in clouds]),
        np.concatenate([c.weights for c in clouds]),
    )


# --- ASCII PLY with modality and weight vertex properties -------------------

_PLY_PROPERTIES = ("x", "y", "z", "modality", "weight")


def save_ply(cloud: LabeledPointCloud, path) -> None:
    """Write an ASCII PLY carrying x, y, z, modality (uchar) and weight (float).

    Numbers are printed with shortest round-trip formatting so identical
    clouds serialize to identical bytes.
    """
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(cloud)}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar modality",
        "property float weight",
        "end_header",
    ]
    pts = cloud.points
    for i in range(len(cloud)):
        lines.append(
            f"{float(pts[i, 0])!r} {float(pts[i, 1])!r} {float(pts[i, 2])!r} "
            f"{int(cloud.labels[i])} {float(cloud.weights[i])!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def load_ply(path) -> LabeledPointCloud:
    """Read a point cloud written by save_ply (property order may vary)."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise MeshFormatError(f"{path}: not a PLY file")
    count = None
    properties: list[str] = []
    body_start = None
    in_vertex_element = False
    for i, raw in enumerate(lines[1:], start=1):
        line = raw.strip()
        if line == "end_header":
            body_start = i + 1
            break
        if line.startswith("comment") or line.startswith("format"):
            continue
        if line.startswith("element"):
            parts = line.split()
            in_vertex_element = len(parts) == 3 and parts[1] == "vertex"
            if in_vertex_element:
                count = int(parts[2])
        elif line.startswith("property") and in_vertex_element:
            properties.append(line.split()[-1])
    if body_start is None or count is None:
        raise MeshFormatError(f"{path}: malformed PLY header")
    missing = [p for p in _PLY_PROPERTIES if p not in properties]
    if missing:
        raise MeshFormatError(f"{path}: PLY is missing vertex properties {missing}")
    rows = lines[body_start : body_start + count]
    if len(rows) < count:
        raise MeshFormatError(f"{path}: expected {count} vertices, found {len(rows)}")
    if count == 0:
        return LabeledPointCloud.empty()
    data = np.array([r.split() for r in rows], dtype=np.float64)
    if data.shape[1] != len(properties):
        raise MeshFormatError(f"{path}: vertex rows do not match declared properties")
    col = {name: idx for idx, name in enumerate(properties)}
    points = data[:, [col["x"], col["y"], col["z"]]]
    labels = data[:, col["modality"]].astype(np.uint8)
    weights = data[:, col["weight"]]
    return LabeledPointCloud(points, labels, weights)


def transform_cloud(transform: RigidTransform, cloud: LabeledPointCloud) -> LabeledPointCloud:
    """Free-function spelling of cloud.transformed(transform)."""
    return cloud.transformed(transform)


def split_by_label(cloud: LabeledPointCloud) -> dict[Modality, LabeledPointCloud]:
    """Partition a cloud into per-modality clouds (only labels that occur)."""
    out = {}
    for modality in Modality:
        mask = cloud.labels == int(modality)
        if mask.any():
            out[modality] = cloud.subset(mask)
    return out


def bounding_box(points: Sequence | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(min_corner, max_corner) of an (N, 3) array; N must be positive."""
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) == 0:
        raise ValueError("bounding box of an empty point set")
    return pts.min(axis=0), pts.max(axis=0)
