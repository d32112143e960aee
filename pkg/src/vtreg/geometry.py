"""Rigid-body transforms and rotation helpers.

All lengths are millimetres and all angles are degrees unless a name says
otherwise. Rotations are 3x3 row-major matrices acting on column vectors,
so a transform maps p to R @ p + t.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Frobenius-norm budget for R^T R - I and |det R - 1| on stored rotations.
ORTHONORMALITY_TOL = 1e-9


def _frozen_array(values, shape, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


def rotation_drift(rotation: np.ndarray) -> float:
    """How far a matrix is from being a proper rotation.

    Returns max of ||R^T R - I||_F and |det R - 1|.
    """
    rotation = np.asarray(rotation, dtype=np.float64)
    gram_err = np.linalg.norm(rotation.T @ rotation - np.eye(3), ord="fro")
    det_err = abs(np.linalg.det(rotation) - 1.0)
    return max(gram_err, det_err)


def orthonormalize(rotation: np.ndarray) -> np.ndarray:
    """Project a near-rotation matrix onto the closest proper rotation (SVD polar)."""
    u, _, vt = np.linalg.svd(np.asarray(rotation, dtype=np.float64))
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


@dataclass(frozen=True)
class RigidTransform:
    """Proper rigid motion: rotation plus translation, in mm.

    Construction rejects rotations that drift from SO(3) by more than
    ORTHONORMALITY_TOL; use orthonormalize() first if the input is dirty.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _frozen_array(self.rotation, (3, 3), "rotation"))
        object.__setattr__(self, "translation", _frozen_array(self.translation, (3,), "translation"))
        drift = rotation_drift(self.rotation)
        if drift > ORTHONORMALITY_TOL:
            raise ValueError(f"rotation is not orthonormal (drift {drift:.3e})")

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix) -> "RigidTransform":
        """Build from a 4x4 homogeneous matrix with bottom row (0, 0, 0, 1)."""
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {m.shape}")
        if not np.allclose(m[3], (0.0, 0.0, 0.0, 1.0), atol=1e-12):
            raise ValueError("bottom row must be (0, 0, 0, 1)")
        return cls(m[:3, :3], m[:3, 3])

    @classmethod
    def from_axis_angle(cls, axis, angle_deg: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        """Rodrigues rotation about a (not necessarily unit) axis, angle in degrees."""
        axis = np.asarray(axis, dtype=np.float64)
        norm = np.linalg.norm(axis)
        if norm == 0.0:
            raise ValueError("rotation axis must be nonzero")
        k = axis / norm
        theta = np.deg2rad(angle_deg)
        kx = np.array([
            [0.0, -k[2], k[1]],
            [k[2], 0.0, -k[0]],
            [-k[1], k[0], 0.0],
        ])
        rot = np.eye(3) + np.sin(theta) * kx + (1.0 - np.cos(theta)) * (kx @ kx)
        return cls(orthonormalize(rot), translation)

    @property
    def matrix(self) -> np.ndarray:
        """4x4 homogeneous form (a fresh writable array)."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def apply(self, points) -> np.ndarray:
        """Transform one (3,) point or an (N, 3) batch."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.shape == (3,):
            return self.rotation @ pts + self.translation
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"expected (3,) or (N, 3) points, got {pts.shape}")
        return pts @ self.rotation.T + self.translation

    def inverse(self) -> "RigidTransform":
        rot_inv = self.rotation.T
        return RigidTransform(rot_inv, -(rot_inv @ self.translation))


def compose(outer: RigidTransform, inner: RigidTransform) -> RigidTransform:
    """outer after inner: the transform mapping p to outer(inner(p)).

    The rotation product is re-orthonormalized if accumulated float error
    pushes it past ORTHONORMALITY_TOL.
    """
    rot = outer.rotation @ inner.rotation
    if rotation_drift(rot) > ORTHONORMALITY_TOL:
        rot = orthonormalize(rot)
    return RigidTransform(rot, outer.rotation @ inner.translation + outer.translation)


def geodesic_angle_deg(rotation_a, rotation_b=None) -> float:
    """Geodesic angle between two rotations, in degrees within [0, 180].

    With one argument, the angle of that rotation relative to identity.
    Computed as atan2(|skew part|, (trace - 1) / 2), which stays accurate
    near 0 where arccos of the trace loses about half the float precision.
    """
    ra = np.asarray(rotation_a, dtype=np.float64)
    rel = ra if rotation_b is None else ra.T @ np.asarray(rotation_b, dtype=np.float64)
    sin = 0.5 * np.sqrt(
        (rel[2, 1] - rel[1, 2]) ** 2
        + (rel[0, 2] - rel[2, 0]) ** 2
        + (rel[1, 0] - rel[0, 1]) ** 2
    )
    cos = (np.trace(rel) - 1.0) / 2.0
    return float(np.degrees(np.arctan2(sin, cos)))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation matrix (unit-quaternion method)."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])
