"""Simulated depth-camera and contact-patch sensing.

Both sensors sample the object's true posed surface and corrupt it with
Gaussian noise. The camera sees only faces with an unblocked line of sight
inside its field-of-view cone and can drop a contiguous angular sector to
mimic occlusion by a gripper; the tactile sensor returns small dense patches
around contact points regardless of visibility.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cloud import LabeledPointCloud, Modality
from ..errors import BadDimensions, CameraInsideMesh, ContactOffSurface
from ..geometry import RigidTransform
from ..mesh import STANDARD_DENSITY, TriMesh, point_mesh_distance, sample_surface
from ..preprocess import FrameSequence

# Rays shorter than this (mm) are treated as self-intersections, not blockers.
_RAY_CLEARANCE = 0.1
_PAIR_CHUNK = 1_500_000


@dataclass(frozen=True)
class CameraSpec:
    """Depth camera pose and noise model."""

    position: np.ndarray
    look_at: np.ndarray
    fov_deg: float = 70.0
    noise_sigma: float = 1.0
    frame_count: int = 5
    dropout_fraction: float = 0.0

    def __post_init__(self):
        position = np.asarray(self.position, dtype=np.float64)
        look_at = np.asarray(self.look_at, dtype=np.float64)
        if position.shape != (3,) or look_at.shape != (3,):
            raise BadDimensions("camera position and look_at must be 3-vectors")
        if not (np.isfinite(position).all() and np.isfinite(look_at).all()):
            raise BadDimensions("camera position and look_at must be finite")
        if np.array_equal(position, look_at):
            raise BadDimensions("camera cannot look at its own position")
        if not 0.0 < self.fov_deg < 180.0:
            raise BadDimensions(f"fov_deg must be in (0, 180), got {self.fov_deg}")
        if self.noise_sigma < 0.0:
            raise BadDimensions("noise_sigma must be non-negative")
        if self.frame_count < 1:
            raise BadDimensions("frame_count must be at least 1")
        if not 0.0 <= self.dropout_fraction <= 1.0:
            raise BadDimensions("dropout_fraction must be in [0, 1]")
        position.flags.writeable = False
        look_at.flags.writeable = False
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "look_at", look_at)

    def to_dict(self) -> dict:
        return {
            "position": [float(v) for v in self.position],
            "look_at": [float(v) for v in self.look_at],
            "fov_deg": float(self.fov_deg),
            "noise_sigma": float(self.noise_sigma),
            "frame_count": int(self.frame_count),
            "dropout_fraction": float(self.dropout_fraction),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CameraSpec":
        return cls(
            position=np.array(data["position"], dtype=np.float64),
            look_at=np.array(data["look_at"], dtype=np.float64),
            fov_deg=data.get("fov_deg", 70.0),
            noise_sigma=data.get("noise_sigma", 1.0),
            frame_count=data.get("frame_count", 5),
            dropout_fraction=data.get("dropout_fraction", 0.0),
        )


@dataclass(frozen=True)
class TactileSpec:
    """Contact points (object frame) and patch sensing parameters."""

    contact_points: tuple | None = None
    patch_radius: float = 8.0
    noise_sigma: float = 0.1

    def __post_init__(self):
        if self.patch_radius <= 0.0:
            raise BadDimensions("patch_radius must be positive")
        if self.noise_sigma < 0.0:
            raise BadDimensions("noise_sigma must be non-negative")
        if self.contact_points is not None:
            frozen = []
            for point in self.contact_points:
                arr = np.asarray(point, dtype=np.float64)
                if arr.shape != (3,) or not np.isfinite(arr).all():
                    raise BadDimensions("contact points must be finite 3-vectors")
                arr.flags.writeable = False
                frozen.append(arr)
            object.__setattr__(self, "contact_points", tuple(frozen))

    def to_dict(self) -> dict:
        contacts = None
        if self.contact_points is not None:
            contacts = [[float(v) for v in p] for p in self.contact_points]
        return {
            "contact_points": contacts,
            "patch_radius": float(self.patch_radius),
            "noise_sigma": float(self.noise_sigma),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TactileSpec":
        contacts = data.get("contact_points")
        if contacts is not None:
            contacts = tuple(np.array(p, dtype=np.float64) for p in contacts)
        return cls(
            contact_points=contacts,
            patch_radius=data.get("patch_radius", 8.0),
            noise_sigma=data.get("noise_sigma", 0.1),
        )


def _ray_hit_counts(origins, directions, t_lo, t_hi, mesh: TriMesh) -> np.ndarray:
    """Per-ray count of triangle intersections with parameter t in (t_lo, t_hi).

    Batched Moller-Trumbore over origin x face pairs; t_lo/t_hi broadcast
    per ray, t_hi may be +inf.
    """
    tri = mesh.vertices[mesh.faces]
    v0 = tri[:, 0]
    e1 = tri[:, 1] - v0
    e2 = tri[:, 2] - v0
    n_rays = len(origins)
    n_faces = len(mesh.faces)
    counts = np.zeros(n_rays, dtype=np.int64)
    chunk = max(1, _PAIR_CHUNK // max(n_faces, 1))
    t_lo = np.broadcast_to(np.asarray(t_lo, dtype=np.float64), (n_rays,))
    t_hi = np.broadcast_to(np.asarray(t_hi, dtype=np.float64), (n_rays,))
    for start in range(0, n_rays, chunk):
        sl = slice(start, start + chunk)
        d = directions[sl][:, None, :]
        h = np.cross(d, e2[None, :, :])
        a = np.einsum("fk,pfk->pf", e1, h)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = 1.0 / a
            s = origins[sl][:, None, :] - v0[None, :, :]
            u = f * np.einsum("pfk,pfk->pf", s, h)
            q = np.cross(s, e1[None, :, :])
            v = f * np.einsum("pfk,pfk->pf", d, q)
            t = f * np.einsum("fk,pfk->pf", e2, q)
            # NaNs from parallel rays compare False, which is the right answer.
            hit = (
                (np.abs(a) > 0.0)
                & (u >= -1e-9)
                & (v >= -1e-9)
                & (u + v <= 1.0 + 1e-9)
                & (t > t_lo[sl, None])
                & (t < t_hi[sl, None])
            )
        counts[sl] = hit.sum(axis=1)
    return counts


def point_inside_mesh(point, mesh: TriMesh) -> bool:
    """Ray-parity containment test for a closed mesh."""
    origin = np.asarray(point, dtype=np.float64).reshape(1, 3)
    # Irrational-ish direction so lattice-aligned meshes are not hit edge-on.
    direction = np.array([[0.5396828217, 0.7300131027, 0.4197569389]])
    hits = _ray_hit_counts(origin, direction, 1e-9, np.inf, mesh)
    return bool(hits[0] % 2)


def visible_mask(points, camera_position, mesh: TriMesh) -> np.ndarray:
    """True where the segment from a point to the camera misses the mesh.

    A short clearance at the point end keeps a surface sample from being
    blocked by its own face.
    """
    points = np.asarray(points, dtype=np.float64)
    if len(points) == 0:
        return np.zeros(0, dtype=bool)
    directions = camera_position[None, :] - points
    lengths = np.linalg.norm(directions, axis=1)
    t_lo = _RAY_CLEARANCE / np.maximum(lengths, 1e-12)
    hits = _ray_hit_counts(points, directions, t_lo, 1.0, mesh)
    return hits == 0


def render_vision(
    mesh: TriMesh,
    gt_pose: RigidTransform,
    camera: CameraSpec,
    seed: int,
) -> FrameSequence:
    """Multi-frame noisy depth capture of a posed object.

    All frames share the same underlying visible-surface sample and the same
    dropout sector; only the additive noise differs per frame, which mirrors a
    static camera watching a held object.
    """
    posed = mesh.transformed(gt_pose)
    if point_inside_mesh(camera.position, posed):
        raise CameraInsideMesh("camera position is inside the object")

    base = sample_surface(posed, STANDARD_DENSITY, seed=[seed, 11])
    points = base.points

    view = camera.look_at - camera.position
    view = view / np.linalg.norm(view)
    rel = points - camera.position
    rel_norm = np.linalg.norm(rel, axis=1)
    cos_limit = np.cos(np.radians(camera.fov_deg) / 2.0)
    in_fov = rel @ view >= cos_limit * rel_norm
    points = points[in_fov]

    if len(points):
        points = points[visible_mask(points, camera.position, posed)]

    if camera.dropout_fraction >= 1.0:
        points = points[:0]
    elif camera.dropout_fraction > 0.0 and len(points):
        # Contiguous angular sector about the view axis, fixed per scene.
        ortho = np.array([1.0, 0.0, 0.0])
        if abs(view[0]) > 0.9:
            ortho = np.array([0.0, 1.0, 0.0])
        right = np.cross(view, ortho)
        right /= np.linalg.norm(right)
        up = np.cross(view, right)
        center = points.mean(axis=0)
        angles = np.arctan2((points - center) @ up, (points - center) @ right)
        start = np.random.default_rng([seed, 13]).uniform(0.0, 2.0 * np.pi)
        width = 2.0 * np.pi * camera.dropout_fraction
        points = points[(angles - start) % (2.0 * np.pi) >= width]

    frames = []
    for frame in range(camera.frame_count):
        if camera.noise_sigma > 0.0 and len(points):
            rng = np.random.default_rng([seed, 17, frame])
            noisy = points + rng.normal(0.0, camera.noise_sigma, points.shape)
        else:
            noisy = points
        frames.append(LabeledPointCloud.from_points(noisy, Modality.VISION))
    return FrameSequence(tuple(frames))


def sample_tactile(
    mesh: TriMesh,
    gt_pose: RigidTransform,
    spec: TactileSpec,
    seed: int,
) -> LabeledPointCloud:
    """Dense low-noise patches of posed surface around each contact point.

    Contacts are given in the object frame and must lie on (within 1 mm of)
    the mesh. Noise displacements are truncated at three sigma so tactile
    points stay tight to the true surface.
    """
    if spec.contact_points is None:
        raise BadDimensions("tactile contacts are unresolved; pass explicit points")
    if not spec.contact_points:
        return LabeledPointCloud.empty()
    contacts = np.stack(spec.contact_points)
    gaps = point_mesh_distance(contacts, mesh)
    if gaps.max() > 1.0:
        worst = int(np.argmax(gaps))
        raise ContactOffSurface(
            f"contact {worst} is {float(gaps[worst]):.2f} mm off the surface"
        )

    posed = mesh.transformed(gt_pose)
    base = sample_surface(posed, STANDARD_DENSITY, seed=[seed, 19])
    posed_contacts = gt_pose.apply(contacts)

    keep = np.zeros(len(base), dtype=bool)
    for contact in posed_contacts:
        dist = np.linalg.norm(base.points - contact, axis=1)
        keep |= dist <= spec.patch_radius
    points = base.points[keep]

    if spec.noise_sigma > 0.0 and len(points):
        rng = np.random.default_rng([seed, 23])
        noise = rng.normal(0.0, spec.noise_sigma, points.shape)
        norms = np.linalg.norm(noise, axis=1)
        cap = 3.0 * spec.noise_sigma
        scale = np.where(norms > cap, cap / np.maximum(norms, 1e-12), 1.0)
        points = points + noise * scale[:, None]
    return LabeledPointCloud.from_points(points, Modality.TACTILE)
