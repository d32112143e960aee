"""Triangle meshes: validation, OBJ/STL I/O, and surface sampling.

Sampling targets one point per occupied 1 mm voxel of surface at the
standard density, which keeps sampled clouds commensurate with the
preprocessing grid used for sensor data.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cloud import LabeledPointCloud, Modality
from .errors import EmptyMesh, MeshFormatError
from .geometry import RigidTransform

# One sampled point per this many cubic millimetres of surface-occupied space.
STANDARD_DENSITY = 1.0

# Raw samples drawn per voxel-sized patch before deduplication; high enough
# that nearly every occupied voxel receives at least one sample.
_OVERSAMPLE = 4.0

_MIN_FACE_AREA = 1e-12


@dataclass(frozen=True)
class TriMesh:
    """Immutable triangle mesh in millimetres."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=np.float64)
        if verts.size == 0:
            verts = verts.reshape(0, 3)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValueError(f"vertices must have shape (V, 3), got {verts.shape}")
        if not np.all(np.isfinite(verts)):
            raise ValueError("vertices must be finite")
        faces = np.array(self.faces, dtype=np.int64)
        if faces.size == 0:
            faces = faces.reshape(0, 3)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise ValueError(f"faces must have shape (F, 3), got {faces.shape}")
        if len(faces):
            if faces.min() < 0 or faces.max() >= len(verts):
                raise ValueError("face indices out of range")
            distinct = (
                (faces[:, 0] != faces[:, 1])
                & (faces[:, 1] != faces[:, 2])
                & (faces[:, 0] != faces[:, 2])
            )
            if not distinct.all():
                raise ValueError("every face must reference three distinct vertices")
        corners = verts[faces]
        cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        if len(faces) and areas.min() <= _MIN_FACE_AREA:
            raise ValueError("mesh contains a degenerate (zero-area) face")
        verts.flags.writeable = False
        faces.flags.writeable = False
        areas.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "_face_areas", areas)

    @property
    def face_areas(self) -> np.ndarray:
        return self._face_areas

    @property
    def area(self) -> float:
        """Total surface area in mm^2."""
        return float(self._face_areas.sum())

    @property
    def centroid(self) -> np.ndarray:
        """Area-weighted centroid of the surface."""
        if len(self.faces) == 0:
            raise EmptyMesh("centroid of a mesh with no faces")
        face_centers = self.vertices[self.faces].mean(axis=1)
        return (face_centers * self._face_areas[:, None]).sum(axis=0) / self.area

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self.vertices) == 0:
            raise EmptyMesh("bounds of a mesh with no vertices")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, transform: RigidTransform) -> "TriMesh":
        return TriMesh(transform.apply(self.vertices), self.faces)

    def translated(self, offset) -> "TriMesh":
        return TriMesh(self.vertices + np.asarray(offset, dtype=np.float64), self.faces)


def sample_surface(
    mesh: TriMesh,
    density: float = STANDARD_DENSITY,
    seed: int = 0,
) -> LabeledPointCloud:
    """Sample the mesh surface, one point per occupied voxel at the density.

    density is points per mm^3-equivalent, i.e. the voxel edge is
    density**(-1/3). Faces are chosen area-weighted and points drawn with
    uniform barycentric coordinates, then thinned so no two survivors share
    a voxel; survivors are actual surface samples, so every returned point
    lies exactly on a face. Labels are model, weights 1.

    Deterministic for a given (mesh, density, seed).
    """
    if density <= 0.0:
        raise ValueError("density must be positive")
    if len(mesh.faces) == 0 or mesh.area <= 0.0:
        raise EmptyMesh("cannot sample a mesh with no surface")
    edge = density ** (-1.0 / 3.0)
    count = int(np.ceil(mesh.area / (edge * edge) * _OVERSAMPLE))
    rng = np.random.default_rng(seed)

    cum_area = np.cumsum(mesh.face_areas)
    picks = np.searchsorted(cum_area, rng.random(count) * cum_area[-1], side="right")
    picks = np.minimum(picks, len(mesh.faces) - 1)
    corners = mesh.vertices[mesh.faces[picks]]
    u = rng.random(count)
    v = rng.random(count)
    fold = u + v > 1.0
    u[fold] = 1.0 - u[fold]
    v[fold] = 1.0 - v[fold]
    pts = (
        corners[:, 0]
        + u[:, None] * (corners[:, 1] - corners[:, 0])
        + v[:, None] * (corners[:, 2] - corners[:, 0])
    )

    keys = np.floor(pts / edge).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    keep = np.sort(first)
    return LabeledPointCloud.from_points(pts[keep], Modality.MODEL, 1.0)


def point_mesh_distance(points, mesh: TriMesh) -> np.ndarray:
    """Distance from each point to the nearest point on the mesh surface.

    Exact point-to-triangle distances: the closest point on a triangle is
    either the in-plane projection (when its barycentric coordinates are
    nonnegative) or the closest point on one of the three edges.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(mesh.faces) == 0:
        raise EmptyMesh("distance to a mesh with no faces")
    if len(pts) == 0:
        return np.empty(0)
    corners = mesh.vertices[mesh.faces]
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    out = np.empty(len(pts))
    # Chunk queries so the (chunk, F) temporaries stay modest.
    chunk = max(1, int(2_000_000 // max(len(mesh.faces), 1)))
    for start in range(0, len(pts), chunk):
        p = pts[start : start + chunk][:, None, :]  # (P, 1, 3)
        d2 = np.minimum(
            _segment_d2(p, a, b),
            np.minimum(_segment_d2(p, b, c), _segment_d2(p, c, a)),
        )
        v0 = b - a
        v1 = c - a
        v2 = p - a
        d00 = (v0 * v0).sum(axis=-1)
        d01 = (v0 * v1).sum(axis=-1)
        d11 = (v1 * v1).sum(axis=-1)
        d20 = (v2 * v0).sum(axis=-1)
        d21 = (v2 * v1).sum(axis=-1)
        denom = d00 * d11 - d01 * d01
        v = (d11 * d20 - d01 * d21) / denom
        w = (d00 * d21 - d01 * d20) / denom
        inside = (v >= 0.0) & (w >= 0.0) & (v + w <= 1.0)
        closest = a + v[..., None] * v0 + w[..., None] * v1
        plane_d2 = ((p - closest) ** 2).sum(axis=-1)
        d2 = np.where(inside, np.minimum(d2, plane_d2), d2)
        out[start : start + chunk] = np.sqrt(d2.min(axis=1))
    return out


def _segment_d2(p, u, v):
    """Squared distance from points (P, 1, 3) to segments u->v (F, 3)."""
    uv = v - u
    t = ((p - u) * uv).sum(axis=-1) / (uv * uv).sum(axis=-1)
    t = np.clip(t, 0.0, 1.0)
    closest = u + t[..., None] * uv
    return ((p - closest) ** 2).sum(axis=-1)


# --- mesh file I/O -----------------------------------------------------------


def load_mesh(path) -> TriMesh:
    """Load a triangle mesh from an ASCII OBJ or STL file by extension."""
    suffix = Path(path).suffix.lower()
    if suffix == ".obj":
        return load_obj(path)
    if suffix == ".stl":
        return load_stl(path)
    raise MeshFormatError(f"{path}: unsupported mesh format {suffix!r}")


def load_obj(path) -> TriMesh:
    """Parse an OBJ file; only v and triangular f records are honored."""
    verts = []
    faces = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshFormatError(f"{path}:{lineno}: bad vertex record")
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            if len(parts) != 4:
                raise MeshFormatError(f"{path}:{lineno}: only triangular faces are supported")
            idx = []
            for token in parts[1:]:
                first = token.split("/")[0]
                value = int(first)
                if value <= 0:
                    raise MeshFormatError(f"{path}:{lineno}: face indices must be positive")
                idx.append(value - 1)
            faces.append(idx)
    try:
        return TriMesh(np.array(verts, dtype=np.float64), np.array(faces, dtype=np.int64))
    except ValueError as exc:
        raise MeshFormatError(f"{path}: {exc}") from exc


def load_stl(path) -> TriMesh:
    """Parse an ASCII STL file into an indexed triangle mesh.

    Repeated coordinates are merged by exact equality so shared corners get
    shared indices.
    """
    text = Path(path).read_text(errors="strict")
    if not text.lstrip().startswith("solid"):
        raise MeshFormatError(f"{path}: only ASCII STL is supported")
    vert_index: dict[tuple, int] = {}
    verts: list[list[float]] = []
    faces = []
    triangle: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "vertex":
            if len(parts) != 4:
                raise MeshFormatError(f"{path}:{lineno}: bad vertex record")
            key = (float(parts[1]), float(parts[2]), float(parts[3]))
            if key not in vert_index:
                vert_index[key] = len(verts)
                verts.append(list(key))
            triangle.append(vert_index[key])
        elif parts[0] == "endfacet":
            if len(triangle) != 3:
                raise MeshFormatError(f"{path}:{lineno}: facet does not have 3 vertices")
            faces.append(triangle)
            triangle = []
    if triangle:
        raise MeshFormatError(f"{path}: unterminated facet")
    try:
        return TriMesh(np.array(verts, dtype=np.float64), np.array(faces, dtype=np.int64))
    except ValueError as exc:
        raise MeshFormatError(f"{path}: {exc}") from exc


def save_obj(mesh: TriMesh, path) -> None:
    """Write an OBJ file with full-precision vertex coordinates."""
    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    for i, j, k in mesh.faces:
        lines.append(f"f {i + 1} {j + 1} {k + 1}")
    Path(path).write_text("\n".join(lines) + "\n")
