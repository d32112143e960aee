"""Procedural grasp-object meshes.

Four built-in families (knoblike, handlelike, slblock, screwdriverlike) plus
pass-through loading of a custom mesh file. Built-in shapes are watertight,
deterministic, recentered so the surface centroid sits at the origin, and
deliberately free of rotational self-symmetry: each carries an off-axis
feature (pointer ridge, offset crossbar, thumb tab) so a pose is uniquely
recoverable and rotation error is well defined.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import BadDimensions
from ..mesh import TriMesh, load_mesh

KINDS = ("knoblike", "handlelike", "slblock", "screwdriverlike", "custom")

_DEFAULT_DIMENSIONS = {
    "knoblike": {"radius": 15.0, "height": 30.0, "segments": 32.0},
    "handlelike": {
        "length": 55.0,
        "height": 60.0,
        "width": 15.0,
        "depth": 15.0,
        "thickness": 15.0,
        "offset": 13.75,
    },
    "slblock": {"cell": 10.0},
    "screwdriverlike": {
        "shaft_radius": 3.0,
        "shaft_length": 55.0,
        "tip_length": 12.0,
        "handle_radius": 11.0,
        "handle_length": 33.0,
        "segments": 32.0,
    },
    "custom": {},
}

# Unit cells of the S-over-L polycube, chosen connected and chiral.
_SL_CELLS = (
    (0, 0, 0), (1, 0, 0), (1, 1, 0), (2, 1, 0),
    (0, 0, 1), (0, 1, 1), (0, 2, 1), (1, 2, 1),
)


@dataclass(frozen=True)
class ShapeSpec:
    """Which object family to build and with what dimensions (mm)."""

    kind: str
    dimensions: dict = field(default_factory=dict)
    mesh_path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadDimensions(f"unknown shape kind {self.kind!r}, expected one of {KINDS}")
        if self.kind == "custom":
            if not self.mesh_path:
                raise BadDimensions("custom shapes need a mesh_path")
            if self.dimensions:
                raise BadDimensions("custom shapes take no dimensions")
        else:
            defaults = _DEFAULT_DIMENSIONS[self.kind]
            unknown = set(self.dimensions) - set(defaults)
            if unknown:
                raise BadDimensions(
                    f"unknown dimensions for {self.kind}: {sorted(unknown)}"
                )
            for key, value in self.dimensions.items():
                if not np.isfinite(value) or value <= 0.0:
                    raise BadDimensions(f"{self.kind}.{key} must be positive, got {value}")
        object.__setattr__(self, "dimensions", dict(self.dimensions))

    def resolved(self) -> dict:
        """Dimension dict with defaults filled in."""
        merged = dict(_DEFAULT_DIMENSIONS[self.kind])
        merged.update(self.dimensions)
        return merged

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "dimensions": dict(self.dimensions)}
        if self.mesh_path is not None:
            out["mesh_path"] = self.mesh_path
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ShapeSpec":
        return cls(
            kind=data["kind"],
            dimensions=dict(data.get("dimensions", {})),
            mesh_path=data.get("mesh_path"),
        )


def generate_shape(spec: ShapeSpec) -> TriMesh:
    """Build the mesh for a spec. Deterministic; no randomness involved."""
    if spec.kind == "custom":
        return load_mesh(spec.mesh_path)
    dims = spec.resolved()
    if spec.kind == "knoblike":
        mesh = _knoblike(dims)
    elif spec.kind == "handlelike":
        mesh = _handlelike(dims)
    elif spec.kind == "slblock":
        mesh = _slblock(dims)
    else:
        mesh = _screwdriverlike(dims)
    return mesh.translated(-mesh.centroid)


# --- primitive builders ------------------------------------------------------


def _merge(parts: list[TriMesh]) -> TriMesh:
    verts = []
    faces = []
    offset = 0
    for part in parts:
        verts.append(part.vertices)
        faces.append(part.faces + offset)
        offset += len(part.vertices)
    return TriMesh(np.concatenate(verts), np.concatenate(faces))


def _revolve(profile, segments: int) -> TriMesh:
    """Surface of revolution about the z axis.

    profile is a list of (radius, z) pairs traversed from the bottom pole to
    the top pole (first and last radius must be 0) with the solid's interior
    on the left, which makes every face wind outward.
    """
    if profile[0][0] != 0.0 or profile[-1][0] != 0.0:
        raise ValueError("profile must start and end on the axis")
    angles = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    cos, sin = np.cos(angles), np.sin(angles)

    verts: list[np.ndarray] = []
    rings: list[np.ndarray | int] = []  # per profile row: vertex index or ring index array
    for radius, z in profile:
        if radius == 0.0:
            rings.append(len(verts))
            verts.append(np.array([0.0, 0.0, z]))
        else:
            idx = np.arange(len(verts), len(verts) + segments)
            rings.append(idx)
            verts.extend(np.column_stack([radius * cos, radius * sin, np.full(segments, z)]))

    faces = []
    nxt = np.roll(np.arange(segments), -1)
    for (r0, _), (r1, _), ring0, ring1 in zip(profile, profile[1:], rings, rings[1:]):
        if r0 == 0.0 and r1 == 0.0:
            continue
        if r0 == 0.0:  # bottom fan, winds downward/outward
            pole, ring = ring0, ring1
            for k in range(segments):
                faces.append((pole, ring[nxt[k]], ring[k]))
        elif r1 == 0.0:  # top fan
            ring, pole = ring0, ring1
            for k in range(segments):
                faces.append((ring[k], ring[nxt[k]], pole))
        else:
            for k in range(segments):
                a, b = ring0[k], ring0[nxt[k]]
                c, d = ring1[nxt[k]], ring1[k]
                faces.append((a, b, c))
                faces.append((a, c, d))
    return TriMesh(np.array(verts), np.array(faces, dtype=np.int64))


def _box(min_corner, max_corner) -> TriMesh:
    """Axis-aligned box with outward-wound faces."""
    x0, y0, z0 = min_corner
    x1, y1, z1 = max_corner
    if not (x1 > x0 and y1 > y0 and z1 > z0):
        raise ValueError("box corners are not ordered")
    quads = [
        # (+x), (-x), (+y), (-y), (+z), (-z); each CCW seen from outside
        [(x1, y0, z0), (x1, y1, z0), (x1, y1, z1), (x1, y0, z1)],
        [(x0, y0, z0), (x0, y0, z1), (x0, y1, z1), (x0, y1, z0)],
        [(x0, y1, z0), (x0, y1, z1), (x1, y1, z1), (x1, y1, z0)],
        [(x0, y0, z0), (x1, y0, z0), (x1, y0, z1), (x0, y0, z1)],
        [(x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1)],
        [(x0, y0, z0), (x0, y1, z0), (x1, y1, z0), (x1, y0, z0)],
    ]
    verts = []
    faces = []
    index: dict[tuple, int] = {}
    for quad in quads:
        idx = []
        for corner in quad:
            if corner not in index:
                index[corner] = len(verts)
                verts.append(corner)
            idx.append(index[corner])
        faces.append((idx[0], idx[1], idx[2]))
        faces.append((idx[0], idx[2], idx[3]))
    return TriMesh(np.array(verts, dtype=np.float64), np.array(faces, dtype=np.int64))


def _polycube(cells, size: float) -> TriMesh:
    """Mesh of the boundary of a set of unit cells scaled by size."""
    cell_set = set(cells)
    # (normal axis, +/-1, corner order) per exposed face; orders wind outward.
    offsets = {
        (0, 1): [(1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)],
        (0, -1): [(0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)],
        (1, 1): [(0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)],
        (1, -1): [(0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)],
        (2, 1): [(0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)],
        (2, -1): [(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)],
    }
    verts: list[tuple] = []
    index: dict[tuple, int] = {}
    faces = []
    for cell in sorted(cell_set):
        for (axis, sign), order in offsets.items():
            neighbor = list(cell)
            neighbor[axis] += sign
            if tuple(neighbor) in cell_set:
                continue
            idx = []
            for corner in order:
                lattice = tuple(c + o for c, o in zip(cell, corner))
                if lattice not in index:
                    index[lattice] = len(verts)
                    verts.append(lattice)
                idx.append(index[lattice])
            faces.append((idx[0], idx[1], idx[2]))
            faces.append((idx[0], idx[2], idx[3]))
    return TriMesh(np.array(verts, dtype=np.float64) * size, np.array(faces, dtype=np.int64))


# --- shape families ----------------------------------------------------------


def _knoblike(dims: dict) -> TriMesh:
    """Crank-style knob: narrow stem, full-radius cap, a lever arm on top
    protruding past the cap rim, and an underside fin poking out the other
    side. The protrusions leave no rotation that comes close to mapping the
    surface onto itself, so pose recovery stays well conditioned even under
    sensor noise."""
    r = dims["radius"]
    h = dims["height"]
    segments = int(dims["segments"])
    if segments < 8 or segments % 4:
        raise BadDimensions("knoblike segments must be >= 8 and divisible by 4")
    stem_r = 0.55 * r
    z_bot, z_stem, z_cap = -0.5 * h, -0.05 * h, 0.30 * h
    body = _revolve(
        [(0.0, z_bot), (stem_r, z_bot), (stem_r, z_stem), (r, z_stem), (r, z_cap), (0.0, z_cap)],
        segments,
    )
    lever = _box((-0.40 * r, -0.20 * r, z_cap), (1.80 * r, 0.20 * r, 0.5 * h))
    fin = _box((-1.30 * r, -0.12 * r, z_bot), (-0.30 * r, 0.12 * r, z_stem))
    return _merge([body, lever, fin])


def _handlelike(dims: dict) -> TriMesh:
    """T-bar handle; the crossbar is offset along its length so no rotation
    maps the shape onto itself."""
    length, height = dims["length"], dims["height"]
    width, depth = dims["width"], dims["depth"]
    thickness, offset = dims["thickness"], dims["offset"]
    if thickness >= height:
        raise BadDimensions("handlelike thickness must be smaller than height")
    if offset + length / 2.0 < width / 2.0 or offset - length / 2.0 > -width / 2.0:
        raise BadDimensions("handlelike crossbar must cover the stem")
    stem = _box(
        (-width / 2.0, -depth / 2.0, -height / 2.0),
        (width / 2.0, depth / 2.0, height / 2.0 - thickness),
    )
    cross = _box(
        (offset - length / 2.0, -depth / 2.0, height / 2.0 - thickness),
        (offset + length / 2.0, depth / 2.0, height / 2.0),
    )
    return _merge([stem, cross])


def _slblock(dims: dict) -> TriMesh:
    """S-tetromino stacked on an L-tetromino, in unit cells of dims['cell']."""
    return _polycube(_SL_CELLS, dims["cell"])


def _screwdriverlike(dims: dict) -> TriMesh:
    """Tapered tip, thin shaft, thick handle, plus a thumb tab on the handle."""
    shaft_r = dims["shaft_radius"]
    shaft_len = dims["shaft_length"]
    tip_len = dims["tip_length"]
    handle_r = dims["handle_radius"]
    handle_len = dims["handle_length"]
    segments = int(dims["segments"])
    if segments < 8 or segments % 4:
        raise BadDimensions("screwdriverlike segments must be >= 8 and divisible by 4")
    if tip_len >= shaft_len:
        raise BadDimensions("screwdriverlike tip_length must be below shaft_length")
    if handle_r <= shaft_r:
        raise BadDimensions("screwdriverlike handle must be wider than the shaft")
    total = shaft_len + handle_len
    z0 = -0.5 * total
    z_shaft = z0 + shaft_len
    z_top = z_shaft + handle_len
    body = _revolve(
        [
            (0.0, z0),
            (shaft_r, z0 + tip_len),
            (shaft_r, z_shaft),
            (handle_r, z_shaft),
            (handle_r, z_top),
            (0.0, z_top),
        ],
        segments,
    )
    tab = _box(
        (handle_r - 1.0, -3.0, z_shaft + 0.25 * handle_len),
        (handle_r + 3.0, 3.0, z_shaft + 0.60 * handle_len),
    )
    return _merge([body, tab])
