"""Grasp-scene assembly, persistence, and benchmark suites.

A scene bundles one object at a hidden ground-truth pose with everything a
registration trial needs: the model mesh, a reference surface sampling, the
simulated camera frames, and the tactile patches. Generation is a pure
function of (specs, seed); saving a scene twice yields byte-identical files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..cloud import LabeledPointCloud, load_ply, save_ply
from ..errors import BadDimensions
from ..fusion import DEFAULT_CAPTURE_RADIUS, occlusion_metric
from ..geometry import RigidTransform, random_rotation
from ..mesh import STANDARD_DENSITY, TriMesh, load_obj, sample_surface, save_obj
from ..preprocess import DEFAULT_MERGE_RADIUS, FrameSequence, temporal_average
from .sensors import CameraSpec, TactileSpec, render_vision, sample_tactile
from .shapes import ShapeSpec, generate_shape

_MANIFEST_FORMAT = "grasp-scene/1"
# Grip axis elevation range for auto-placed antipodal contacts (radians).
_GRIP_ELEVATION = 0.35

DEFAULT_CAMERA = CameraSpec(
    position=np.array([180.0, 140.0, 220.0]),
    look_at=np.zeros(3),
)
DEFAULT_TACTILE = TactileSpec()


@dataclass(frozen=True, eq=False)
class PoseSampler:
    """Ground-truth pose distribution: uniform SO(3) rotations and uniform
    translations inside a centered cube, unless fixed values are given."""

    translation_extent: float = 50.0
    fixed_rotation: np.ndarray | None = None
    fixed_translation: np.ndarray | None = None

    def __post_init__(self):
        if self.translation_extent < 0.0:
            raise BadDimensions("translation_extent must be non-negative")
        if self.fixed_rotation is not None:
            rot = np.asarray(self.fixed_rotation, dtype=np.float64)
            if rot.shape != (3, 3):
                raise BadDimensions("fixed_rotation must be 3x3")
            rot.flags.writeable = False
            object.__setattr__(self, "fixed_rotation", rot)
        if self.fixed_translation is not None:
            tr = np.asarray(self.fixed_translation, dtype=np.float64)
            if tr.shape != (3,):
                raise BadDimensions("fixed_translation must be a 3-vector")
            tr.flags.writeable = False
            object.__setattr__(self, "fixed_translation", tr)

    def sample(self, rng: np.random.Generator) -> RigidTransform:
        if self.fixed_rotation is not None:
            rotation = self.fixed_rotation
        else:
            rotation = random_rotation(rng)
        if self.fixed_translation is not None:
            translation = self.fixed_translation
        else:
            extent = self.translation_extent
            translation = rng.uniform(-extent, extent, 3)
        return RigidTransform(rotation, translation)

    def to_dict(self) -> dict:
        out: dict = {"translation_extent": float(self.translation_extent)}
        if self.fixed_rotation is not None:
            out["fixed_rotation"] = [float(v) for v in self.fixed_rotation.reshape(-1)]
        if self.fixed_translation is not None:
            out["fixed_translation"] = [float(v) for v in self.fixed_translation]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PoseSampler":
        rot = data.get("fixed_rotation")
        if rot is not None:
            rot = np.array(rot, dtype=np.float64).reshape(3, 3)
        tr = data.get("fixed_translation")
        if tr is not None:
            tr = np.array(tr, dtype=np.float64)
        return cls(
            translation_extent=data.get("translation_extent", 50.0),
            fixed_rotation=rot,
            fixed_translation=tr,
        )


@dataclass(eq=False)
class GraspScene:
    """One synthetic trial: object, hidden pose, and sensor captures."""

    shape: ShapeSpec
    camera: CameraSpec
    tactile: TactileSpec
    seed: int
    mesh: TriMesh
    gt_pose: RigidTransform
    gt_surface: LabeledPointCloud
    vision_frames: FrameSequence
    tactile_cloud: LabeledPointCloud
    metadata: dict

    @property
    def scene_id(self) -> str:
        return f"scene-{self.seed:06d}"

    @property
    def occlusion(self) -> float:
        return float(self.metadata["occlusion"])


def generate_scene(
    shape: ShapeSpec,
    sampler: PoseSampler,
    camera: CameraSpec,
    tactile: TactileSpec,
    seed: int,
) -> GraspScene:
    """Build one scene deterministically from its seed.

    Pose, contact placement, and sensor noise draw from separate seed
    substreams so changing one spec never perturbs the others. Unset tactile
    contacts are auto-placed as an antipodal pair along a random grip axis.
    """
    mesh = generate_shape(shape)
    gt_pose = sampler.sample(np.random.default_rng([seed, 1]))
    gt_surface = sample_surface(mesh, STANDARD_DENSITY, seed=[seed, 3]).transformed(gt_pose)

    if tactile.contact_points is None:
        rng = np.random.default_rng([seed, 2])
        azimuth = rng.uniform(0.0, 2.0 * np.pi)
        elevation = rng.uniform(-_GRIP_ELEVATION, _GRIP_ELEVATION)
        axis = np.array(
            [
                np.cos(elevation) * np.cos(azimuth),
                np.cos(elevation) * np.sin(azimuth),
                np.sin(elevation),
            ]
        )
        along = gt_surface.points @ axis
        grip_world = gt_surface.points[[int(np.argmax(along)), int(np.argmin(along))]]
        grip_model = gt_pose.inverse().apply(grip_world)
        tactile = replace(tactile, contact_points=tuple(grip_model))

    tactile_cloud = sample_tactile(mesh, gt_pose, tactile, seed)
    vision_frames = render_vision(mesh, gt_pose, camera, seed)

    averaged = temporal_average(vision_frames, DEFAULT_MERGE_RADIUS)
    metadata = {
        "occlusion": occlusion_metric(averaged, gt_surface, DEFAULT_CAPTURE_RADIUS),
        "vision_point_count": len(averaged),
        "tactile_point_count": len(tactile_cloud),
    }
    return GraspScene(
        shape=shape,
        camera=camera,
        tactile=tactile,
        seed=seed,
        mesh=mesh,
        gt_pose=gt_pose,
        gt_surface=gt_surface,
        vision_frames=vision_frames,
        tactile_cloud=tactile_cloud,
        metadata=metadata,
    )


def save_scene(scene: GraspScene, directory) -> None:
    """Persist a scene as a directory of mesh/cloud files plus a manifest.

    The manifest is written last so a directory with scene.json present is
    always complete.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_obj(scene.mesh, directory / "mesh.obj")
    save_ply(scene.gt_surface, directory / "gt_surface.ply")
    save_ply(scene.tactile_cloud, directory / "tactile.ply")
    vision_files = []
    for i, frame in enumerate(scene.vision_frames):
        name = f"vision_{i:03d}.ply"
        save_ply(frame, directory / name)
        vision_files.append(name)
    manifest = {
        "format": _MANIFEST_FORMAT,
        "scene_id": scene.scene_id,
        "seed": int(scene.seed),
        "gt_pose": [float(v) for v in scene.gt_pose.matrix.reshape(-1)],
        "shape": scene.shape.to_dict(),
        "camera": scene.camera.to_dict(),
        "tactile": scene.tactile.to_dict(),
        "metadata": {k: (float(v) if isinstance(v, float) else v) for k, v in scene.metadata.items()},
        "files": {
            "mesh": "mesh.obj",
            "gt_surface": "gt_surface.ply",
            "tactile": "tactile.ply",
            "vision": vision_files,
        },
    }
    (directory / "scene.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_scene(directory, missing_tactile_ok: bool = False) -> GraspScene:
    """Load a scene directory written by save_scene.

    With missing_tactile_ok a deleted tactile file degrades to an empty
    tactile cloud instead of failing, for vision-only workflows.
    """
    directory = Path(directory)
    manifest = json.loads((directory / "scene.json").read_text())
    if manifest.get("format") != _MANIFEST_FORMAT:
        raise ValueError(f"unrecognized scene format {manifest.get('format')!r}")
    files = manifest["files"]
    frames = tuple(load_ply(directory / name) for name in files["vision"])
    matrix = np.array(manifest["gt_pose"], dtype=np.float64).reshape(4, 4)
    tactile_path = directory / files["tactile"]
    if missing_tactile_ok and not tactile_path.exists():
        tactile_cloud = LabeledPointCloud.empty()
    else:
        tactile_cloud = load_ply(tactile_path)
    return GraspScene(
        shape=ShapeSpec.from_dict(manifest["shape"]),
        camera=CameraSpec.from_dict(manifest["camera"]),
        tactile=TactileSpec.from_dict(manifest["tactile"]),
        seed=int(manifest["seed"]),
        mesh=load_obj(directory / files["mesh"]),
        gt_pose=RigidTransform.from_matrix(matrix),
        gt_surface=load_ply(directory / files["gt_surface"]),
        vision_frames=FrameSequence(frames),
        tactile_cloud=tactile_cloud,
        metadata=dict(manifest["metadata"]),
    )


# --- presets and suites ------------------------------------------------------

_SUITE_SHAPES = ("knoblike", "handlelike", "slblock")
# Dropout schedule endpoint; tuned so suite occlusion tops out just past 0.98.
_SUITE_MAX_DROPOUT = 0.985


def _rotation_about_y(angle_deg: float) -> np.ndarray:
    a = np.radians(angle_deg)
    return np.array(
        [
            [np.cos(a), 0.0, np.sin(a)],
            [0.0, 1.0, 0.0],
            [-np.sin(a), 0.0, np.cos(a)],
        ]
    )


def insertion_preset(angle_deg: float, seed: int = 7) -> GraspScene:
    """Tool-insertion occlusion sweep: a screwdriver-like object tilted by
    angle_deg with gripper dropout growing alongside the tilt.

    The 0 degree preset is tuned to land at roughly 0.8 stored occlusion.
    """
    if not 0.0 <= angle_deg <= 60.0:
        raise BadDimensions("insertion presets cover tool angles 0..60 degrees")
    dropout = min(0.75 + 0.005 * angle_deg, 0.97)
    camera = CameraSpec(
        position=np.array([180.0, 140.0, 220.0]),
        look_at=np.zeros(3),
        dropout_fraction=dropout,
    )
    sampler = PoseSampler(
        fixed_rotation=_rotation_about_y(angle_deg),
        fixed_translation=np.zeros(3),
    )
    shape = ShapeSpec("screwdriverlike")
    return generate_scene(shape, sampler, camera, DEFAULT_TACTILE, seed)


def preset_scene(name: str, seed: int = 7) -> GraspScene:
    """Named scene presets; currently the insertion-<angle>deg family."""
    if name.startswith("insertion-") and name.endswith("deg"):
        try:
            angle = float(name[len("insertion-") : -len("deg")])
        except ValueError:
            raise BadDimensions(f"bad preset name {name!r}") from None
        return insertion_preset(angle, seed)
    raise BadDimensions(f"unknown preset {name!r}")


def suite_scene(index: int, count: int = 150, base_seed: int = 1000) -> GraspScene:
    """Scene number `index` of the default benchmark suite.

    Shapes cycle through three families while the dropout fraction sweeps
    from 0 to near-total, stratifying scenes across the occlusion range.
    """
    if count < 1:
        raise BadDimensions("suite needs at least one scene")
    if not 0 <= index < count:
        raise BadDimensions(f"suite index {index} outside 0..{count - 1}")
    frac = index / max(count - 1, 1)
    camera = replace(DEFAULT_CAMERA, dropout_fraction=_SUITE_MAX_DROPOUT * frac)
    shape = ShapeSpec(_SUITE_SHAPES[index % len(_SUITE_SHAPES)])
    return generate_scene(shape, PoseSampler(), camera, DEFAULT_TACTILE, base_seed + index)


def benchmark_scenes(count: int = 150, base_seed: int = 1000):
    """Yield the default benchmark suite lazily."""
    for i in range(count):
        yield suite_scene(i, count, base_seed)
