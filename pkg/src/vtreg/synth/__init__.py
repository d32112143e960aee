"""Synthetic grasp-scene generation: shapes, simulated sensors, scenes."""
from .scene import (
    DEFAULT_CAMERA,
    DEFAULT_TACTILE,
    GraspScene,
    PoseSampler,
    benchmark_scenes,
    generate_scene,
    insertion_preset,
    load_scene,
    preset_scene,
    save_scene,
)
from .sensors import (
    CameraSpec,
    TactileSpec,
    point_inside_mesh,
    render_vision,
    sample_tactile,
    visible_mask,
)
from .shapes import KINDS, ShapeSpec, generate_shape

__all__ = [
    "DEFAULT_CAMERA",
    "DEFAULT_TACTILE",
    "CameraSpec",
    "GraspScene",
    "KINDS",
    "PoseSampler",
    "ShapeSpec",
    "TactileSpec",
    "benchmark_scenes",
    "generate_scene",
    "generate_shape",
    "insertion_preset",
    "load_scene",
    "point_inside_mesh",
    "preset_scene",
    "render_vision",
    "sample_tactile",
    "save_scene",
    "visible_mask",
]
