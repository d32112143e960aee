"""Scene assembly, persistence, and the benchmark suites."""
import json

import numpy as np
import pytest

from vtreg.errors import BadDimensions
from vtreg.geometry import RigidTransform
from vtreg.mesh import point_mesh_distance
from vtreg.synth import (
    DEFAULT_CAMERA,
    DEFAULT_TACTILE,
    CameraSpec,
    PoseSampler,
    ShapeSpec,
    generate_scene,
    insertion_preset,
    load_scene,
    preset_scene,
    save_scene,
)
from vtreg.synth.scene import benchmark_scenes, suite_scene

QUIET_CAMERA = CameraSpec(
    position=np.array([180.0, 140.0, 220.0]),
    look_at=np.zeros(3),
    frame_count=2,
)


def small_scene(seed=11):
    return generate_scene(
        ShapeSpec("slblock"), PoseSampler(), QUIET_CAMERA, DEFAULT_TACTILE, seed
    )


def test_generate_scene_is_deterministic():
    a = small_scene()
    b = small_scene()
    assert np.array_equal(a.gt_pose.matrix, b.gt_pose.matrix)
    assert np.array_equal(a.gt_surface.points, b.gt_surface.points)
    assert np.array_equal(a.tactile_cloud.points, b.tactile_cloud.points)
    for fa, fb in zip(a.vision_frames, b.vision_frames):
        assert np.array_equal(fa.points, fb.points)
    assert a.metadata == b.metadata
    assert a.scene_id == "scene-000011"


def test_seed_substreams_are_independent():
    # A camera tweak must not ripple into the pose or the touch data.
    base = small_scene()
    noisier = generate_scene(
        ShapeSpec("slblock"),
        PoseSampler(),
        CameraSpec(
            position=np.array([180.0, 140.0, 220.0]),
            look_at=np.zeros(3),
            frame_count=2,
            noise_sigma=2.5,
        ),
        DEFAULT_TACTILE,
        11,
    )
    assert np.array_equal(base.gt_pose.matrix, noisier.gt_pose.matrix)
    assert np.array_equal(base.tactile_cloud.points, noisier.tactile_cloud.points)
    assert not np.array_equal(
        base.vision_frames.frames[0].points, noisier.vision_frames.frames[0].points
    )


def test_auto_contacts_are_an_antipodal_surface_pair():
    scene = small_scene()
    contacts = scene.tactile.contact_points
    assert len(contacts) == 2
    gaps = point_mesh_distance(np.stack(contacts), scene.mesh)
    assert gaps.max() < 1e-6
    assert np.linalg.norm(contacts[0] - contacts[1]) > 10.0


def test_explicit_contacts_are_honored():
    probe = small_scene()
    spec = type(DEFAULT_TACTILE)(
        contact_points=(probe.tactile.contact_points[0],), patch_radius=6.0
    )
    scene = generate_scene(ShapeSpec("slblock"), PoseSampler(), QUIET_CAMERA, spec, 11)
    assert len(scene.tactile.contact_points) == 1
    assert len(scene.tactile_cloud) > 0


def test_scene_metadata_counts_match_clouds():
    scene = small_scene()
    assert scene.metadata["tactile_point_count"] == len(scene.tactile_cloud)
    assert 0.0 <= scene.occlusion <= 1.0


def test_save_then_load_roundtrips(tmp_path):
    scene = small_scene()
    save_scene(scene, tmp_path / "s")
    loaded = load_scene(tmp_path / "s")
    assert np.array_equal(loaded.gt_pose.matrix, scene.gt_pose.matrix)
    assert np.array_equal(loaded.gt_surface.points, scene.gt_surface.points)
    assert np.array_equal(loaded.tactile_cloud.points, scene.tactile_cloud.points)
    assert np.array_equal(loaded.mesh.vertices, scene.mesh.vertices)
    assert len(loaded.vision_frames.frames) == len(scene.vision_frames.frames)
    for fa, fb in zip(loaded.vision_frames, scene.vision_frames):
        assert np.array_equal(fa.points, fb.points)
    assert loaded.shape == scene.shape
    assert loaded.seed == scene.seed
    assert loaded.metadata == scene.metadata


def test_save_is_byte_identical(tmp_path):
    scene = small_scene()
    save_scene(scene, tmp_path / "a")
    save_scene(scene, tmp_path / "b")
    for name in sorted(p.name for p in (tmp_path / "a").iterdir()):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_load_rejects_unknown_format(tmp_path):
    scene = small_scene()
    save_scene(scene, tmp_path / "s")
    manifest = json.loads((tmp_path / "s" / "scene.json").read_text())
    manifest["format"] = "grasp-scene/999"
    (tmp_path / "s" / "scene.json").write_text(json.dumps(manifest))
    with pytest.raises(ValueError):
        load_scene(tmp_path / "s")


def test_missing_tactile_file_semantics(tmp_path):
    scene = small_scene()
    save_scene(scene, tmp_path / "s")
    (tmp_path / "s" / "tactile.ply").unlink()
    with pytest.raises(FileNotFoundError):
        load_scene(tmp_path / "s")
    loaded = load_scene(tmp_path / "s", missing_tactile_ok=True)
    assert len(loaded.tactile_cloud) == 0


def test_pose_sampler_fixed_and_random():
    rot = np.eye(3)
    fixed = PoseSampler(fixed_rotation=rot, fixed_translation=np.array([1.0, 2.0, 3.0]))
    pose = fixed.sample(np.random.default_rng(0))
    assert np.array_equal(pose.rotation, rot)
    assert np.array_equal(pose.translation, [1.0, 2.0, 3.0])

    free = PoseSampler(translation_extent=20.0)
    for k in range(10):
        pose = free.sample(np.random.default_rng(k))
        assert np.allclose(pose.rotation @ pose.rotation.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(pose.rotation) == pytest.approx(1.0)
        assert np.all(np.abs(pose.translation) <= 20.0)


def test_pose_sampler_validation_and_roundtrip():
    with pytest.raises(BadDimensions):
        PoseSampler(translation_extent=-1.0)
    with pytest.raises(BadDimensions):
        PoseSampler(fixed_rotation=np.eye(2))
    with pytest.raises(BadDimensions):
        PoseSampler(fixed_translation=np.zeros(2))
    sampler = PoseSampler(
        translation_extent=10.0,
        fixed_rotation=np.eye(3),
        fixed_translation=np.array([4.0, 5.0, 6.0]),
    )
    again = PoseSampler.from_dict(sampler.to_dict())
    assert np.array_equal(again.fixed_rotation, sampler.fixed_rotation)
    assert np.array_equal(again.fixed_translation, sampler.fixed_translation)
    assert again.translation_extent == 10.0
    bare = PoseSampler.from_dict(PoseSampler().to_dict())
    assert bare.fixed_rotation is None and bare.fixed_translation is None


def test_insertion_preset_zero_angle_occlusion_band():
    scene = insertion_preset(0.0)
    assert 0.75 <= scene.occlusion <= 0.85
    assert scene.shape.kind == "screwdriverlike"
    assert np.array_equal(scene.gt_pose.rotation, np.eye(3))


def test_insertion_preset_angle_validation():
    with pytest.raises(BadDimensions):
        insertion_preset(-5.0)
    with pytest.raises(BadDimensions):
        insertion_preset(61.0)


def test_preset_scene_name_parsing():
    scene = preset_scene("insertion-30deg")
    assert scene.shape.kind == "screwdriverlike"
    with pytest.raises(BadDimensions):
        preset_scene("insertion-xyzdeg")
    with pytest.raises(BadDimensions):
        preset_scene("freefall")


def test_suite_scene_cycles_shapes_and_seeds():
    first = suite_scene(0, count=6, base_seed=500)
    second = suite_scene(1, count=6, base_seed=500)
    fourth = suite_scene(3, count=6, base_seed=500)
    assert first.shape.kind == "knoblike"
    assert second.shape.kind == "handlelike"
    assert fourth.shape.kind == "knoblike"
    assert first.seed == 500 and fourth.seed == 503
    assert first.camera.dropout_fraction == 0.0
    last = suite_scene(5, count=6, base_seed=500)
    assert last.camera.dropout_fraction == pytest.approx(0.985)
    assert last.occlusion > first.occlusion


def test_suite_scene_validation():
    with pytest.raises(BadDimensions):
        suite_scene(-1, count=10)
    with pytest.raises(BadDimensions):
        suite_scene(10, count=10)
    with pytest.raises(BadDimensions):
        suite_scene(0, count=0)


def test_benchmark_scenes_yields_lazily():
    gen = benchmark_scenes(count=4, base_seed=800)
    first = next(gen)
    assert first.seed == 800
    rest = list(gen)
    assert len(rest) == 3
    assert rest[-1].seed == 803
