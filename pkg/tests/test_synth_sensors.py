"""Simulated depth camera and contact patches."""
import numpy as np
import pytest

from vtreg.cloud import Modality
from vtreg.errors import BadDimensions, CameraInsideMesh, ContactOffSurface
from vtreg.geometry import RigidTransform
from vtreg.mesh import point_mesh_distance, sample_surface
from vtreg.synth import (
    CameraSpec,
    ShapeSpec,
    TactileSpec,
    generate_shape,
    point_inside_mesh,
    render_vision,
    sample_tactile,
    visible_mask,
)
from vtreg.synth.shapes import _box

BOX = _box((0.0, 0.0, 0.0), (10.0, 10.0, 10.0))
SIDE_CAMERA = CameraSpec(
    position=np.array([100.0, 5.0, 5.0]),
    look_at=np.array([5.0, 5.0, 5.0]),
    noise_sigma=0.0,
    frame_count=2,
)


def test_point_inside_mesh():
    assert point_inside_mesh([5.0, 5.0, 5.0], BOX)
    assert point_inside_mesh([9.9, 5.0, 5.0], BOX)
    assert not point_inside_mesh([10.1, 5.0, 5.0], BOX)
    assert not point_inside_mesh([-20.0, -20.0, -20.0], BOX)


def test_visible_mask_hand_cases():
    camera = np.array([100.0, 5.0, 5.0])
    points = np.array(
        [
            [10.0, 5.0, 5.0],  # facing the camera
            [0.0, 5.0, 5.0],  # far face, blocked by the box
            [5.0, 5.0, 10.0],  # top face; the sightline dips into the solid
        ]
    )
    mask = visible_mask(points, camera, BOX)
    assert mask.tolist() == [True, False, False]
    assert visible_mask(np.zeros((0, 3)), camera, BOX).shape == (0,)


def test_render_vision_noiseless_points_lie_on_posed_surface():
    mesh = generate_shape(ShapeSpec("knoblike"))
    pose = RigidTransform.from_axis_angle([0.0, 0.0, 1.0], 30.0, [40.0, -5.0, 12.0])
    camera = CameraSpec(
        position=np.array([250.0, 60.0, 90.0]),
        look_at=np.array([40.0, -5.0, 12.0]),
        noise_sigma=0.0,
        frame_count=3,
    )
    frames = render_vision(mesh, pose, camera, seed=5)
    assert len(frames.frames) == 3
    posed = mesh.transformed(pose)
    for frame in frames.frames:
        assert len(frame) > 50
        assert point_mesh_distance(frame.points, posed).max() < 1e-6
        assert np.all(frame.labels == int(Modality.VISION))
        assert np.array_equal(frame.points, frames.frames[0].points)


def test_render_vision_hides_the_far_face():
    frames = render_vision(BOX, RigidTransform.identity(), SIDE_CAMERA, seed=3)
    points = frames.frames[0].points
    assert len(points) > 0
    assert points[:, 0].max() == pytest.approx(10.0, abs=1e-9)
    # Nothing from the x=0 face: every sightline there crosses the interior.
    assert not np.any(points[:, 0] < 0.1)


def test_render_vision_fov_limits_the_cone():
    narrow = CameraSpec(
        position=np.array([100.0, 5.0, 5.0]),
        look_at=np.array([5.0, 5.0, 5.0]),
        fov_deg=4.0,
        noise_sigma=0.0,
        frame_count=1,
    )
    wide = render_vision(BOX, RigidTransform.identity(), SIDE_CAMERA, seed=3)
    tight = render_vision(BOX, RigidTransform.identity(), narrow, seed=3)
    n_wide = len(wide.frames[0])
    n_tight = len(tight.frames[0])
    assert 0 < n_tight < n_wide
    # Every kept point sits inside the cone around the view axis.
    axis = np.array([-1.0, 0.0, 0.0])
    rel = tight.frames[0].points - narrow.position
    along = rel @ axis
    radial = np.linalg.norm(rel - along[:, None] * axis, axis=1)
    assert np.all(radial <= along * np.tan(np.radians(2.0)) + 1e-9)


def test_render_vision_noise_perturbs_each_frame():
    camera = CameraSpec(
        position=np.array([100.0, 5.0, 5.0]),
        look_at=np.array([5.0, 5.0, 5.0]),
        noise_sigma=0.4,
        frame_count=3,
    )
    frames = render_vision(BOX, RigidTransform.identity(), camera, seed=9).frames
    assert not np.array_equal(frames[0].points, frames[1].points)
    assert not np.array_equal(frames[1].points, frames[2].points)
    clean = render_vision(BOX, RigidTransform.identity(), SIDE_CAMERA, seed=9).frames[0]
    assert len(frames[0]) == len(clean)
    drift = np.linalg.norm(frames[0].points - clean.points, axis=1)
    assert drift.mean() < 4 * 0.4


def test_render_vision_dropout_monotone_to_empty():
    counts = []
    for fraction in (0.0, 0.3, 0.6, 0.9, 1.0):
        camera = CameraSpec(
            position=np.array([100.0, 5.0, 5.0]),
            look_at=np.array([5.0, 5.0, 5.0]),
            noise_sigma=0.0,
            frame_count=2,
            dropout_fraction=fraction,
        )
        frames = render_vision(BOX, RigidTransform.identity(), camera, seed=21)
        counts.append(len(frames.frames[0]))
        assert len(frames.frames) == 2
    assert counts == sorted(counts, reverse=True)
    assert counts[0] > 0
    assert counts[-1] == 0


def test_render_vision_seed_determinism():
    one = render_vision(BOX, RigidTransform.identity(), SIDE_CAMERA, seed=4)
    two = render_vision(BOX, RigidTransform.identity(), SIDE_CAMERA, seed=4)
    other = render_vision(BOX, RigidTransform.identity(), SIDE_CAMERA, seed=5)
    for a, b in zip(one.frames, two.frames):
        assert np.array_equal(a.points, b.points)
    assert not np.array_equal(one.frames[0].points, other.frames[0].points)


def test_render_vision_rejects_camera_inside_object():
    camera = CameraSpec(position=np.array([5.0, 5.0, 5.0]), look_at=np.zeros(3))
    with pytest.raises(CameraInsideMesh):
        render_vision(BOX, RigidTransform.identity(), camera, seed=1)


def test_camera_spec_validation_and_roundtrip():
    with pytest.raises(BadDimensions):
        CameraSpec(position=np.zeros(3), look_at=np.zeros(3))
    with pytest.raises(BadDimensions):
        CameraSpec(position=np.zeros(2), look_at=np.ones(3))
    with pytest.raises(BadDimensions):
        CameraSpec(position=np.zeros(3), look_at=np.ones(3), fov_deg=180.0)
    with pytest.raises(BadDimensions):
        CameraSpec(position=np.zeros(3), look_at=np.ones(3), noise_sigma=-0.1)
    with pytest.raises(BadDimensions):
        CameraSpec(position=np.zeros(3), look_at=np.ones(3), frame_count=0)
    with pytest.raises(BadDimensions):
        CameraSpec(position=np.zeros(3), look_at=np.ones(3), dropout_fraction=1.5)
    spec = CameraSpec(
        position=np.array([1.0, 2.0, 3.0]),
        look_at=np.zeros(3),
        fov_deg=55.0,
        noise_sigma=0.2,
        frame_count=4,
        dropout_fraction=0.25,
    )
    again = CameraSpec.from_dict(spec.to_dict())
    assert np.array_equal(again.position, spec.position)
    assert again.fov_deg == 55.0 and again.frame_count == 4
    assert again.dropout_fraction == 0.25


def surface_contacts(mesh, count, seed):
    picks = sample_surface(mesh, 1.0, seed=seed)
    step = max(1, len(picks) // count)
    return tuple(picks.points[::step][:count])


def test_tactile_patches_stay_near_contacts_and_surface():
    mesh = generate_shape(ShapeSpec("knoblike"))
    pose = RigidTransform.from_axis_angle([1.0, 1.0, 0.0], 70.0, [5.0, 30.0, -10.0])
    contacts = surface_contacts(mesh, 3, seed=2)
    spec = TactileSpec(contact_points=contacts, patch_radius=8.0, noise_sigma=0.1)
    cloud = sample_tactile(mesh, pose, spec, seed=6)
    assert len(cloud) > 10
    assert np.all(cloud.labels == int(Modality.TACTILE))
    posed_contacts = pose.apply(np.stack(contacts))
    gaps = np.min(
        np.linalg.norm(cloud.points[:, None, :] - posed_contacts[None, :, :], axis=2),
        axis=1,
    )
    assert gaps.max() <= 8.0 + 3.0 * 0.1 + 1e-9
    posed = mesh.transformed(pose)
    assert point_mesh_distance(cloud.points, posed).max() <= 3.0 * 0.1 + 1e-9


def test_tactile_noise_is_truncated_at_three_sigma():
    mesh = generate_shape(ShapeSpec("handlelike"))
    contacts = surface_contacts(mesh, 2, seed=8)
    pose = RigidTransform.identity()
    clean = sample_tactile(mesh, pose, TactileSpec(contacts, noise_sigma=0.0), seed=3)
    noisy = sample_tactile(mesh, pose, TactileSpec(contacts, noise_sigma=0.5), seed=3)
    assert len(clean) == len(noisy)
    shift = np.linalg.norm(noisy.points - clean.points, axis=1)
    assert shift.max() <= 1.5 + 1e-12
    assert shift.max() > 0.5


def test_tactile_contact_must_touch_surface():
    mesh = generate_shape(ShapeSpec("slblock"))
    lo, hi = mesh.bounds
    far = tuple([np.array(hi) + 5.0])
    with pytest.raises(ContactOffSurface):
        sample_tactile(mesh, RigidTransform.identity(), TactileSpec(far), seed=1)


def test_tactile_empty_and_unresolved_contacts():
    mesh = generate_shape(ShapeSpec("slblock"))
    empty = sample_tactile(mesh, RigidTransform.identity(), TactileSpec(()), seed=1)
    assert len(empty) == 0
    with pytest.raises(BadDimensions):
        sample_tactile(mesh, RigidTransform.identity(), TactileSpec(None), seed=1)


def test_tactile_determinism():
    mesh = generate_shape(ShapeSpec("knoblike"))
    contacts = surface_contacts(mesh, 2, seed=5)
    spec = TactileSpec(contacts)
    one = sample_tactile(mesh, RigidTransform.identity(), spec, seed=7)
    two = sample_tactile(mesh, RigidTransform.identity(), spec, seed=7)
    other = sample_tactile(mesh, RigidTransform.identity(), spec, seed=8)
    assert np.array_equal(one.points, two.points)
    assert not np.array_equal(one.points, other.points)


def test_tactile_spec_validation_and_roundtrip():
    with pytest.raises(BadDimensions):
        TactileSpec(patch_radius=0.0)
    with pytest.raises(BadDimensions):
        TactileSpec(noise_sigma=-1.0)
    with pytest.raises(BadDimensions):
        TactileSpec(contact_points=([1.0, 2.0],))
    with pytest.raises(BadDimensions):
        TactileSpec(contact_points=([1.0, np.inf, 0.0],))
    spec = TactileSpec(contact_points=([1.0, 2.0, 3.0],), patch_radius=6.0)
    again = TactileSpec.from_dict(spec.to_dict())
    assert np.array_equal(again.contact_points[0], spec.contact_points[0])
    assert again.patch_radius == 6.0
    bare = TactileSpec()
    assert TactileSpec.from_dict(bare.to_dict()).contact_points is None
