import numpy as np
import pytest

from vtreg.cloud import (
    LabeledPointCloud,
    Modality,
    bounding_box,
    concat_clouds,
    load_ply,
    save_ply,
    split_by_label,
    transform_cloud,
)
from vtreg.errors import MeshFormatError
from vtreg.geometry import RigidTransform


def make_cloud(n=5, seed=0, modality=Modality.VISION):
    rng = np.random.default_rng(seed)
    return LabeledPointCloud.from_points(rng.normal(size=(n, 3)) * 10.0, modality)


def test_from_points_sets_labels_and_weights():
    c = LabeledPointCloud.from_points([[1, 2, 3]], Modality.TACTILE, weight=2.5)
    assert len(c) == 1
    assert c.labels[0] == 1
    assert c.weights[0] == 2.5


def test_empty_cloud():
    c = LabeledPointCloud.empty()
    assert len(c) == 0
    assert c.points.shape == (0, 3)


def test_validation_rejects_bad_inputs():
    with pytest.raises(ValueError):
        LabeledPointCloud(np.zeros((2, 2)), np.zeros(2, dtype=np.uint8), np.ones(2))
    with pytest.raises(ValueError):
        LabeledPointCloud(np.zeros((2, 3)), np.zeros(3, dtype=np.uint8), np.ones(2))
    with pytest.raises(ValueError):
        LabeledPointCloud(np.zeros((2, 3)), np.full(2, 7, dtype=np.uint8), np.ones(2))
    with pytest.raises(ValueError):
        LabeledPointCloud(np.zeros((2, 3)), np.zeros(2, dtype=np.uint8), np.array([1.0, -0.5]))
    with pytest.raises(ValueError):
        LabeledPointCloud(np.array([[np.inf, 0, 0]]), np.zeros(1, dtype=np.uint8), np.ones(1))


def test_arrays_are_immutable():
    c = make_cloud()
    with pytest.raises(ValueError):
        c.points[0, 0] = 99.0
    with pytest.raises(ValueError):
        c.weights[0] = 99.0


def test_subset_with_mask_and_indices():
    c = make_cloud(6)
    mask = np.array([True, False, True, False, False, True])
    sub = c.subset(mask)
    assert np.array_equal(sub.points, c.points[mask])
    by_index = c.subset(np.array([0, 2, 5]))
    assert np.array_equal(by_index.points, sub.points)


def test_transformed_moves_points_only():
    c = make_cloud(4, seed=1)
    t = RigidTransform.from_axis_angle((0, 0, 1), 90.0, translation=(5, 0, 0))
    moved = c.transformed(t)
    assert np.allclose(moved.points, t.apply(c.points), atol=0)
    assert np.array_equal(moved.labels, c.labels)
    assert np.array_equal(moved.weights, c.weights)
    # Free-function spelling agrees.
    assert np.array_equal(transform_cloud(t, c).points, moved.points)


def test_concat_preserves_order():
    a = make_cloud(3, seed=2)
    b = make_cloud(2, seed=3, modality=Modality.TACTILE)
    both = concat_clouds([a, b])
    assert len(both) == 5
    assert np.array_equal(both.points[:3], a.points)
    assert np.array_equal(both.points[3:], b.points)
    assert np.array_equal(both.labels, [0, 0, 0, 1, 1])
    assert len(concat_clouds([])) == 0


def test_with_weights_and_with_labels():
    c = make_cloud(3)
    w = c.with_weights([1.0, 2.0, 3.0])
    assert np.array_equal(w.weights, [1.0, 2.0, 3.0])
    lab = c.with_labels(Modality.MODEL)
    assert set(lab.labels) == {2}


def test_split_by_label_partitions():
    a = make_cloud(3, seed=4)
    b = make_cloud(2, seed=5, modality=Modality.TACTILE)
    parts = split_by_label(concat_clouds([a, b]))
    assert set(parts) == {Modality.VISION, Modality.TACTILE}
    assert len(parts[Modality.VISION]) == 3
    assert len(parts[Modality.TACTILE]) == 2


def test_ply_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(6)
    cloud = LabeledPointCloud(
        rng.normal(size=(20, 3)) * 123.456,
        rng.integers(0, 3, size=20).astype(np.uint8),
        rng.random(20) * 10.0,
    )
    path = tmp_path / "cloud.ply"
    save_ply(cloud, path)
    loaded = load_ply(path)
    assert np.array_equal(loaded.points, cloud.points)
    assert np.array_equal(loaded.labels, cloud.labels)
    assert np.array_equal(loaded.weights, cloud.weights)


def test_ply_save_is_byte_deterministic(tmp_path):
    cloud = make_cloud(10, seed=7)
    p1, p2 = tmp_path / "a.ply", tmp_path / "b.ply"
    save_ply(cloud, p1)
    save_ply(cloud, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_ply_empty_cloud_roundtrip(tmp_path):
    path = tmp_path / "empty.ply"
    save_ply(LabeledPointCloud.empty(), path)
    assert len(load_ply(path)) == 0


def test_ply_property_order_can_vary(tmp_path):
    path = tmp_path / "shuffled.ply"
    path.write_text(
        "ply\n"
        "format ascii 1.0\n"
        "element vertex 1\n"
        "property float weight\n"
        "property float x\n"
        "property float z\n"
        "property float y\n"
        "property uchar modality\n"
        "end_header\n"
        "4.0 1.0 3.0 2.0 1\n"
    )
    c = load_ply(path)
    assert np.array_equal(c.points, [[1.0, 2.0, 3.0]])
    assert c.labels[0] == 1
    assert c.weights[0] == 4.0


def test_ply_errors(tmp_path):
    bad = tmp_path / "bad.ply"
    bad.write_text("solid nope\n")
    with pytest.raises(MeshFormatError):
        load_ply(bad)
    missing = tmp_path / "missing.ply"
    missing.write_text(
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property float x\nproperty float y\nproperty float z\n"
        "end_header\n0 0 0\n"
    )
    with pytest.raises(MeshFormatError):
        load_ply(missing)
    short = tmp_path / "short.ply"
    short.write_text(
        "ply\nformat ascii 1.0\nelement vertex 3\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar modality\nproperty float weight\n"
        "end_header\n0 0 0 0 1\n"
    )
    with pytest.raises(MeshFormatError):
        load_ply(short)


def test_bounding_box():
    c = LabeledPointCloud.from_points(
        [[0, 0, 0], [1, -2, 5], [-3, 4, 2]], Modality.VISION
    )
    lo, hi = bounding_box(c.points)
    assert np.array_equal(lo, [-3, -2, 0])
    assert np.array_equal(hi, [1, 4, 5])
    with pytest.raises(ValueError):
        bounding_box(np.empty((0, 3)))
