import numpy as np
import pytest

from vtreg.cloud import LabeledPointCloud, Modality, concat_clouds
from vtreg.errors import BothEmpty, EmptyGroundTruth, ModelLabelPresent, TooFewFrames
from vtreg.fusion import (
    CloudMetrics,
    DynamicWeightModel,
    WeightPolicy,
    assign_weights,
    describe_cloud,
    dynamic_weight,
    fuse,
    noise_metric,
    occlusion_metric,
    volume_metric,
)


def vision(points):
    return LabeledPointCloud.from_points(points, Modality.VISION)


def tactile(points):
    return LabeledPointCloud.from_points(points, Modality.TACTILE)


def test_weight_policy_validation():
    WeightPolicy(1.0, 0.0)
    WeightPolicy(0.0, 2.0)
    with pytest.raises(ValueError):
        WeightPolicy(-1.0, 1.0)
    with pytest.raises(ValueError):
        WeightPolicy(0.0, 0.0)
    with pytest.raises(ValueError):
        WeightPolicy(1.0, 1.0, mode="adaptive")


def test_assign_weights_by_label():
    both = concat_clouds([vision([[0, 0, 0]]), tactile([[1, 1, 1], [2, 2, 2]])])
    out = assign_weights(both, WeightPolicy(vision_weight=1.5, tactile_weight=7.0))
    assert np.array_equal(out.weights, [1.5, 7.0, 7.0])


def test_assign_weights_rejects_model_points():
    model = LabeledPointCloud.from_points([[0, 0, 0]], Modality.MODEL)
    with pytest.raises(ModelLabelPresent):
        assign_weights(model, WeightPolicy())


def test_fuse_orders_vision_then_tactile():
    v = vision([[0, 0, 0], [1, 0, 0]])
    t = tactile([[9, 9, 9]])
    fused = fuse(v, t, WeightPolicy(1.0, 12.5))
    assert np.array_equal(fused.labels, [0, 0, 1])
    assert np.array_equal(fused.weights, [1.0, 1.0, 12.5])
    # One side may be empty, both may not.
    assert len(fuse(v, LabeledPointCloud.empty(), WeightPolicy())) == 2
    with pytest.raises(BothEmpty):
        fuse(LabeledPointCloud.empty(), LabeledPointCloud.empty(), WeightPolicy())


def test_occlusion_metric_hand_case():
    gt = LabeledPointCloud.from_points(
        [[0, 0, 0], [10, 0, 0], [20, 0, 0], [30, 0, 0]], Modality.MODEL
    )
    seen = vision([[ 0.5, 0, 0], [10.5, 0, 0]])
    # Two of four reference points have vision within 2mm.
    assert occlusion_metric(seen, gt, capture_radius=2.0) == 0.5


def test_occlusion_metric_inclusive_at_radius():
    gt = LabeledPointCloud.from_points([[0, 0, 0]], Modality.MODEL)
    at_radius = vision([[2.0, 0.0, 0.0]])
    assert occlusion_metric(at_radius, gt, capture_radius=2.0) == 0.0
    beyond = vision([[2.0000001, 0.0, 0.0]])
    assert occlusion_metric(beyond, gt, capture_radius=2.0) == 1.0


def test_occlusion_metric_edge_inputs():
    gt = LabeledPointCloud.from_points([[0, 0, 0]], Modality.MODEL)
    assert occlusion_metric(LabeledPointCloud.empty(), gt) == 1.0
    with pytest.raises(EmptyGroundTruth):
        occlusion_metric(vision([[0, 0, 0]]), LabeledPointCloud.empty())
    with pytest.raises(ValueError):
        occlusion_metric(vision([[0, 0, 0]]), gt, capture_radius=0.0)


def test_noise_metric_known_shifts():
    base = vision([[0, 0, 0], [10, 0, 0], [0, 10, 0]])
    shifted = vision(base.points + [0.3, 0.0, 0.0])
    shifted_again = vision(shifted.points + [0.0, 0.4, 0.0])
    # Points are far apart, so each matches its own displaced copy.
    assert abs(noise_metric([base, shifted]) - 0.3) < 1e-12
    assert abs(noise_metric([base, shifted, shifted_again]) - 0.35) < 1e-12


def test_noise_metric_edge_cases():
    base = vision([[0, 0, 0]])
    with pytest.raises(TooFewFrames):
        noise_metric([base])
    # Pairs with an empty side contribute nothing.
    assert noise_metric([base, LabeledPointCloud.empty(), base]) == 0.0


def test_volume_metric_unit_cube():
    corners = np.array(
        [[i, j, k] for i in (0.0, 1.0) for j in (0.0, 1.0) for k in (0.0, 1.0)]
    )
    assert abs(volume_metric(vision(corners)) - 1.0) < 1e-12


def test_volume_metric_random_tetrahedra_match_determinant():
    rng = np.random.default_rng(0)
    for _ in range(30):
        pts = rng.normal(size=(4, 3)) * 10.0
        want = abs(np.linalg.det(pts[1:] - pts[0])) / 6.0
        got = volume_metric(vision(pts))
        assert abs(got - want) < 1e-9 * max(want, 1.0)


def test_volume_metric_degenerate_inputs():
    assert volume_metric(vision([[0, 0, 0], [1, 0, 0], [0, 1, 0]])) == 0.0
    planar = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [0.3, 0.4, 0]]
    assert volume_metric(vision(planar)) == 0.0


def test_cloud_metrics_validation_and_dict():
    m = CloudMetrics(occlusion=0.25, noise_mm=0.5, point_count=10, volume_mm3=3.0)
    assert m.to_dict() == {
        "occlusion": 0.25,
        "noise_mm": 0.5,
        "point_count": 10,
        "volume_mm3": 3.0,
    }
    with pytest.raises(ValueError):
        CloudMetrics(occlusion=1.5, noise_mm=0.0, point_count=0, volume_mm3=0.0)
    with pytest.raises(ValueError):
        CloudMetrics(occlusion=0.5, noise_mm=-1.0, point_count=0, volume_mm3=0.0)


def test_describe_cloud_assembles_metrics():
    gt = LabeledPointCloud.from_points([[0, 0, 0], [50, 0, 0]], Modality.MODEL)
    seen = vision([[0.5, 0, 0]])
    m = describe_cloud(seen, gt)
    assert m.occlusion == 0.5
    assert m.point_count == 1
    assert m.noise_mm == 0.0  # no frames given
    frames = [seen, vision([[0.7, 0, 0]])]
    m2 = describe_cloud(seen, gt, frames=frames)
    assert abs(m2.noise_mm - 0.2) < 1e-12


def test_dynamic_weight_affine_and_clamped():
    vm = CloudMetrics(occlusion=0.8, noise_mm=1.0, point_count=100, volume_mm3=0.0)
    tm = CloudMetrics(occlusion=0.0, noise_mm=0.1, point_count=50, volume_mm3=0.0)
    model = DynamicWeightModel(
        intercept=1.0,
        vision_slopes={"occlusion": 10.0},
        tactile_slopes={"noise_mm": -2.0},
    )
    policy = dynamic_weight(vm, tm, model)
    assert policy.mode == "dynamic"
    assert policy.vision_weight == 1.0
    assert abs(policy.tactile_weight - (1.0 + 8.0 - 0.2)) < 1e-12
    # Clamping at both ends.
    low = DynamicWeightModel(intercept=-100.0)
    assert dynamic_weight(vm, tm, low).tactile_weight == 0.5
    high = DynamicWeightModel(intercept=1e6)
    assert dynamic_weight(vm, tm, high).tactile_weight == 50.0


def test_dynamic_weight_model_rejects_unknown_metric():
    with pytest.raises(ValueError):
        DynamicWeightModel(vision_slopes={"banana": 1.0})
