"""Weighted visual-tactile point cloud registration for in-hand pose estimation.

The pipeline: simulated (or recorded) camera frames and tactile contact
patches are preprocessed, fused into one per-point-weighted cloud, and
registered against a surface sampling of the object model with a multi-start
weighted ICP; the inverse of the fitted transform is the object pose.
"""
from . import synth
from .cloud import (
    LabeledPointCloud,
    Modality,
    concat_clouds,
    load_ply,
    save_ply,
    split_by_label,
    transform_cloud,
)
from .errors import (
    AllCorrespondencesRejected,
    AllStartsFailed,
    BadDimensions,
    BothEmpty,
    CameraInsideMesh,
    ContactOffSurface,
    DegenerateConfiguration,
    EmptyBenchmark,
    EmptyCloud,
    EmptyGroundTruth,
    EmptyMesh,
    InvalidConfig,
    LengthMismatch,
    MeshFormatError,
    ModelLabelPresent,
    TooFewFrames,
    TooFewPoints,
    VtregError,
    ZeroTotalWeight,
    ZeroVariance,
)
from .evaluation import (
    AggregateReport,
    EvaluationRecord,
    SweepRow,
    aggregate_records,
    classify_success,
    evaluate_scene,
    pearson,
    pose_errors,
    prepare_clouds,
    registration_target,
    run_benchmark,
    weight_sweep,
)
from .fusion import (
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
from .geometry import RigidTransform, compose, geodesic_angle_deg, random_rotation
from .mesh import (
    STANDARD_DENSITY,
    TriMesh,
    load_mesh,
    load_obj,
    load_stl,
    point_mesh_distance,
    sample_surface,
    save_obj,
)
from .preprocess import (
    FrameSequence,
    remove_outliers,
    segment_modality,
    temporal_average,
    voxel_downsample,
)
from .registration import (
    IcpParams,
    RegistrationResult,
    icp_weighted,
    multi_start,
    rotation_grid,
    weighted_kabsch,
)
from .spatial import SpatialIndex, hausdorff

__version__ = "0.1.0"

__all__ = [
    "AggregateReport",
    "AllCorrespondencesRejected",
    "AllStartsFailed",
    "BadDimensions",
    "BothEmpty",
    "CameraInsideMesh",
    "CloudMetrics",
    "ContactOffSurface",
    "DegenerateConfiguration",
    "DynamicWeightModel",
    "EmptyBenchmark",
    "EmptyCloud",
    "EmptyGroundTruth",
    "EmptyMesh",
    "EvaluationRecord",
    "FrameSequence",
    "IcpParams",
    "InvalidConfig",
    "LabeledPointCloud",
    "LengthMismatch",
    "MeshFormatError",
    "Modality",
    "ModelLabelPresent",
    "RegistrationResult",
    "RigidTransform",
    "STANDARD_DENSITY",
    "SpatialIndex",
    "SweepRow",
    "TooFewFrames",
    "TooFewPoints",
    "TriMesh",
    "VtregError",
    "WeightPolicy",
    "ZeroTotalWeight",
    "ZeroVariance",
    "aggregate_records",
    "assign_weights",
    "classify_success",
    "compose",
    "concat_clouds",
    "describe_cloud",
    "dynamic_weight",
    "evaluate_scene",
    "fuse",
    "geodesic_angle_deg",
    "hausdorff",
    "icp_weighted",
    "load_mesh",
    "load_obj",
    "load_ply",
    "load_stl",
    "multi_start",
    "noise_metric",
    "occlusion_metric",
    "pearson",
    "point_mesh_distance",
    "pose_errors",
    "prepare_clouds",
    "random_rotation",
    "registration_target",
    "remove_outliers",
    "rotation_grid",
    "run_benchmark",
    "sample_surface",
    "save_obj",
    "save_ply",
    "segment_modality",
    "split_by_label",
    "synth",
    "temporal_average",
    "transform_cloud",
    "volume_metric",
    "voxel_downsample",
    "weight_sweep",
    "weighted_kabsch",
]
