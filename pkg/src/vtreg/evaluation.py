"""Trial metrics, statistics, weight sweeps, and the benchmark runner.

A trial registers one scene's sensor data against its object model under a
condition ("vis" uses camera data only, "vis+tac" fuses the tactile patches)
and scores the recovered pose with three errors: centroid translation (mm),
geodesic rotation (deg), and object error (mm), the Hausdorff distance
between surface samplings posed at the true and estimated transforms.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .cloud import LabeledPointCloud
from .errors import (
    EmptyBenchmark,
    LengthMismatch,
    VtregError,
    ZeroVariance,
)
from .fusion import WeightPolicy, assign_weights, fuse
from .geometry import RigidTransform, geodesic_angle_deg
from .mesh import STANDARD_DENSITY, TriMesh, sample_surface
from .preprocess import (
    DEFAULT_NEIGHBOR_COUNT,
    remove_outliers,
    temporal_average,
    voxel_downsample,
)
from .registration import IcpParams, RegistrationResult, multi_start
from .spatial import hausdorff
from .synth.scene import GraspScene

TRANSLATION_LIMIT_MM = 15.0
ROTATION_LIMIT_DEG = 15.0

CONDITIONS = ("vis", "vis+tac")

# Tactile-to-vision weight ratios used by default, keyed by shape family.
DEFAULT_TACTILE_WEIGHTS = {
    "knoblike": 12.5,
    "handlelike": 3.5,
    "slblock": 0.5,
    "screwdriverlike": 3.5,
}
FALLBACK_TACTILE_WEIGHT = 3.5

# Preprocessing defaults: thin to at most one point per 1 mm voxel.
PREP_VOXEL_EDGE = 1.0
# Camera frames are merged at the noise scale so temporal averaging actually
# cancels noise instead of unioning displaced copies of each surface spot.
VISION_MERGE_RADIUS = 1.0
TARGET_DENSITY = 0.125  # one model point per 2 mm voxel

# Fixed seeds so every trial scores against identical reference samplings.
_TARGET_SAMPLE_SEED = 90001
_OBJECT_SAMPLE_SEED = 90002

OCCLUSION_BINS = ((0.0, 0.5), (0.5, 0.7), (0.7, 0.85), (0.85, 1.0))

CSV_HEADER = (
    "scene_id",
    "condition",
    "vision_weight",
    "tactile_weight",
    "occlusion",
    "translation_error_mm",
    "rotation_error_deg",
    "object_error_mm",
    "success",
    "iterations",
    "init_index",
    "runtime_s",
)


@dataclass(frozen=True)
class EvaluationRecord:
    """One registration trial's outcome. Error fields are None when the
    trial failed operationally (registration never produced a pose)."""

    scene_id: str
    condition: str
    vision_weight: float
    tactile_weight: float
    occlusion: float
    translation_error_mm: float | None
    rotation_error_deg: float | None
    object_error_mm: float | None
    success: bool
    iterations: int
    init_index: int
    runtime_s: float


@dataclass(frozen=True)
class SweepRow:
    """Mean errors for one weighting; tactile_weight None is the
    vision-only baseline. Means skip failed trials and are None when every
    trial of the row failed."""

    tactile_weight: float | None
    trial_count: int
    failed_count: int
    mean_translation_mm: float | None
    mean_rotation_deg: float | None
    mean_object_mm: float | None


@dataclass(frozen=True)
class ConditionSummary:
    condition: str
    trial_count: int
    failed_count: int
    success_count: int
    success_rate: float
    mean_errors: dict
    mean_errors_successful: dict
    pearson_occlusion_object_error: dict | None

    def to_dict(self) -> dict:
        return {
            "trial_count": self.trial_count,
            "failed_count": self.failed_count,
            "success_count": self.success_count,
            "success_rate": self.success_rate,
            "mean_errors": self.mean_errors,
            "mean_errors_successful": self.mean_errors_successful,
            "pearson_occlusion_object_error": self.pearson_occlusion_object_error,
        }


@dataclass(frozen=True)
class AggregateReport:
    scene_count: int
    conditions: dict
    improvement_by_occlusion_bin: tuple

    def to_dict(self) -> dict:
        return {
            "scene_count": self.scene_count,
            "conditions": {
                name: summary.to_dict() for name, summary in sorted(self.conditions.items())
            },
            "improvement_by_occlusion_bin": [dict(b) for b in self.improvement_by_occlusion_bin],
        }


def pose_errors(
    estimate: RigidTransform,
    ground_truth: RigidTransform,
    mesh: TriMesh,
    symmetry_rotations=None,
) -> tuple[float, float, float]:
    """(translation mm, rotation deg, object mm) for an estimated pose.

    Translation is measured as the displacement of the mesh centroid, which
    does not depend on where the model's origin happens to sit. Object error
    is the Hausdorff distance between one fixed-seed surface sampling carried
    through both poses. symmetry_rotations, if given, is an iterable of
    rotations mapping the model onto itself; rotation error is then the
    minimum over the group.
    """
    centroid = mesh.centroid
    translation = float(
        np.linalg.norm(estimate.apply(centroid) - ground_truth.apply(centroid))
    )
    if symmetry_rotations is None:
        rotation = geodesic_angle_deg(estimate.rotation, ground_truth.rotation)
    else:
        candidates = [np.eye(3)] + [np.asarray(r, dtype=np.float64) for r in symmetry_rotations]
        rotation = min(
            geodesic_angle_deg(estimate.rotation, ground_truth.rotation @ sym)
            for sym in candidates
        )
    base = sample_surface(mesh, STANDARD_DENSITY, seed=_OBJECT_SAMPLE_SEED)
    objerr = hausdorff(base.transformed(ground_truth), base.transformed(estimate))
    return translation, float(rotation), float(objerr)


def classify_success(
    translation_error_mm: float,
    rotation_error_deg: float,
    translation_limit: float = TRANSLATION_LIMIT_MM,
    rotation_limit: float = ROTATION_LIMIT_DEG,
) -> bool:
    """Strictly-below thresholds on both translation and rotation."""
    if translation_error_mm < 0.0 or rotation_error_deg < 0.0:
        raise ValueError("errors must be non-negative")
    return translation_error_mm < translation_limit and rotation_error_deg < rotation_limit


def pearson(x, y) -> tuple[float, float]:
    """Sample correlation and two-tailed p via the t distribution."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("pearson expects 1-d sequences")
    if len(x) != len(y):
        raise LengthMismatch(f"pearson got lengths {len(x)} and {len(y)}")
    n = len(x)
    if n < 3:
        raise ValueError("pearson needs at least 3 samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("pearson is undefined for a constant sequence")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    r = float(np.clip(r, -1.0, 1.0))
    if 1.0 - r * r <= 0.0:
        return r, 0.0
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(stats.t.sf(abs(t), n - 2))
    return r, p


def prepare_clouds(scene: GraspScene) -> tuple[LabeledPointCloud, LabeledPointCloud]:
    """Sensor preprocessing for one scene: (vision, tactile), unweighted.

    Each camera frame is voxel-thinned and statistically de-outliered, then
    the frames are temporally averaged; the tactile patches are only
    voxel-thinned since contact data carries no comparable outlier process.
    """
    cleaned = []
    for frame in scene.vision_frames:
        frame = voxel_downsample(frame, PREP_VOXEL_EDGE)
        if len(frame) > DEFAULT_NEIGHBOR_COUNT:
            frame = remove_outliers(frame)
        cleaned.append(frame)
    vision = temporal_average(cleaned, VISION_MERGE_RADIUS)
    tactile = voxel_downsample(scene.tactile_cloud, PREP_VOXEL_EDGE)
    return vision, tactile


def registration_target(mesh: TriMesh) -> LabeledPointCloud:
    """The fixed-seed model sampling every trial registers against."""
    return sample_surface(mesh, TARGET_DENSITY, seed=_TARGET_SAMPLE_SEED)


def registration_clouds(
    scene: GraspScene,
) -> tuple[LabeledPointCloud, LabeledPointCloud, LabeledPointCloud]:
    """(vision, tactile, target) as fed to the registration itself."""
    vision, tactile = prepare_clouds(scene)
    return vision, tactile, registration_target(scene.mesh)


def default_tactile_weight(kind: str) -> float:
    return DEFAULT_TACTILE_WEIGHTS.get(kind, FALLBACK_TACTILE_WEIGHT)


def evaluate_scene(
    scene: GraspScene,
    conditions=CONDITIONS,
    params: IcpParams | None = None,
    tactile_weight: float | None = None,
    vision_weight: float = 1.0,
):
    """Run the pipeline on one scene under each condition.

    Returns a list of (EvaluationRecord, RegistrationResult or None) in
    condition order; an operational failure yields a record with None errors
    instead of raising.
    """
    vision, tactile, target = registration_clouds(scene)
    weight = (
        default_tactile_weight(scene.shape.kind) if tactile_weight is None else tactile_weight
    )
    out = []
    for condition in conditions:
        if condition not in CONDITIONS:
            raise ValueError(f"unknown condition {condition!r}")
        started = time.perf_counter()
        try:
            if condition == "vis":
                source = assign_weights(vision, WeightPolicy(vision_weight, 0.0))
            else:
                source = fuse(vision, tactile, WeightPolicy(vision_weight, weight))
            result = multi_start(source, target, params)
            runtime = time.perf_counter() - started
            estimate = result.transform.inverse()
            terr, rerr, oerr = pose_errors(estimate, scene.gt_pose, scene.mesh)
            record = EvaluationRecord(
                scene_id=scene.scene_id,
                condition=condition,
                vision_weight=vision_weight,
                tactile_weight=weight if condition == "vis+tac" else 0.0,
                occlusion=scene.occlusion,
                translation_error_mm=terr,
                rotation_error_deg=rerr,
                object_error_mm=oerr,
                success=classify_success(terr, rerr),
                iterations=result.iterations,
                init_index=result.init_index,
                runtime_s=runtime,
            )
            out.append((record, result))
        except VtregError:
            runtime = time.perf_counter() - started
            record = EvaluationRecord(
                scene_id=scene.scene_id,
                condition=condition,
                vision_weight=vision_weight,
                tactile_weight=weight if condition == "vis+tac" else 0.0,
                occlusion=scene.occlusion,
                translation_error_mm=None,
                rotation_error_deg=None,
                object_error_mm=None,
                success=False,
                iterations=0,
                init_index=-1,
                runtime_s=runtime,
            )
            out.append((record, None))
    return out


def weight_sweep(scenes, ratios, params: IcpParams | None = None) -> list[SweepRow]:
    """Mean errors per tactile weight, with a vision-only baseline row first.

    Every scene is preprocessed once and registered once per row. Trials that
    fail operationally are excluded from the means and counted instead.
    """
    scenes = list(scenes)
    if not scenes:
        raise EmptyBenchmark("weight sweep needs at least one scene")
    ratios = [float(r) for r in ratios]
    if not ratios:
        raise EmptyBenchmark("weight sweep needs at least one ratio")
    prepared = []
    for scene in scenes:
        vision, tactile, target = registration_clouds(scene)
        prepared.append((scene, vision, tactile, target))

    rows = []
    for weight in [None, *ratios]:
        errors = []
        failed = 0
        for scene, vision, tactile, target in prepared:
            try:
                if weight is None:
                    source = assign_weights(vision, WeightPolicy(1.0, 0.0))
                else:
                    source = fuse(vision, tactile, WeightPolicy(1.0, weight))
                result = multi_start(source, target, params)
                errors.append(pose_errors(result.transform.inverse(), scene.gt_pose, scene.mesh))
            except VtregError:
                failed += 1
        if errors:
            means = np.asarray(errors, dtype=np.float64).mean(axis=0)
            means = [float(v) for v in means]
        else:
            means = [None, None, None]
        rows.append(SweepRow(weight, len(prepared), failed, *means))
    return rows


def _format_csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _record_row(record: EvaluationRecord) -> list[str]:
    return [_format_csv_value(getattr(record, column)) for column in CSV_HEADER]


def write_records_csv(records, path) -> None:
    """Write trial records at the stable column layout, sorted by trial id."""
    ordered = sorted(records, key=lambda r: (r.scene_id, r.condition))
    with open(path, "w", newline="") as sink:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in ordered:
            writer.writerow(_record_row(record))


def _mean_or_none(values) -> float | None:
    values = [v for v in values if v is not None]
    if not values:
        return None
    return float(np.mean(values))


def _summarize_condition(condition: str, records) -> ConditionSummary:
    trials = [r for r in records if r.condition == condition]
    scored = [r for r in trials if r.object_error_mm is not None]
    successful = [r for r in trials if r.success]
    corr = None
    if len(scored) >= 3:
        try:
            r, p = pearson(
                [t.occlusion for t in scored], [t.object_error_mm for t in scored]
            )
            corr = {"r": r, "p": p, "n": len(scored)}
        except ZeroVariance:
            corr = None
    return ConditionSummary(
        condition=condition,
        trial_count=len(trials),
        failed_count=len(trials) - len(scored),
        success_count=len(successful),
        success_rate=(len(successful) / len(trials)) if trials else 0.0,
        mean_errors={
            "translation_mm": _mean_or_none([t.translation_error_mm for t in scored]),
            "rotation_deg": _mean_or_none([t.rotation_error_deg for t in scored]),
            "object_mm": _mean_or_none([t.object_error_mm for t in scored]),
        },
        mean_errors_successful={
            "translation_mm": _mean_or_none([t.translation_error_mm for t in successful]),
            "rotation_deg": _mean_or_none([t.rotation_error_deg for t in successful]),
            "object_mm": _mean_or_none([t.object_error_mm for t in successful]),
        },
        pearson_occlusion_object_error=corr,
    )


def _bin_improvements(records) -> tuple:
    """Mean per-bin object-error improvement of vis+tac over vis.

    Pairs trials by scene id; scenes missing either condition's object error
    contribute nothing.
    """
    by_scene: dict[str, dict] = {}
    for record in records:
        by_scene.setdefault(record.scene_id, {})[record.condition] = record
    bins = []
    for low, high in OCCLUSION_BINS:
        deltas = []
        for pair in by_scene.values():
            vis = pair.get("vis")
            combined = pair.get("vis+tac")
            if vis is None or combined is None:
                continue
            if vis.object_error_mm is None or combined.object_error_mm is None:
                continue
            occ = vis.occlusion
            inside = low <= occ < high or (high == 1.0 and occ == 1.0)
            if inside:
                deltas.append(vis.object_error_mm - combined.object_error_mm)
        bins.append(
            {
                "low": low,
                "high": high,
                "pair_count": len(deltas),
                "mean_object_improvement_mm": _mean_or_none(deltas),
            }
        )
    return tuple(bins)


def aggregate_records(records) -> AggregateReport:
    """Fold trial records into the benchmark report."""
    records = sorted(records, key=lambda r: (r.scene_id, r.condition))
    if not records:
        raise EmptyBenchmark("no trials to aggregate")
    present = sorted({r.condition for r in records})
    conditions = {c: _summarize_condition(c, records) for c in present}
    bins = ()
    if "vis" in conditions and "vis+tac" in conditions:
        bins = _bin_improvements(records)
    return AggregateReport(
        scene_count=len({r.scene_id for r in records}),
        conditions=conditions,
        improvement_by_occlusion_bin=bins,
    )


def write_aggregate_json(report: AggregateReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


def run_benchmark(
    scenes,
    output_dir=None,
    params: IcpParams | None = None,
    conditions=CONDITIONS,
    tactile_weight: float | None = None,
    on_result=None,
) -> AggregateReport:
    """Register every scene under every condition and aggregate the results.

    scenes is an iterable of GraspScene, consumed lazily. When output_dir is
    given, per-trial rows stream to records.csv (flushed after each trial, so
    an interrupted run keeps its finished trials) and the aggregate lands in
    aggregate.json. on_result, if given, is called with (record, result)
    after each trial; result is None for failed trials.
    """
    sink = None
    writer = None
    if output_dir is not None:
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        sink = open(output_dir / "records.csv", "w", newline="")
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(CSV_HEADER)
    records = []
    try:
        for scene in scenes:
            for record, result in evaluate_scene(scene, conditions, params, tactile_weight):
                records.append(record)
                if writer is not None:
                    writer.writerow(_record_row(record))
                    sink.flush()
                if on_result is not None:
                    on_result(record, result)
    finally:
        if sink is not None:
            sink.close()
    if not records:
        raise EmptyBenchmark("benchmark ran zero scenes")
    report = aggregate_records(records)
    if output_dir is not None:
        write_aggregate_json(report, output_dir / "aggregate.json")
    return report
