"""Command-line pipeline: scene generation, registration, sweeps, benchmarks.

Configuration comes from an INI-style file (--config) overlaid by command
line flags; every random draw flows from explicit seeds, so reruns of the
same invocation reproduce their artifacts byte for byte (excluding recorded
runtimes). Exit codes: 0 success, 1 operational error, 2 a registration
classified as failed.
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidConfig, VtregError
from .evaluation import (
    CONDITIONS,
    DEFAULT_TACTILE_WEIGHTS,
    aggregate_records,
    default_tactile_weight,
    evaluate_scene,
    pose_errors,
    prepare_clouds,
    registration_clouds,
    run_benchmark,
    weight_sweep,
    write_aggregate_json,
    write_records_csv,
)
from .fusion import WeightPolicy, assign_weights, describe_cloud, fuse
from .registration import IcpParams, multi_start
from .synth.scene import (
    DEFAULT_CAMERA,
    DEFAULT_TACTILE,
    PoseSampler,
    benchmark_scenes,
    generate_scene,
    load_scene,
    preset_scene,
    save_scene,
    suite_scene,
)
from .synth.shapes import KINDS, ShapeSpec

DEFAULT_SWEEP_RATIOS = (0.5, 1.0, 3.5, 12.5, 50.0)


def _parse_floats(raw: str) -> list[float]:
    return [float(tok) for tok in raw.replace(",", " ").split()]


def _parse_vec3(raw: str) -> np.ndarray:
    values = _parse_floats(raw)
    if len(values) != 3:
        raise ValueError(f"expected 3 numbers, got {len(values)}")
    return np.asarray(values)


def _parse_shape(raw: str) -> str:
    if raw not in KINDS:
        raise ValueError(f"expected one of {KINDS}")
    return raw


def _parse_tactile_weight(raw: str):
    if raw.strip() == "per-shape":
        return None
    return float(raw)


# section -> key -> caster; the parsed config is a plain nested dict.
_SCHEMA = {
    "bench": {"count": int, "base_seed": int},
    "sweep": {"ratios": _parse_floats, "count": int, "base_seed": int},
    "gen": {
        "shape": _parse_shape,
        "dropout": float,
        "count": int,
        "seed": int,
        "translation_extent": float,
        "mesh_path": str,
    },
    "icp": {"max_iters": int, "tol": float, "max_corr_dist": float},
    "weights": {
        "vision": float,
        "tactile": _parse_tactile_weight,
        **{kind: float for kind in DEFAULT_TACTILE_WEIGHTS},
    },
    "camera": {
        "position": _parse_vec3,
        "look_at": _parse_vec3,
        "fov_deg": float,
        "noise_sigma": float,
        "frame_count": int,
    },
    "tactile": {"patch_radius": float, "noise_sigma": float},
    "output": {"dir": str},
}


def load_config(path) -> dict:
    """Parse and validate an INI config into {section: {key: value}}."""
    path = Path(path)
    if not path.exists():
        raise InvalidConfig(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except configparser.Error as exc:
        raise InvalidConfig(f"{path}: {exc}") from exc
    values: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise InvalidConfig(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            caster = _SCHEMA[section].get(key)
            if caster is None:
                raise InvalidConfig(f"{path}: unknown key [{section}] {key}")
            try:
                values.setdefault(section, {})[key] = caster(raw)
            except ValueError as exc:
                raise InvalidConfig(
                    f"{path}: bad value for [{section}] {key}: {raw!r} ({exc})"
                ) from exc
    return values


@dataclass
class RunConfig:
    """Effective settings after merging defaults, config file, and flags."""

    icp: IcpParams = field(default_factory=IcpParams)
    vision_weight: float = 1.0
    tactile_weight: float | None = None  # None -> per-shape table
    shape_weights: dict = field(default_factory=lambda: dict(DEFAULT_TACTILE_WEIGHTS))
    vision_only: bool = False
    bench_count: int = 150
    bench_seed: int = 1000
    sweep_ratios: tuple = DEFAULT_SWEEP_RATIOS
    sweep_count: int = 9
    sweep_seed: int = 1000
    gen_shape: str = "knoblike"
    gen_mesh_path: str | None = None
    gen_dropout: float = 0.0
    gen_count: int = 1
    gen_seed: int = 0
    gen_translation_extent: float = 50.0
    camera: object = DEFAULT_CAMERA
    tactile: object = DEFAULT_TACTILE
    output: Path | None = None
    jobs: int = 1

    def resolve_tactile_weight(self, kind: str) -> float:
        if self.tactile_weight is not None:
            return self.tactile_weight
        return self.shape_weights.get(kind, default_tactile_weight(kind))


def build_config(args) -> RunConfig:
    # Shared flags parse with suppressed defaults (see build_parser); make
    # the attributes exist regardless of where or whether they were given.
    for name in ("config", "seed", "jobs", "output"):
        if not hasattr(args, name):
            setattr(args, name, None)
    cfg = RunConfig()
    if args.config:
        values = load_config(args.config)
        bench = values.get("bench", {})
        cfg.bench_count = bench.get("count", cfg.bench_count)
        cfg.bench_seed = bench.get("base_seed", cfg.bench_seed)
        sweep = values.get("sweep", {})
        cfg.sweep_ratios = tuple(sweep.get("ratios", cfg.sweep_ratios))
        cfg.sweep_count = sweep.get("count", cfg.sweep_count)
        cfg.sweep_seed = sweep.get("base_seed", cfg.sweep_seed)
        gen = values.get("gen", {})
        cfg.gen_shape = gen.get("shape", cfg.gen_shape)
        cfg.gen_mesh_path = gen.get("mesh_path", cfg.gen_mesh_path)
        cfg.gen_dropout = gen.get("dropout", cfg.gen_dropout)
        cfg.gen_count = gen.get("count", cfg.gen_count)
        cfg.gen_seed = gen.get("seed", cfg.gen_seed)
        cfg.gen_translation_extent = gen.get(
            "translation_extent", cfg.gen_translation_extent
        )
        icp = values.get("icp", {})
        cfg.icp = IcpParams(
            max_iterations=icp.get("max_iters", cfg.icp.max_iterations),
            rel_rmse_tolerance=icp.get("tol", cfg.icp.rel_rmse_tolerance),
            max_correspondence_distance=icp.get(
                "max_corr_dist", cfg.icp.max_correspondence_distance
            ),
        )
        weights = values.get("weights", {})
        cfg.vision_weight = weights.get("vision", cfg.vision_weight)
        if "tactile" in weights:
            cfg.tactile_weight = weights["tactile"]
        for kind in DEFAULT_TACTILE_WEIGHTS:
            if kind in weights:
                cfg.shape_weights[kind] = weights[kind]
        camera = values.get("camera", {})
        if camera:
            cfg.camera = replace(
                DEFAULT_CAMERA,
                position=camera.get("position", DEFAULT_CAMERA.position),
                look_at=camera.get("look_at", DEFAULT_CAMERA.look_at),
                fov_deg=camera.get("fov_deg", DEFAULT_CAMERA.fov_deg),
                noise_sigma=camera.get("noise_sigma", DEFAULT_CAMERA.noise_sigma),
                frame_count=camera.get("frame_count", DEFAULT_CAMERA.frame_count),
            )
        tactile = values.get("tactile", {})
        if tactile:
            cfg.tactile = replace(
                DEFAULT_TACTILE,
                patch_radius=tactile.get("patch_radius", DEFAULT_TACTILE.patch_radius),
                noise_sigma=tactile.get("noise_sigma", DEFAULT_TACTILE.noise_sigma),
            )
        out = values.get("output", {})
        if "dir" in out:
            cfg.output = Path(out["dir"])

    # Flags win over file values.
    if args.output is not None:
        cfg.output = args.output
    if args.jobs is not None:
        if args.jobs < 1:
            raise InvalidConfig("--jobs must be at least 1")
        cfg.jobs = args.jobs
    elif cfg.jobs == 1:
        cfg.jobs = max(os.cpu_count() or 1, 1)
    if args.seed is not None:
        cfg.bench_seed = args.seed
        cfg.sweep_seed = args.seed
        cfg.gen_seed = args.seed
    if getattr(args, "vision_only", False):
        cfg.vision_only = True
    if getattr(args, "vision_weight", None) is not None:
        cfg.vision_weight = args.vision_weight
    if getattr(args, "tactile_weight", None) is not None:
        cfg.tactile_weight = args.tactile_weight
    icp_updates = {}
    if getattr(args, "max_iters", None) is not None:
        icp_updates["max_iterations"] = args.max_iters
    if getattr(args, "tol", None) is not None:
        icp_updates["rel_rmse_tolerance"] = args.tol
    if getattr(args, "max_corr_dist", None) is not None:
        icp_updates["max_correspondence_distance"] = args.max_corr_dist
    if icp_updates:
        cfg.icp = replace(cfg.icp, **icp_updates)
    return cfg


# --- commands -----------------------------------------------------------------


def cmd_gen(cfg: RunConfig, args) -> int:
    count = args.count if args.count is not None else cfg.gen_count
    if count < 0:
        raise InvalidConfig("gen count must be non-negative")
    output = cfg.output or Path("scenes")
    if count == 0:
        print("warning: count 0, nothing generated", file=sys.stderr)
        return 0
    if args.shape is not None:
        cfg.gen_shape = args.shape
    if args.dropout is not None:
        cfg.gen_dropout = args.dropout
    if args.mesh_path is not None:
        cfg.gen_mesh_path = args.mesh_path
    for i in range(count):
        seed = cfg.gen_seed + i
        if args.preset:
            scene = preset_scene(args.preset, seed)
        else:
            shape = ShapeSpec(cfg.gen_shape, mesh_path=cfg.gen_mesh_path)
            camera = replace(cfg.camera, dropout_fraction=cfg.gen_dropout)
            sampler = PoseSampler(translation_extent=cfg.gen_translation_extent)
            scene = generate_scene(shape, sampler, camera, cfg.tactile, seed)
        scene_dir = output / scene.scene_id
        save_scene(scene, scene_dir)
        print(f"wrote {scene_dir} (occlusion {scene.occlusion:.3f})", file=sys.stderr)
    print(f"generated {count} scene(s) under {output}")
    return 0


def cmd_register(cfg: RunConfig, args) -> int:
    scene = load_scene(args.scene_dir, missing_tactile_ok=cfg.vision_only)
    vision, tactile, target = registration_clouds(scene)
    weight = cfg.resolve_tactile_weight(scene.shape.kind)
    if cfg.vision_only:
        source = assign_weights(vision, WeightPolicy(cfg.vision_weight, 0.0))
    else:
        source = fuse(vision, tactile, WeightPolicy(cfg.vision_weight, weight))
    result = multi_start(source, target, cfg.icp)
    estimate = result.transform.inverse()
    terr, rerr, oerr = pose_errors(estimate, scene.gt_pose, scene.mesh)
    success = terr < 15.0 and rerr < 15.0
    print("estimated_pose:")
    for row in estimate.matrix:
        print("  " + " ".join(f"{float(v): .9f}" for v in row))
    print(f"translation_error_mm: {terr:.6f}")
    print(f"rotation_error_deg: {rerr:.6f}")
    print(f"object_error_mm: {oerr:.6f}")
    print(f"iterations: {result.iterations}")
    print(f"init_index: {result.init_index}")
    print(f"success: {'true' if success else 'false'}")
    return 0 if success else 2


def cmd_metrics(cfg: RunConfig, args) -> int:
    scene = load_scene(args.scene_dir)
    vision, tactile = prepare_clouds(scene)
    vision_metrics = describe_cloud(vision, scene.gt_surface, frames=scene.vision_frames)
    tactile_metrics = describe_cloud(tactile, scene.gt_surface)
    out = {
        "scene_id": scene.scene_id,
        "stored_occlusion": scene.occlusion,
        "vision": vision_metrics.to_dict(),
        "tactile": tactile_metrics.to_dict(),
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    count = args.count if args.count is not None else cfg.sweep_count
    ratios = _parse_floats(args.ratios) if args.ratios else list(cfg.sweep_ratios)
    print(f"generating {count} scene(s)", file=sys.stderr)
    scenes = list(benchmark_scenes(count, cfg.sweep_seed))
    rows = weight_sweep(scenes, ratios, cfg.icp)
    output = cfg.output or Path("sweep-out")
    output.mkdir(parents=True, exist_ok=True)
    header = (
        "tactile_weight",
        "trial_count",
        "failed_count",
        "mean_translation_mm",
        "mean_rotation_deg",
        "mean_object_mm",
    )
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(
                "" if v is None else (repr(float(v)) if isinstance(v, float) else str(v))
                for v in (
                    row.tactile_weight,
                    row.trial_count,
                    row.failed_count,
                    row.mean_translation_mm,
                    row.mean_rotation_deg,
                    row.mean_object_mm,
                )
            )
        )
    (output / "sweep.csv").write_text("\n".join(lines) + "\n")
    print(f"{'weight':>10} {'object_mm':>12} {'trans_mm':>10} {'rot_deg':>10}")
    for row in rows:
        label = "baseline" if row.tactile_weight is None else f"{row.tactile_weight:g}"
        obj = "-" if row.mean_object_mm is None else f"{row.mean_object_mm:.3f}"
        tra = "-" if row.mean_translation_mm is None else f"{row.mean_translation_mm:.3f}"
        rot = "-" if row.mean_rotation_deg is None else f"{row.mean_rotation_deg:.3f}"
        print(f"{label:>10} {obj:>12} {tra:>10} {rot:>10}")
    print(f"wrote {output / 'sweep.csv'}")
    return 0


def _bench_job(job) -> list:
    index, count, base_seed, params, tactile_weight = job
    scene = suite_scene(index, count, base_seed)
    return [record for record, _ in evaluate_scene(scene, CONDITIONS, params, tactile_weight)]


def cmd_bench(cfg: RunConfig, args) -> int:
    count = args.count if args.count is not None else cfg.bench_count
    if count < 1:
        raise InvalidConfig("bench count must be at least 1")
    output = cfg.output or Path("bench-out")
    jobs = min(cfg.jobs, count)
    if jobs > 1:
        output.mkdir(parents=True, exist_ok=True)
        work = [
            (i, count, cfg.bench_seed, cfg.icp, cfg.tactile_weight) for i in range(count)
        ]
        records = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for batch in pool.map(_bench_job, work):
                for record in batch:
                    print(
                        f"{record.scene_id} {record.condition} "
                        f"{'ok' if record.success else 'fail'}",
                        file=sys.stderr,
                    )
                records.extend(batch)
        write_records_csv(records, output / "records.csv")
        report = aggregate_records(records)
        write_aggregate_json(report, output / "aggregate.json")
    else:

        def progress(record, _result):
            print(
                f"{record.scene_id} {record.condition} "
                f"{'ok' if record.success else 'fail'}",
                file=sys.stderr,
            )

        report = run_benchmark(
            benchmark_scenes(count, cfg.bench_seed),
            output_dir=output,
            params=cfg.icp,
            tactile_weight=cfg.tactile_weight,
            on_result=progress,
        )
    for name in sorted(report.conditions):
        summary = report.conditions[name]
        mean_obj = summary.mean_errors["object_mm"]
        obj = "-" if mean_obj is None else f"{mean_obj:.3f}"
        print(
            f"{name:>8}: success {summary.success_count}/{summary.trial_count} "
            f"({summary.success_rate:.1%}), mean object error {obj} mm"
        )
    for entry in report.improvement_by_occlusion_bin:
        gain = entry["mean_object_improvement_mm"]
        shown = "-" if gain is None else f"{gain:.3f}"
        print(
            f"  occlusion [{entry['low']:.2f},{entry['high']:.2f}): "
            f"mean improvement {shown} mm over {entry['pair_count']} scene(s)"
        )
    print(f"wrote {output / 'records.csv'} and {output / 'aggregate.json'}")
    return 0


# --- argument wiring ------------------------------------------------------------


def _add_icp_flags(parser) -> None:
    parser.add_argument("--max-iters", type=int, help="ICP iteration budget")
    parser.add_argument("--tol", type=float, help="relative RMSE convergence tolerance")
    parser.add_argument(
        "--max-corr-dist", type=float, help="correspondence gating distance (mm)"
    )


def _add_weight_flags(parser) -> None:
    parser.add_argument("--vision-weight", type=float, help="per-point vision weight")
    parser.add_argument("--tactile-weight", type=float, help="per-point tactile weight")


def build_parser() -> argparse.ArgumentParser:
    # Shared flags live on a parent parser so they parse in either position:
    # `vtreg --output d bench` and `vtreg bench --output d` mean the same.
    # Defaults are suppressed because a subcommand parse would otherwise
    # clobber values already parsed before the subcommand word.
    shared = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    shared.add_argument("--config", type=Path, help="INI configuration file")
    shared.add_argument("--seed", type=int, help="override the configured base seed")
    shared.add_argument("--jobs", type=int, help="parallel worker count (bench)")
    shared.add_argument("--output", type=Path, help="output directory")
    parser = argparse.ArgumentParser(
        prog="vtreg",
        description="Weighted visual-tactile point cloud registration toolkit",
        parents=[shared],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, help):
        return sub.add_parser(name, help=help, parents=[shared])

    gen = add_parser("gen", help="generate synthetic grasp scenes")
    gen.add_argument("--count", type=int, help="number of scenes")
    gen.add_argument("--shape", choices=KINDS, help="object family")
    gen.add_argument("--dropout", type=float, help="camera sector dropout fraction")
    gen.add_argument("--mesh-path", help="mesh file for custom shapes")
    gen.add_argument("--preset", help="named preset, e.g. insertion-0deg")

    register = add_parser("register", help="estimate one scene's pose")
    register.add_argument("scene_dir", type=Path)
    register.add_argument(
        "--vision-only", action="store_true", help="ignore tactile data"
    )
    _add_weight_flags(register)
    _add_icp_flags(register)

    metrics = add_parser("metrics", help="print a scene's cloud metrics")
    metrics.add_argument("scene_dir", type=Path)

    sweep = add_parser("sweep", help="tactile weight-ratio sweep")
    sweep.add_argument("--ratios", help="comma-separated tactile weights")
    sweep.add_argument("--count", type=int, help="number of scenes")
    _add_icp_flags(sweep)

    bench = add_parser("bench", help="full two-condition benchmark")
    bench.add_argument("--count", type=int, help="number of scenes")
    bench.add_argument("--tactile-weight", type=float, help="fixed tactile weight")
    _add_icp_flags(bench)
    return parser


_COMMANDS = {
    "gen": cmd_gen,
    "register": cmd_register,
    "metrics": cmd_metrics,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return _COMMANDS[args.command](cfg, args)
    except VtregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
