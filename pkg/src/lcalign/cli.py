"""Command-line surface: calibrate, evaluate, overlay, synth.

Run ``lcalign <command> --help`` for per-command flags. Every flag has a
default; calibrating with nothing but manifest paths uses the reference
configuration (patch size 40, threshold 15, weights 0.2/1.0, 150+150
random-search iterations, seed 0) and the canonical FLU-to-RDF initial
guess.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from pathlib import Path

import numpy as np
from PIL import Image

from . import dataset, report as report_mod
from .errors import BadInputError, CalibrationError
from .geometry import RigidTransform, project_points
from .metrics import compute_errors
from .objective import ObjectiveConfig, ObjectiveEvaluator
from .parallel import ParallelBatchLoss
from .search import SearchConfig, calibrate, make_serial_batch_loss
from .synthetic import SyntheticSceneSpec, generate_synthetic_scene

# Per-dataset patch-size presets keyed by image scale.
PRESETS = {"kitti": 40, "tf360": 60, "waymo": 80}

# The FLU LiDAR / RDF camera mounting: the standard initial guess when
# nothing better is known.
FLU_RDF_EULER = (90.0, 0.0, 90.0)

GRID_AUTO_THRESHOLD_DEG = 5.0


def _parse_csv_floats(text: str, n: int, what: str) -> np.ndarray:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise BadInputError(f"{what} needs {n} comma-separated numbers, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as e:
        raise BadInputError(f"{what}: {e}") from e


def _initial_transform(args) -> RigidTransform:
    if args.init is not None:
        values = _parse_csv_floats(args.init, 6, "--init")
        return RigidTransform.from_euler_translation(values[:3], values[3:])
    if args.init_file is not None:
        path = Path(args.init_file)
        if not path.exists():
            raise BadInputError(f"--init-file not found: {path}")
        data = json.loads(path.read_text())
        if "result" in data:  # a previous report
            return report_mod.transform_from_dict(data["result"])
        return report_mod.transform_from_dict(data)
    return RigidTransform.from_euler_translation(FLU_RDF_EULER, (0.0, 0.0, 0.0))


def _objective_config(args, manifest_config: dict | None) -> ObjectiveConfig:
    hints = manifest_config or {}
    patch = args.patch_size
    if patch is None:
        patch = PRESETS[args.preset] if args.preset else hints.get("patch_size", 40)
    return ObjectiveConfig(
        lambda1=args.lambda1,
        lambda2=args.lambda2,
        patch_size=int(patch),
        min_patch_points=args.min_patch_points,
        histogram_bins=args.bins,
        use_structure=not args.texture_only,
        use_texture=not args.structure_only,
    )


def _search_config(args) -> SearchConfig:
    if args.grid == "on":
        grid_enabled = True
    elif args.grid == "off":
        grid_enabled = False
    else:
        grid_enabled = args.init_rot_error > GRID_AUTO_THRESHOLD_DEG
    return SearchConfig(
        grid_enabled=grid_enabled,
        grid_range_deg=args.grid_range,
        grid_stride_deg=args.grid_stride,
        trans_range_m=args.trans_range,
        coarse_iters=args.iters_coarse,
        fine_iters=args.iters_fine,
        seed=args.seed,
    )


def cmd_calibrate(args) -> int:
    paths = [Path(p) for p in args.manifests]
    if args.shuffle:
        rng = random.Random(args.shuffle_seed if args.shuffle_seed is not None else args.seed)
        rng.shuffle(paths)
    if args.frames is not None:
        paths = paths[: args.frames]
    if not paths:
        raise BadInputError("no frame manifests given")

    manifests = [dataset.load_manifest(p) for p in paths]
    packets = [dataset.load_frame(m) for m in manifests]
    truth = next((m.ground_truth for m in manifests if m.ground_truth is not None), None)

    initial = _initial_transform(args)
    objective_cfg = _objective_config(args, manifests[0].config)
    search_cfg = _search_config(args)

    evaluator = ObjectiveEvaluator(packets, objective_cfg)
    batch = (
        ParallelBatchLoss(evaluator, args.threads)
        if args.threads > 1
        else make_serial_batch_loss(evaluator)
    )
    t_start = time.perf_counter()
    try:
        result, trace = calibrate(packets, initial, search_cfg, objective_cfg, batch_loss=batch)
    finally:
        if hasattr(batch, "close"):
            batch.close()
    total_s = time.perf_counter() - t_start

    stage_dicts = []
    timing = {"total": total_s}
    for stage in trace.stages:
        d = stage.to_dict()
        d.pop("records")
        if truth is not None:
            est = RigidTransform.from_euler_translation(stage.euler_deg, stage.translation_m)
            d["errors"] = report_mod.errors_to_dict(compute_errors(truth, est))
        stage_dicts.append(d)

    _, breakdown = evaluator.evaluate_detailed(result.rotation, result.translation)
    per_frame = [
        {
            "manifest": str(p),
            "structure_a": b.structure_a,
            "structure_b": b.structure_b,
            "texture": b.texture,
            "n_valid_a": b.n_valid_a,
            "n_valid_b": b.n_valid_b,
            "total": b.total,
        }
        for p, b in zip(paths, breakdown)
    ]

    run = report_mod.RunReport(
        command="calibrate",
        seed=args.seed,
        frames=[str(p) for p in paths],
        config={
            "objective": {
                "lambda1": objective_cfg.lambda1,
                "lambda2": objective_cfg.lambda2,
                "patch_size": objective_cfg.patch_size,
                "min_patch_points": objective_cfg.min_patch_points,
                "histogram_bins": objective_cfg.histogram_bins,
                "use_structure": objective_cfg.use_structure,
                "use_texture": objective_cfg.use_texture,
            },
            "search": {
                "grid_enabled": search_cfg.grid_enabled,
                "grid_range_deg": search_cfg.grid_range_deg,
                "grid_stride_deg": search_cfg.grid_stride_deg,
                "trans_range_m": search_cfg.trans_range_m,
                "coarse_iters": search_cfg.coarse_iters,
                "fine_iters": search_cfg.fine_iters,
                "coarse_angle_set": list(search_cfg.coarse_angle_set),
                "fine_angle_set": list(search_cfg.fine_angle_set),
            },
            "preset": args.preset,
            "shuffle": bool(args.shuffle),
            "threads": args.threads,
        },
        initial=report_mod.transform_to_dict(initial),
        result=report_mod.transform_to_dict(result),
        stages=stage_dicts,
        per_frame=per_frame,
        timing_s=timing,
        created=report_mod.now_iso(),
    )
    run.save(args.out)
    print(f"wrote {args.out}")
    euler = result.euler
    print(
        f"result: roll {euler.roll:+.4f}  pitch {euler.pitch:+.4f}  yaw {euler.yaw:+.4f} deg, "
        f"t [{result.translation[0]:+.4f} {result.translation[1]:+.4f} "
        f"{result.translation[2]:+.4f}] m"
    )
    if truth is not None:
        err = compute_errors(truth, result)
        print(
            f"errors vs ground truth: e_r {err.e_r:.4f} deg, "
            f"e_t+ {err.e_t_plus:.4f} m, e_t- {err.e_t_minus:.4f} m"
        )
    return 0


def _load_truth(path: Path, image_size) -> RigidTransform:
    if path.suffix == ".json":
        manifest = dataset.load_manifest(path)
        if manifest.ground_truth is None:
            raise BadInputError(f"{path}: manifest has no ground_truth")
        return manifest.ground_truth
    _, truth = dataset.load_kitti_calib(path, image_size)
    return truth


_TABLE_COLUMNS = ("roll_deg", "pitch_deg", "yaw_deg", "x_m", "y_m", "z_m")


def cmd_evaluate(args) -> int:
    truth = _load_truth(Path(args.truth), tuple(args.truth_image_size))
    rows = []
    for rpath in args.reports:
        run = report_mod.RunReport.load(rpath)
        err = compute_errors(truth, run.result_transform())
        rows.append((Path(rpath).name, err))

    header = f"{'report':<28}" + "".join(f"{c:>12}" for c in _TABLE_COLUMNS) + (
        f"{'e_r':>12}{'e_t+':>12}{'e_t-':>12}"
    )
    print(header)
    table = []
    for name, err in rows:
        r = err.as_row()
        table.append(r)
        print(
            f"{name:<28}"
            + "".join(f"{r[c]:>12.4f}" for c in _TABLE_COLUMNS)
            + f"{r['e_r_deg']:>12.4f}{r['e_t_plus_m']:>12.4f}{r['e_t_minus_m']:>12.4f}"
        )
    if len(rows) > 1:
        print(
            f"{'mean':<28}"
            + "".join(f"{np.mean([r[c] for r in table]):>12.4f}" for c in _TABLE_COLUMNS)
            + f"{np.mean([r['e_r_deg'] for r in table]):>12.4f}"
            + f"{np.mean([r['e_t_plus_m'] for r in table]):>12.4f}"
            + f"{np.mean([r['e_t_minus_m'] for r in table]):>12.4f}"
        )
    if args.out:
        Path(args.out).write_text(
            json.dumps([dict(r, report=n) for (n, _), r in zip(rows, table)], indent=2) + "\n"
        )
    if args.cdf:
        _write_cdf(args.cdf, table, args.truncate)
    return 0


def _write_cdf(path, table, truncate: bool) -> None:
    """CDF of e_r and e_t- over a batch, optionally truncated at 1 deg / 0.2 m."""
    lines = ["metric,value,cdf"]
    for key, cap in (("e_r_deg", 1.0), ("e_t_minus_m", 0.2)):
        values = np.sort([row[key] for row in table])
        if truncate:
            values = np.minimum(values, cap)
        n = len(values)
        for i, v in enumerate(values):
            lines.append(f"{key},{v},{(i + 1) / n}")
    Path(path).write_text("\n".join(lines) + "\n")


# compact blue-to-red ramp for overlays
def _colorize(values: np.ndarray) -> np.ndarray:
    anchors = np.array(
        [[0, 0, 255], [0, 255, 255], [0, 255, 0], [255, 255, 0], [255, 0, 0]], dtype=float
    )
    x = np.clip(values, 0.0, 1.0) * (len(anchors) - 1)
    lo = np.floor(x).astype(int)
    hi = np.minimum(lo + 1, len(anchors) - 1)
    frac = (x - lo)[:, None]
    return np.rint(anchors[lo] * (1 - frac) + anchors[hi] * frac).astype(np.uint8)


def cmd_overlay(args) -> int:
    manifest = dataset.load_manifest(Path(args.manifest))
    if args.transform is not None:
        values = _parse_csv_floats(args.transform, 6, "--transform")
        transform = RigidTransform.from_euler_translation(values[:3], values[3:])
    elif args.report is not None:
        transform = report_mod.RunReport.load(args.report).result_transform()
    elif manifest.ground_truth is not None:
        transform = manifest.ground_truth
    else:
        raise BadInputError("give --transform or --report (manifest has no ground_truth)")

    img = dataset.load_image(manifest.image_path)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    img = img.copy()
    packet = dataset.load_frame(manifest)
    projected = project_points(packet.cloud, transform, manifest.intrinsics)
    if len(projected):
        if args.color_by == "depth":
            values = projected.inv_depth / projected.inv_depth.max()
        else:
            values = projected.intensity
        colors = _colorize(values)
        ui = np.rint(projected.u).astype(int)
        vi = np.rint(projected.v).astype(int)
        img[vi, ui] = colors
    Image.fromarray(img).save(args.out)
    print(f"wrote {args.out} ({len(projected)} points)")
    return 0


def cmd_synth(args) -> int:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise BadInputError(f"cannot create output dir {out}: {e}") from e
    from .geometry import CameraIntrinsics  # local import keeps CLI startup lean

    intr = CameraIntrinsics(
        fx=args.fx,
        fy=args.fy if args.fy is not None else args.fx,
        cx=(args.width - 1) / 2.0,
        cy=(args.height - 1) / 2.0,
        width=args.width,
        height=args.height,
    )
    spec = SyntheticSceneSpec(
        seed=args.seed,
        n_primitives=args.primitives,
        intrinsics=intr,
        rings=args.rings,
        azimuth_step_deg=args.azimuth_step,
        intensity_noise=args.intensity_noise,
    )
    scene = generate_synthetic_scene(spec)

    Image.fromarray(scene.rgb).save(out / "image.png")
    Image.fromarray(scene.monodepth_u16).save(out / "monodepth.png")
    scene.cloud_raw.tofile(out / "cloud.bin")
    dataset.save_kitti_calib(out / "calib.txt", intr, scene.truth)
    manifest = dataset.FrameManifest(
        image_path=out / "image.png",
        monodepth_path=out / "monodepth.png",
        cloud_path=out / "cloud.bin",
        intrinsics=intr,
        ground_truth=scene.truth,
        config={"patch_size": args.patch_size},
    )
    dataset.save_manifest(out / "manifest.json", manifest)
    print(f"wrote synthetic frame under {out} ({len(scene.packet.cloud)} points)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcalign", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="estimate the LiDAR-to-camera transform")
    cal.add_argument("manifests", nargs="+", help="frame manifest JSON paths (first k used)")
    cal.add_argument("--out", default="calibration_report.json", help="report output path")
    cal.add_argument("--init", default=None,
                     help="initial guess 'roll,pitch,yaw,x,y,z' (deg, m); "
                          "default is the FLU->RDF mounting (90,0,90, zero translation)")
    cal.add_argument("--init-file", default=None,
                     help="JSON with euler_deg/translation_m or matrix_4x4, or a previous report")
    cal.add_argument("--preset", choices=sorted(PRESETS), default=None,
                     help="patch-size preset by dataset image scale")
    cal.add_argument("--patch-size", type=int, default=None,
                     help="patch side S in pixels (default 40, or preset/manifest hint)")
    cal.add_argument("--min-patch-points", type=int, default=15,
                     help="valid-patch threshold P")
    cal.add_argument("--lambda1", type=float, default=0.2, help="structure loss weight")
    cal.add_argument("--lambda2", type=float, default=1.0, help="texture loss weight")
    cal.add_argument("--bins", type=int, default=256, help="histogram bins for the texture loss")
    cal.add_argument("--structure-only", action="store_true", help="disable the texture term")
    cal.add_argument("--texture-only", action="store_true", help="disable the structure term")
    cal.add_argument("--grid", choices=("auto", "on", "off"), default="auto",
                     help="rotation grid search; auto enables it when --init-rot-error > 5")
    cal.add_argument("--init-rot-error", type=float, default=10.0,
                     help="declared initial rotation error in degrees (drives --grid auto)")
    cal.add_argument("--grid-range", type=float, default=15.0, help="grid half-range A in degrees")
    cal.add_argument("--grid-stride", type=float, default=1.0, help="grid stride in degrees")
    cal.add_argument("--trans-range", type=float, default=0.2,
                     help="translation perturbation half-range B in meters")
    cal.add_argument("--iters-coarse", type=int, default=150, help="coarse random-search iterations")
    cal.add_argument("--iters-fine", type=int, default=150, help="fine random-search iterations")
    cal.add_argument("--seed", type=int, default=0, help="search seed")
    cal.add_argument("--frames", type=int, default=None, help="use only the first k manifests")
    cal.add_argument("--shuffle", action="store_true",
                     help="shuffle the manifest list before taking the first k")
    cal.add_argument("--shuffle-seed", type=int, default=None,
                     help="seed for --shuffle (defaults to --seed)")
    cal.add_argument("--threads", type=int, default=1,
                     help="worker processes for candidate evaluation (never changes results)")
    cal.set_defaults(func=cmd_calibrate)

    ev = sub.add_parser("evaluate", help="error metrics of report(s) against ground truth")
    ev.add_argument("reports", nargs="+", help="calibration report JSON paths")
    ev.add_argument("--truth", required=True,
                    help="ground truth: manifest JSON with ground_truth, or KITTI calib txt")
    ev.add_argument("--truth-image-size", type=int, nargs=2, default=(1242, 375),
                    metavar=("W", "H"), help="image size for KITTI calib parsing")
    ev.add_argument("--out", default=None, help="also write the table as JSON")
    ev.add_argument("--cdf", default=None, help="write an error-CDF CSV over the batch")
    ev.add_argument("--truncate", action="store_true",
                    help="truncate CDF errors at 1 deg / 0.2 m")
    ev.set_defaults(func=cmd_evaluate)

    ov = sub.add_parser("overlay", help="render projected points onto the camera image")
    ov.add_argument("manifest", help="frame manifest JSON")
    ov.add_argument("--transform", default=None, help="'roll,pitch,yaw,x,y,z' (deg, m)")
    ov.add_argument("--report", default=None, help="take the transform from this report")
    ov.add_argument("--color-by", choices=("depth", "intensity"), default="depth")
    ov.add_argument("--out", default="overlay.png", help="output image path")
    ov.set_defaults(func=cmd_overlay)

    sy = sub.add_parser("synth", help="generate a synthetic frame on disk")
    sy.add_argument("--out", default="synthetic_frame", help="output directory")
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--primitives", type=int, default=7)
    sy.add_argument("--width", type=int, default=128)
    sy.add_argument("--height", type=int, default=96)
    sy.add_argument("--fx", type=float, default=100.0)
    sy.add_argument("--fy", type=float, default=None)
    sy.add_argument("--rings", type=int, default=30)
    sy.add_argument("--azimuth-step", type=float, default=0.9)
    sy.add_argument("--intensity-noise", type=float, default=0.0)
    sy.add_argument("--patch-size", type=int, default=32,
                    help="patch-size hint stored in the manifest")
    sy.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CalibrationError as e:
        print(json.dumps({"error": e.category, "message": str(e)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
