"""Frame loading: point clouds, KITTI-style calib files, frame manifests.

Wire formats:

* Point cloud: binary little-endian float32 records of (x, y, z, intensity),
  16 bytes per point (the KITTI velodyne layout). Intensity is clamped to
  [0, 1] on load; non-finite records are dropped with a logged count.
* Calib: KITTI-style ``key: values`` text with P2 / R0_rect / Tr_velo_to_cam
  rows. A nonzero fourth column of P2 (stereo baseline) is folded into the
  returned translation as K^-1 @ P2[:, 3].
* Manifest: JSON describing one frame (image, monodepth, cloud paths,
  intrinsics, optional ground truth, optional config hints). Paths are
  resolved relative to the manifest file. Schema in the README.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import BadInputError, DimensionMismatchError
from .geometry import CameraIntrinsics, PointCloud, RigidTransform, assert_rotation
from .objective import FramePacket
from .raster import equalize_intensity, load_monodepth, to_grayscale_equalized

log = logging.getLogger(__name__)

POINT_RECORD_BYTES = 16

MANIFEST_SCHEMA_VERSION = 1


def load_point_cloud(path) -> PointCloud:
    """Read a binary float32 x/y/z/intensity cloud; see module docstring."""
    path = Path(path)
    if not path.exists():
        raise BadInputError(f"point cloud file not found: {path}")
    n_bytes = path.stat().st_size
    if n_bytes % POINT_RECORD_BYTES != 0:
        valid = n_bytes - n_bytes % POINT_RECORD_BYTES
        raise BadInputError(
            f"{path}: size {n_bytes} B is not a multiple of the {POINT_RECORD_BYTES} B "
            f"point record (trailing bytes start at offset {valid})"
        )
    points = np.fromfile(path, dtype="<f4").reshape(-1, 4).astype(float)
    if points.shape[0] == 0:
        log.warning("%s: empty point cloud", path)
        return PointCloud(np.empty((0, 3)), np.empty(0))
    finite = np.all(np.isfinite(points), axis=1)
    dropped = int(points.shape[0] - finite.sum())
    if dropped:
        log.warning("%s: dropped %d non-finite point records", path, dropped)
        points = points[finite]
    return PointCloud(points[:, :3], np.clip(points[:, 3], 0.0, 1.0))


def save_point_cloud(path, cloud: PointCloud) -> None:
    rows = np.hstack([cloud.xyz, cloud.intensity[:, None]]).astype("<f4")
    rows.tofile(Path(path))


def _parse_calib_rows(path: Path) -> dict:
    rows = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or ":" not in line:
            continue
        key, _, rest = line.partition(":")
        values = rest.split()
        if values:
            rows[key.strip()] = np.array([float(v) for v in values])
    return rows


def load_kitti_calib(path, image_size: tuple[int, int]) -> tuple[CameraIntrinsics, RigidTransform]:
    """Parse a KITTI-style calib file into intrinsics and the LiDAR->camera truth.

    ``image_size`` is (width, height); calib files do not carry it. The
    transform composes rectification with the velo-to-cam row, plus the
    baseline fold-in described in the module docstring.
    """
    path = Path(path)
    if not path.exists():
        raise BadInputError(f"calib file not found: {path}")
    rows = _parse_calib_rows(path)

    proj = None
    for key in ("P2", "P0"):
        if key in rows:
            proj = rows[key]
            break
    if proj is None:
        raise BadInputError(f"{path}: missing projection row 'P2'")
    if proj.size != 12:
        raise BadInputError(f"{path}: projection row must hold 12 values")
    p = proj.reshape(3, 4)

    tr = None
    for key in ("Tr_velo_to_cam", "Tr_velo_cam", "Tr"):
        if key in rows:
            tr = rows[key]
            break
    if tr is None:
        raise BadInputError(f"{path}: missing key 'Tr_velo_to_cam'")
    if tr.size != 12:
        raise BadInputError(f"{path}: Tr_velo_to_cam must hold 12 values")
    tr = tr.reshape(3, 4)

    rect = np.eye(3)
    for key in ("R0_rect", "R_rect"):
        if key in rows:
            if rows[key].size != 9:
                raise BadInputError(f"{path}: {key} must hold 9 values")
            rect = rows[key].reshape(3, 3)
            break

    fx, fy = p[0, 0], p[1, 1]
    cx, cy = p[0, 2], p[1, 2]
    intrinsics = CameraIntrinsics(fx, fy, cx, cy, int(image_size[0]), int(image_size[1]))

    # p[:, 3] = K @ t_extra, with K upper triangular; solve directly.
    tz = p[2, 3]
    ty = (p[1, 3] - cy * tz) / fy
    tx = (p[0, 3] - cx * tz) / fx
    rotation = rect @ tr[:, :3]
    assert_rotation(rotation)
    translation = rect @ tr[:, 3] + np.array([tx, ty, tz])
    return intrinsics, RigidTransform(rotation, translation)


def save_kitti_calib(path, intrinsics: CameraIntrinsics, transform: RigidTransform) -> None:
    """Write a minimal KITTI-style calib file (identity rectification)."""

    def row(values):
        return " ".join(repr(float(v)) for v in values)

    k = intrinsics.matrix
    p2 = np.hstack([k, np.zeros((3, 1))])
    tr = np.hstack([transform.rotation, transform.translation[:, None]])
    lines = [
        f"P2: {row(p2.reshape(-1))}",
        f"R0_rect: {row(np.eye(3).reshape(-1))}",
        f"Tr_velo_to_cam: {row(tr.reshape(-1))}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_image(path) -> np.ndarray:
    """Read an 8-bit camera image as (H, W) or (H, W, 3) uint8."""
    path = Path(path)
    if not path.exists():
        raise BadInputError(f"image file not found: {path}")
    img = Image.open(path)
    if img.mode == "L":
        return np.asarray(img)
    return np.asarray(img.convert("RGB"))


@dataclass(frozen=True)
class FrameManifest:
    """Resolved description of one frame on disk."""

    image_path: Path
    monodepth_path: Path
    cloud_path: Path
    intrinsics: CameraIntrinsics
    ground_truth: RigidTransform | None = None
    config: dict | None = None


def _transform_from_dict(d: dict) -> RigidTransform:
    if "matrix_4x4" in d:
        return RigidTransform.from_matrix(np.asarray(d["matrix_4x4"], dtype=float))
    try:
        return RigidTransform.from_euler_translation(d["euler_deg"], d["translation_m"])
    except KeyError as e:
        raise BadInputError(f"transform dict missing key {e}") from e


def _transform_to_dict(t: RigidTransform) -> dict:
    e = t.euler
    return {
        "euler_deg": [e.roll, e.pitch, e.yaw],
        "translation_m": [float(v) for v in t.translation],
    }


def load_manifest(path) -> FrameManifest:
    path = Path(path)
    if not path.exists():
        raise BadInputError(f"manifest not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise BadInputError(f"{path}: not valid JSON ({e})") from e
    for key in ("image", "monodepth", "cloud", "intrinsics"):
        if key not in data:
            raise BadInputError(f"{path}: manifest missing key '{key}'")
    intr = data["intrinsics"]
    try:
        intrinsics = CameraIntrinsics(
            float(intr["fx"]), float(intr["fy"]), float(intr["cx"]), float(intr["cy"]),
            int(intr["width"]), int(intr["height"]),
        )
    except KeyError as e:
        raise BadInputError(f"{path}: intrinsics missing key {e}") from e
    base = path.parent
    truth = _transform_from_dict(data["ground_truth"]) if data.get("ground_truth") else None
    manifest = FrameManifest(
        image_path=base / data["image"],
        monodepth_path=base / data["monodepth"],
        cloud_path=base / data["cloud"],
        intrinsics=intrinsics,
        ground_truth=truth,
        config=data.get("config"),
    )
    for p in (manifest.image_path, manifest.monodepth_path, manifest.cloud_path):
        if not p.exists():
            raise BadInputError(f"{path}: referenced file not found: {p}")
    return manifest


def save_manifest(path, manifest: FrameManifest) -> None:
    path = Path(path)
    base = path.parent
    intr = manifest.intrinsics
    data = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "image": str(manifest.image_path.relative_to(base)),
        "monodepth": str(manifest.monodepth_path.relative_to(base)),
        "cloud": str(manifest.cloud_path.relative_to(base)),
        "intrinsics": {
            "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
            "width": intr.width, "height": intr.height,
        },
    }
    if manifest.ground_truth is not None:
        data["ground_truth"] = _transform_to_dict(manifest.ground_truth)
    if manifest.config:
        data["config"] = manifest.config
    path.write_text(json.dumps(data, indent=2) + "\n")


def load_frame(manifest: FrameManifest) -> FramePacket:
    """Load and preprocess one frame into an objective-ready packet.

    Runs grayscale equalization and intensity equalization; validates that
    image, monodepth, and intrinsics dimensions all agree before any loss
    can be evaluated.
    """
    intr = manifest.intrinsics
    img = load_image(manifest.image_path)
    if img.shape[:2] != (intr.height, intr.width):
        raise DimensionMismatchError(
            f"{manifest.image_path}: image is {img.shape[1]}x{img.shape[0]}, "
            f"intrinsics say {intr.width}x{intr.height}"
        )
    gi = to_grayscale_equalized(img)
    mi = load_monodepth(manifest.monodepth_path, expected_size=(intr.width, intr.height))
    cloud = load_point_cloud(manifest.cloud_path)
    if len(cloud) == 0:
        raise BadInputError(f"{manifest.cloud_path}: empty point cloud")
    return FramePacket(gi=gi, mi=mi, cloud=equalize_intensity(cloud), intrinsics=intr)
