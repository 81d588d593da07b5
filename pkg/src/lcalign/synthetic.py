"""Self-consistent synthetic scenes for desk-scale verification.

A scene is a set of planar rectangles (free-standing objects plus a ground
plane and a slightly tilted backdrop) with distinct reflectivities, rendered
twice from exact geometry:

* camera side: per-pixel ray casting yields true inverse depth and a
  reflectivity image. The monodepth image applies an independent affine
  distortion (scale/shift on inverse depth) per region, emulating the
  drift of relative monodepth that the patched structure loss tolerates.
* LiDAR side: ring/azimuth ray casting from the LiDAR origin placed by the
  ground-truth extrinsic, so the sparse projections show scan-line sparsity
  patterns like real data. Point intensity equals surface reflectivity
  (plus optional seeded noise).

All images go through the same 8/16-bit quantization as the on-disk
formats, so a generated packet is bit-identical to writing the scene to
disk and loading it back. Generation is a pure function of the spec.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSceneError
from .geometry import CameraIntrinsics, PointCloud, RigidTransform, euler_to_matrix
from .objective import FramePacket
from .raster import DenseImage, equalize_intensity, to_grayscale_equalized

# Reflectivities are auto-spaced in this range; the pairwise-gap floor keeps
# the texture loss discriminative.
_REFLECTIVITY_SPAN = (0.02, 0.98)
MIN_REFLECTIVITY_GAP = 0.1

_RAY_EPS = 1e-9
_MIN_HIT_RANGE = 0.25


def _default_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(fx=190.0, fy=190.0, cx=111.5, cy=83.5, width=224, height=168)


@dataclass(frozen=True)
class SyntheticSceneSpec:
    """Everything that determines a generated scene."""

    seed: int = 0
    n_primitives: int = 8
    reflectivities: tuple | None = None
    intrinsics: CameraIntrinsics = field(default_factory=_default_intrinsics)
    truth: RigidTransform | None = None
    rings: int = 40
    ring_elevation_deg: tuple = (-34.0, 26.0)
    azimuth_step_deg: float = 0.62
    azimuth_margin_deg: float = 25.0
    depth_range: tuple = (1.8, 11.0)
    mono_scale_range: tuple = (0.88, 1.14)
    mono_shift_range: tuple = (-0.015, 0.015)
    intensity_noise: float = 0.0
    # intra-region reflectivity gradient amplitude; keeps the loss surface
    # smooth the way natural surface texture does on real data
    reflectivity_ramp: float = 0.035


@dataclass(frozen=True)
class SyntheticScene:
    """Generated frame, its ground truth, and the raw on-disk payloads."""

    packet: FramePacket
    truth: RigidTransform
    rgb: np.ndarray
    monodepth_u16: np.ndarray
    cloud_raw: np.ndarray
    region_count: int


class _Rect:
    """Planar rectangle (center +/- edge vectors) owned by one appearance region.

    Geometry and appearance are decoupled: several rectangles may share one
    region (reflectivity + monodepth-affine assignment), so scenes can carry
    depth structure everywhere without exhausting the small distinct
    reflectivity palette.
    """

    def __init__(self, center, eu, ev, region):
        self.center = np.asarray(center, dtype=float)
        self.eu = np.asarray(eu, dtype=float)
        self.ev = np.asarray(ev, dtype=float)
        self.region = int(region)
        self.normal = np.cross(self.eu, self.ev)
        self.eu_inv = self.eu / np.dot(self.eu, self.eu)
        self.ev_inv = self.ev / np.dot(self.ev, self.ev)


def _intersect(
    origin: np.ndarray, dirs: np.ndarray, rects
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Nearest hit per ray: (range, region id, local a, local b); id -1 = miss."""
    n_rays = dirs.shape[0]
    best_t = np.full(n_rays, np.inf)
    best_id = np.full(n_rays, -1, dtype=np.int64)
    best_a = np.zeros(n_rays)
    best_b = np.zeros(n_rays)
    for rect in rects:
        denom = dirs @ rect.normal
        offset = np.dot(rect.center - origin, rect.normal)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = offset / denom
        valid = (np.abs(denom) > _RAY_EPS) & (t > _MIN_HIT_RANGE) & (t < best_t)
        if not valid.any():
            continue
        hit = origin + t[valid, None] * dirs[valid]
        rel = hit - rect.center
        a = rel @ rect.eu_inv
        b = rel @ rect.ev_inv
        inside = (np.abs(a) <= 1.0) & (np.abs(b) <= 1.0)
        idx = np.flatnonzero(valid)[inside]
        best_t[idx] = t[idx]
        best_id[idx] = rect.region
        best_a[idx] = a[inside]
        best_b[idx] = b[inside]
    return best_t, best_id, best_a, best_b


def _build_rects(spec: SyntheticSceneSpec, rng: np.random.Generator):
    intr = spec.intrinsics
    rects = []
    z_lo, z_hi = spec.depth_range
    for k in range(spec.n_primitives):
        # a fixed cast keeps every pose direction observable at close
        # range: two wide slabs on opposite diagonal quadrants, an overhead
        # beam near the image top, thin poles at the sides, plus free
        # panels; the diagonal and overhead members are what pin image
        # tilt and in-plane roll against vertical translation
        kind = ("slab", "slab", "beam", "panel", "panel", "pole", "panel", "pole")[k % 8]
        if kind == "slab":
            side = rng.uniform(0.12, 0.3)
            u = intr.width * (side if k % 2 == 0 else 1.0 - side)
            v = intr.height * (0.3 if k % 2 == 0 else 0.62) + rng.uniform(
                -0.08, 0.08
            ) * intr.height
            z = rng.uniform(z_lo, min(2.0 * z_lo, z_hi))
        elif kind == "beam":
            u = intr.width * rng.uniform(0.35, 0.65)
            v = intr.height * rng.uniform(0.08, 0.2)
            z = rng.uniform(2.2, 4.5)
        elif kind == "pole":
            side = rng.uniform(0.08, 0.32)
            u = intr.width * (side if k % 2 == 0 else 1.0 - side)
            v = rng.uniform(0.15 * intr.height, 0.80 * intr.height)
            z = rng.uniform(z_lo, 0.4 * z_hi)
        else:
            u = rng.uniform(0.12 * intr.width, 0.88 * intr.width)
            v = rng.uniform(0.15 * intr.height, 0.80 * intr.height)
            z = float(np.exp(rng.uniform(np.log(z_lo), np.log(z_hi))))
        center = z * np.array([(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0])
        if kind == "slab":
            hu = rng.uniform(0.45, 0.9)
            hv = rng.uniform(0.7, 1.1)
            tilt = euler_to_matrix(rng.uniform(-8.0, 8.0, size=3))
        elif kind == "beam":
            # long horizontal member overhead
            hu = z * rng.uniform(0.5, 0.62)
            hv = rng.uniform(0.1, 0.2)
            tilt = euler_to_matrix(rng.uniform(-4.0, 4.0, size=3))
        elif kind == "pole":
            hu = rng.uniform(0.06, 0.16)
            hv = rng.uniform(0.7, 1.1)
            center[1] = 1.3 - hv  # foot on the ground plane
            tilt = euler_to_matrix(rng.uniform(-6.0, 6.0, size=3))
        else:
            hu = z * rng.uniform(0.06, 0.18)
            hv = z * rng.uniform(0.06, 0.18)
            tilt = euler_to_matrix(rng.uniform(-35.0, 35.0, size=3))
        rects.append(
            _Rect(center, tilt @ np.array([hu, 0, 0]), tilt @ np.array([0, hv, 0]), region=k)
        )
        if kind == "pole" and k % 2 == 1:
            # identical twin pole in the central third (same appearance
            # region): near-vs-facade contrast at the image center pins yaw
            # against horizontal translation
            zc = rng.uniform(z_lo, 0.35 * z_hi)
            uc = intr.width * rng.uniform(0.42, 0.58)
            hvc = rng.uniform(0.7, 1.1)
            cc = zc * np.array([(uc - intr.cx) / intr.fx, 0.0, 1.0])
            cc[1] = 1.3 - hvc
            tiltc = euler_to_matrix(rng.uniform(-6.0, 6.0, size=3))
            rects.append(
                _Rect(cc, tiltc @ np.array([rng.uniform(0.06, 0.16), 0, 0]),
                      tiltc @ np.array([0, hvc, 0]), region=k)
            )
    ground_region = spec.n_primitives
    backdrop_region = spec.n_primitives + 1
    # ground plane under the camera (y points down)
    rects.append(_Rect([0.0, 1.3, 14.0], [28.0, 0.0, 0.0], [0.0, 0.0, 13.5], ground_region))
    # the backdrop is a panelled facade: a grid of patches at staggered
    # depths sharing one appearance region. Depth edges along both image
    # axes keep every rotation/translation direction observable in the
    # distant field, the way cluttered streetscapes do.
    n_cols, n_rows = 9, 3
    col_x = np.linspace(-26.0, 26.0, n_cols)
    row_y = np.linspace(-16.0, 4.0, n_rows)
    half_w = 0.5 * (col_x[1] - col_x[0]) + 0.6
    half_h = 0.5 * (row_y[1] - row_y[0]) + 0.6
    for sx in col_x:
        for sy in row_y:
            sz = rng.uniform(13.0, 24.0)
            rects.append(
                _Rect([sx, sy, sz], [half_w, 0.0, 0.0],
                      [0.0, half_h, rng.uniform(-1.5, 1.5)], backdrop_region)
            )
    # catch-all plane behind the panels (same region) so no ray escapes
    rects.append(_Rect([0.0, -2.0, 30.0], [160.0, 0.0, 0.0], [0.0, 120.0, 6.0], backdrop_region))
    return rects, spec.n_primitives + 2


def _pick_reflectivities(spec: SyntheticSceneSpec, n_regions: int, rng: np.random.Generator):
    if spec.reflectivities is not None:
        refl = np.asarray(spec.reflectivities, dtype=float)
        if refl.size != n_regions:
            raise DegenerateSceneError(
                f"need {n_regions} reflectivities (primitives + ground + backdrop), got {refl.size}"
            )
    else:
        refl = rng.permutation(np.linspace(*_REFLECTIVITY_SPAN, n_regions))
    if refl.min() < 0.0 or refl.max() > 1.0:
        raise DegenerateSceneError("reflectivities must lie in [0, 1]")
    gaps = np.diff(np.sort(refl))
    if gaps.size and gaps.min() < MIN_REFLECTIVITY_GAP - 1e-12:
        raise DegenerateSceneError(
            f"reflectivity pairwise gap {gaps.min():.3f} below {MIN_REFLECTIVITY_GAP}"
            " -- the texture loss would lose its signal"
        )
    return refl


def _frustum_half_angle(intr: CameraIntrinsics) -> float:
    corners = []
    for u in (0.0, intr.width - 1.0):
        for v in (0.0, intr.height - 1.0):
            d = np.array([(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0])
            corners.append(np.arccos(1.0 / np.linalg.norm(d)))
    return float(max(corners))


def generate_synthetic_scene(spec: SyntheticSceneSpec) -> SyntheticScene:
    """Render one scene; deterministic for a given spec."""
    if spec.n_primitives < 1:
        raise DegenerateSceneError("scene needs at least one primitive")
    seeds = np.random.SeedSequence(spec.seed).spawn(6)
    rng_truth, rng_layout, rng_reflect, rng_mono, rng_noise, rng_scan = map(
        np.random.default_rng, seeds
    )

    if spec.truth is not None:
        truth = spec.truth
    else:
        # FLU LiDAR to RDF camera mounting with a few degrees of jitter.
        # The baseline stays small, as on a compact rig: parallax shadows
        # (pixels where the two sensors see different surfaces) grow with
        # it and bias the translation optimum, on real rigs just as here.
        euler = np.array([90.0, 0.0, 90.0]) + rng_truth.uniform(-3.0, 3.0, size=3)
        translation = rng_truth.uniform(
            [-0.02, -0.02, -0.06], [0.02, 0.02, 0.06]
        )
        truth = RigidTransform.from_euler_translation(euler, translation)

    rects, n_regions = _build_rects(spec, rng_layout)
    refl = _pick_reflectivities(spec, n_regions, rng_reflect)
    # per-region unit gradient directions for the reflectivity ramps
    ramp_theta = rng_reflect.uniform(0.0, 2.0 * np.pi, n_regions)
    ramp_ca = np.cos(ramp_theta)
    ramp_cb = np.sin(ramp_theta)

    def surface_reflectivity(region, a, b):
        ramp = 0.5 * spec.reflectivity_ramp * (ramp_ca[region] * a + ramp_cb[region] * b)
        return np.clip(refl[region] + ramp, 0.0, 1.0)

    intr = spec.intrinsics
    vs, us = np.meshgrid(np.arange(intr.height), np.arange(intr.width), indexing="ij")
    cam_dirs = np.stack(
        [
            (us.reshape(-1) - intr.cx) / intr.fx,
            (vs.reshape(-1) - intr.cy) / intr.fy,
            np.ones(intr.width * intr.height),
        ],
        axis=1,
    )
    depth, region, loc_a, loc_b = _intersect(np.zeros(3), cam_dirs, rects)
    if np.any(region < 0):
        raise DegenerateSceneError("camera rays escape the scene; backdrop too small")
    inv_depth = 1.0 / depth

    scale = rng_mono.uniform(*spec.mono_scale_range, size=n_regions)
    shift = rng_mono.uniform(*spec.mono_shift_range, size=n_regions)
    mono = scale[region] * inv_depth + shift[region]
    span = mono.max() - mono.min()
    mono = (mono - mono.min()) / span if span > 1e-12 else np.full_like(mono, 0.5)
    mono_u16 = np.rint(mono * 65535.0).astype(np.uint16).reshape(intr.height, intr.width)

    reflect_img = surface_reflectivity(region, loc_a, loc_b)
    gray_u8 = np.rint(reflect_img * 255.0).astype(np.uint8).reshape(intr.height, intr.width)
    rgb = np.repeat(gray_u8[:, :, None], 3, axis=2)

    # ring elevations with slight jitter, azimuths dithered per ray: real
    # scan timing never lines up with the pixel grid, and coherent beating
    # between the two would put spurious ripples into the loss surface
    elevations = np.deg2rad(
        np.linspace(*spec.ring_elevation_deg, spec.rings)
        + rng_scan.uniform(-0.2, 0.2, spec.rings)
    )
    base_azimuths = np.deg2rad(np.arange(-180.0, 180.0, spec.azimuth_step_deg))
    el, az = np.meshgrid(elevations, base_azimuths, indexing="ij")
    az = az + np.deg2rad(rng_scan.uniform(0.0, spec.azimuth_step_deg, az.shape))
    lidar_dirs = np.stack(
        [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1
    ).reshape(-1, 3)
    cam_frame_dirs = lidar_dirs @ truth.rotation.T
    cone = _frustum_half_angle(intr) + np.deg2rad(spec.azimuth_margin_deg)
    facing = cam_frame_dirs[:, 2] > np.cos(cone)
    lidar_dirs = lidar_dirs[facing]
    cam_frame_dirs = cam_frame_dirs[facing]

    ranges, hit_region, hit_a, hit_b = _intersect(truth.translation, cam_frame_dirs, rects)
    hit = hit_region >= 0
    points_cam = truth.translation + ranges[hit, None] * cam_frame_dirs[hit]
    points_lidar = (points_cam - truth.translation) @ truth.rotation
    intensity = surface_reflectivity(hit_region[hit], hit_a[hit], hit_b[hit])
    if spec.intensity_noise > 0.0:
        intensity = intensity + spec.intensity_noise * rng_noise.standard_normal(intensity.size)
    intensity = np.clip(intensity, 0.01, 1.0)
    cloud_raw = np.hstack([points_lidar, intensity[:, None]]).astype("<f4")

    packet = FramePacket(
        gi=to_grayscale_equalized(rgb),
        mi=DenseImage(mono_u16.astype(float) / 65535.0),
        cloud=equalize_intensity(PointCloud.from_array(cloud_raw.astype(float))),
        intrinsics=intr,
    )
    return SyntheticScene(
        packet=packet,
        truth=truth,
        rgb=rgb,
        monodepth_u16=mono_u16,
        cloud_raw=cloud_raw,
        region_count=n_regions,
    )
