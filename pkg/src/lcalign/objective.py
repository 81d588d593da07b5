"""Combined calibration objective over one or more frames.

For a candidate transform T the per-frame cost is

    lambda1 * (L_structure(grid at (0,0)) + L_structure(grid at (S/2,S/2)))
        + lambda2 * L_texture

with two overlapped patch grids so structure is sampled at staggered
offsets. Multi-frame costs are the mean of the per-frame costs, so weights
and sentinel magnitudes read the same for 1-frame and 4-frame runs.

ObjectiveEvaluator precomputes everything that does not depend on T
(grayscale bin codes, monodepth lookups, patch index maps) and is the
object search loops should hold on to; ``evaluate`` is the one-shot
functional wrapper around it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadInputError, DimensionMismatchError
from .geometry import Z_MIN, CameraIntrinsics, PointCloud, RigidTransform
from .raster import DenseImage, zbuffer_select
from .structure import PatchGridSpec, patch_index_map, structure_loss_two_grids
from .texture import bin_codes, nid_from_codes

EMPTY_TEXTURE_LOSS = 1.0


@dataclass(frozen=True)
class FramePacket:
    """One frame's preprocessed inputs: GI, MI, equalized cloud, intrinsics."""

    gi: DenseImage
    mi: DenseImage
    cloud: PointCloud
    intrinsics: CameraIntrinsics

    def __post_init__(self):
        shape = (self.intrinsics.height, self.intrinsics.width)
        if self.gi.values.shape != shape or self.mi.values.shape != shape:
            raise DimensionMismatchError(
                "frame images do not match the intrinsics dimensions: "
                f"gi {self.gi.values.shape}, mi {self.mi.values.shape}, expected {shape}"
            )


@dataclass(frozen=True)
class ObjectiveConfig:
    """Loss weights and discretization parameters."""

    lambda1: float = 0.2
    lambda2: float = 1.0
    patch_size: int = 40
    min_patch_points: int = 15
    histogram_bins: int = 256
    use_structure: bool = True
    use_texture: bool = True

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise BadInputError("loss weights must be nonnegative")
        structure_live = self.use_structure and self.lambda1 > 0
        texture_live = self.use_texture and self.lambda2 > 0
        if not structure_live and not texture_live:
            raise BadInputError("objective has no active loss term")

    def grids(self) -> tuple[PatchGridSpec, PatchGridSpec]:
        half = self.patch_size // 2
        return (
            PatchGridSpec(0, 0, self.patch_size, self.min_patch_points),
            PatchGridSpec(half, half, self.patch_size, self.min_patch_points),
        )


@dataclass(frozen=True)
class FrameBreakdown:
    """Per-frame loss terms at one transform."""

    structure_a: float
    structure_b: float
    texture: float
    n_valid_a: int
    n_valid_b: int
    total: float


class _FrameCache:
    """Transform-independent per-frame state for fast repeated evaluation."""

    def __init__(self, packet: FramePacket, cfg: ObjectiveConfig):
        intr = packet.intrinsics
        self.width = intr.width
        self.height = intr.height
        self.fx, self.fy = intr.fx, intr.fy
        self.cx, self.cy = intr.cx, intr.cy
        self.xyz = packet.cloud.xyz
        self.intensity = packet.cloud.intensity
        self.mi_flat = np.ascontiguousarray(packet.mi.values.reshape(-1))
        self.gi_codes = bin_codes(packet.gi.values.reshape(-1), cfg.histogram_bins)
        grid_a, grid_b = cfg.grids()
        self.patch_map_a, self.n_patches_a = patch_index_map(self.width, self.height, grid_a)
        self.patch_map_b, self.n_patches_b = patch_index_map(self.width, self.height, grid_b)


class ObjectiveEvaluator:
    """Evaluates the combined loss for candidate transforms over fixed frames."""

    def __init__(self, frames, cfg: ObjectiveConfig):
        frames = list(frames)
        if not frames:
            raise BadInputError("need at least one frame")
        self.cfg = cfg
        self._caches = [_FrameCache(f, cfg) for f in frames]

    def _frame_terms(self, cache: _FrameCache, rotation, translation):
        """(structure_a, n_valid_a, structure_b, n_valid_b, texture) for one frame."""
        cfg = self.cfg
        cam = cache.xyz @ rotation.T + translation
        z = cam[:, 2]
        # division by z <= Z_MIN produces garbage that the mask removes
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            inv_z = 1.0 / z
            ui = np.rint(cache.fx * cam[:, 0] * inv_z + cache.cx)
            vi = np.rint(cache.fy * cam[:, 1] * inv_z + cache.cy)
        keep = np.flatnonzero(
            (z > Z_MIN) & (ui >= 0) & (ui < cache.width) & (vi >= 0) & (vi < cache.height)
        )
        structure_live = cfg.use_structure and cfg.lambda1 > 0
        texture_live = cfg.use_texture and cfg.lambda2 > 0
        if keep.size == 0:
            empty_s = 2.0 if structure_live else 0.0
            return empty_s, 0, empty_s, 0, EMPTY_TEXTURE_LOSS if texture_live else 0.0
        pixels = vi[keep].astype(np.int64) * cache.width + ui[keep].astype(np.int64)
        inv = inv_z[keep]
        winners = zbuffer_select(pixels, inv)
        win_pixels = pixels[winners]
        ldp = inv[winners]
        ldp = ldp / ldp.max()

        s_a = s_b = 0.0
        nv_a = nv_b = 0
        if structure_live:
            s_a, nv_a, s_b, nv_b = structure_loss_two_grids(
                cache.patch_map_a[win_pixels],
                cache.patch_map_b[win_pixels],
                cache.mi_flat[win_pixels],
                ldp,
                cache.n_patches_a,
                cache.n_patches_b,
                cfg.min_patch_points,
            )
        tex = 0.0
        if texture_live:
            lip = cache.intensity[keep[winners]]
            tex = nid_from_codes(
                cache.gi_codes[win_pixels], bin_codes(lip, cfg.histogram_bins), cfg.histogram_bins
            )
        return s_a, nv_a, s_b, nv_b, tex

    def _frame_total(self, terms) -> float:
        s_a, _, s_b, _, tex = terms
        return self.cfg.lambda1 * (s_a + s_b) + self.cfg.lambda2 * tex

    def evaluate(self, rotation: np.ndarray, translation: np.ndarray) -> float:
        """Total loss (mean over frames) at a raw rotation/translation pair."""
        total = 0.0
        for cache in self._caches:
            total += self._frame_total(self._frame_terms(cache, rotation, translation))
        return total / len(self._caches)

    def evaluate_detailed(self, rotation, translation) -> tuple[float, list[FrameBreakdown]]:
        breakdowns = []
        total = 0.0
        for cache in self._caches:
            terms = self._frame_terms(cache, rotation, translation)
            frame_total = self._frame_total(terms)
            s_a, nv_a, s_b, nv_b, tex = terms
            breakdowns.append(FrameBreakdown(s_a, s_b, tex, nv_a, nv_b, frame_total))
            total += frame_total
        return total / len(self._caches), breakdowns


def evaluate(
    frames, transform: RigidTransform, cfg: ObjectiveConfig
) -> tuple[float, list[FrameBreakdown]]:
    """One-shot objective evaluation; returns (total, per-frame breakdown)."""
    evaluator = ObjectiveEvaluator(frames, cfg)
    return evaluator.evaluate_detailed(transform.rotation, transform.translation)
