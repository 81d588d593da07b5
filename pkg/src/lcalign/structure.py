"""Patched sparse-Pearson-correlation structure loss between MI and LDP.

The image is tiled with non-overlapping S x S patches starting at a grid
origin (u0, v0); right/bottom remainders are ignored. Per patch, the
correlation between the dense monodepth values and the sparse LiDAR inverse
depths is computed over the non-idle pixels only, using the raw-sum form

    r = (n * Sxy - Sx * Sy) / (sqrt(n * Sxx - Sx^2) * sqrt(n * Syy - Sy^2))

A patch contributes to the loss only if it is valid: it must hold at least
``min_count`` LiDAR samples and both variance terms under the square roots
must be non-degenerate. The loss is the mean of (1 - r) over valid patches,
in [0, 2]; with no valid patch at all the worst-case sentinel 2.0 is
returned. Because r is invariant to positive affine rescaling of either
signal, relative (scale/shift-ambiguous) monodepth is usable directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadInputError, DimensionMismatchError
from .raster import DenseImage, SparseRaster

# A variance term (n*Sxx - Sx^2) below this marks a constant patch, which
# carries no structural evidence and is excluded from the valid set.
DEGENERATE_VARIANCE = 1e-12

# Loss reported when no patch is valid: the supremum of 1 - r is 2.
EMPTY_STRUCTURE_LOSS = 2.0


@dataclass(frozen=True)
class PatchGridSpec:
    """Tiling origin (u0, v0), patch side, and the valid-patch threshold."""

    u0: int
    v0: int
    side: int
    min_count: int

    def __post_init__(self):
        if self.side < 2:
            raise BadInputError("patch side must be >= 2")
        if self.min_count < 2:
            raise BadInputError("valid-patch threshold must be >= 2")
        if not (0 <= self.u0 < self.side and 0 <= self.v0 < self.side):
            raise BadInputError("grid origin must lie inside one patch")

    def layout(self, width: int, height: int) -> tuple[int, int]:
        """(rows, cols) of the tight tiling inside a width x height image."""
        return (height - self.v0) // self.side, (width - self.u0) // self.side


def patch_index_map(width: int, height: int, grid: PatchGridSpec) -> tuple[np.ndarray, int]:
    """Flat-pixel -> patch-id lookup table; -1 outside the tiled region.

    Patch ids run row-major over the tiling, matching a fixed scan order.
    """
    rows, cols = grid.layout(width, height)
    vs, us = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    pr = (vs - grid.v0) // grid.side
    pc = (us - grid.u0) // grid.side
    inside = (vs >= grid.v0) & (us >= grid.u0) & (pr < rows) & (pc < cols)
    ids = np.where(inside, pr * cols + pc, -1).astype(np.int64)
    return ids.reshape(-1), max(rows, 0) * max(cols, 0)


def spcc(x, y, min_count: int) -> float:
    """Sparse Pearson correlation of co-located samples.

    ``x`` holds the dense-image values and ``y`` the sparse-raster values at
    the raster's non-idle pixels. Fewer than ``min_count`` samples returns
    the sentinel 1.0; a constant x or y returns nan (no evidence either
    way -- the structure loss excludes such patches).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise BadInputError("x and y must pair one-to-one")
    n = x.size
    if n < min_count:
        return 1.0
    sx, sy = x.sum(), y.sum()
    sxy = (x * y).sum()
    sxx, syy = (x * x).sum(), (y * y).sum()
    var_x = n * sxx - sx * sx
    var_y = n * syy - sy * sy
    if var_x < DEGENERATE_VARIANCE or var_y < DEGENERATE_VARIANCE:
        return float("nan")
    return float((n * sxy - sx * sy) / (np.sqrt(var_x) * np.sqrt(var_y)))


def structure_loss_from_samples(
    patch_ids: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    n_patches: int,
    min_count: int,
) -> tuple[float, int]:
    """Core loss over pre-resolved samples.

    ``patch_ids`` assigns each (x, y) sample to a patch (-1 = outside any
    patch). Sums accumulate per patch in the caller's sample order, which
    the public entry points fix to ascending pixel order.
    """
    keep = patch_ids >= 0
    ids = patch_ids[keep]
    xs = x[keep]
    ys = y[keep]
    if n_patches <= 0 or ids.size == 0:
        return EMPTY_STRUCTURE_LOSS, 0
    n = np.bincount(ids, minlength=n_patches).astype(float)
    sx = np.bincount(ids, weights=xs, minlength=n_patches)
    sy = np.bincount(ids, weights=ys, minlength=n_patches)
    sxy = np.bincount(ids, weights=xs * ys, minlength=n_patches)
    sxx = np.bincount(ids, weights=xs * xs, minlength=n_patches)
    syy = np.bincount(ids, weights=ys * ys, minlength=n_patches)
    var_x = n * sxx - sx * sx
    var_y = n * syy - sy * sy
    valid = (n >= min_count) & (var_x >= DEGENERATE_VARIANCE) & (var_y >= DEGENERATE_VARIANCE)
    n_valid = int(np.count_nonzero(valid))
    if n_valid == 0:
        return EMPTY_STRUCTURE_LOSS, 0
    r = (n[valid] * sxy[valid] - sx[valid] * sy[valid]) / (
        np.sqrt(var_x[valid]) * np.sqrt(var_y[valid])
    )
    return float(np.mean(1.0 - r)), n_valid


def structure_loss_two_grids(
    ids_a: np.ndarray,
    ids_b: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    n_patches_a: int,
    n_patches_b: int,
    min_count: int,
) -> tuple[float, int, float, int]:
    """Both overlapped grids in one accumulation pass.

    Bit-identical to two structure_loss_from_samples calls (the per-patch
    sums accumulate the same samples in the same order), just with half the
    array dispatches; the hot evaluator path uses this.
    """
    offset_b = np.where(ids_b >= 0, ids_b + n_patches_a, -1)
    combined = np.concatenate([ids_a, offset_b])
    keep = combined >= 0
    ids = combined[keep]
    xs = np.concatenate([x, x])[keep]
    ys = np.concatenate([y, y])[keep]
    n_total = n_patches_a + n_patches_b
    if n_total <= 0 or ids.size == 0:
        return EMPTY_STRUCTURE_LOSS, 0, EMPTY_STRUCTURE_LOSS, 0
    n = np.bincount(ids, minlength=n_total).astype(float)
    sx = np.bincount(ids, weights=xs, minlength=n_total)
    sy = np.bincount(ids, weights=ys, minlength=n_total)
    sxy = np.bincount(ids, weights=xs * ys, minlength=n_total)
    sxx = np.bincount(ids, weights=xs * xs, minlength=n_total)
    syy = np.bincount(ids, weights=ys * ys, minlength=n_total)
    var_x = n * sxx - sx * sx
    var_y = n * syy - sy * sy
    valid = (n >= min_count) & (var_x >= DEGENERATE_VARIANCE) & (var_y >= DEGENERATE_VARIANCE)

    def one(lo, hi):
        v = valid[lo:hi]
        n_valid = int(np.count_nonzero(v))
        if n_valid == 0:
            return EMPTY_STRUCTURE_LOSS, 0
        seg = slice(lo, hi)
        r = (n[seg][v] * sxy[seg][v] - sx[seg][v] * sy[seg][v]) / (
            np.sqrt(var_x[seg][v]) * np.sqrt(var_y[seg][v])
        )
        return float(np.mean(1.0 - r)), n_valid

    loss_a, n_valid_a = one(0, n_patches_a)
    loss_b, n_valid_b = one(n_patches_a, n_total)
    return loss_a, n_valid_a, loss_b, n_valid_b


def structure_loss(mi, ldp: SparseRaster, grid: PatchGridSpec) -> tuple[float, int]:
    """Structure loss between a monodepth image and a LiDAR depth raster.

    ``mi`` may be a DenseImage or a bare (H, W) float array. Returns
    (loss, number of valid patches).
    """
    values = mi.values if isinstance(mi, DenseImage) else np.asarray(mi, dtype=float)
    if values.shape != (ldp.height, ldp.width):
        raise DimensionMismatchError(
            f"monodepth is {values.shape[1]}x{values.shape[0]}, "
            f"raster is {ldp.width}x{ldp.height}"
        )
    ids_by_pixel, n_patches = patch_index_map(ldp.width, ldp.height, grid)
    patch_ids = ids_by_pixel[ldp.pixels]
    x = values.reshape(-1)[ldp.pixels]
    return structure_loss_from_samples(patch_ids, x, ldp.values, n_patches, grid.min_count)
