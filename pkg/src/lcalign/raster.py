"""Aligned raster construction: grayscale, monodepth, and LiDAR projections.

Four images drive the calibration losses:

* GI  - grayscale camera image, histogram-equalized, values in [0, 1]
* MI  - monodepth (relative inverse depth) image, values in [0, 1]
* LDP - sparse LiDAR depth projection, inverse depth normalized to (0, 1]
* LIP - sparse LiDAR intensity projection, equalized intensity in (0, 1]

GI/MI are dense H x W images; LDP/LIP are sparse rasters indexed by pixel.
Where several LiDAR points land on one pixel the nearest point (largest
inverse depth) wins in both rasters; exact ties go to the earliest point in
input order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import BadInputError, DimensionMismatchError
from .geometry import PointCloud, ProjectedPoints

# Standard-definition luma weights for RGB -> gray.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

EQUALIZE_LEVELS = 256


@dataclass(frozen=True)
class DenseImage:
    """Dense H x W image with scalar values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.ndim != 2 or v.size == 0:
            raise BadInputError("dense image must be a nonempty 2-d array")
        if not np.all(np.isfinite(v)):
            raise BadInputError("dense image contains non-finite values")
        if v.min() < 0.0 or v.max() > 1.0:
            raise BadInputError("dense image values outside [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SparseRaster:
    """Sparse pixel -> value map over an H x W grid.

    ``pixels`` holds flat indices (v * width + u), strictly increasing;
    idle pixels are simply absent.
    """

    width: int
    height: int
    pixels: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pix = np.asarray(self.pixels, dtype=np.int64).reshape(-1)
        val = np.asarray(self.values, dtype=float).reshape(-1)
        if pix.shape != val.shape:
            raise BadInputError("pixel and value arrays differ in length")
        if pix.size and (np.any(np.diff(pix) <= 0) or pix[0] < 0 or pix[-1] >= self.width * self.height):
            raise BadInputError("pixels must be strictly increasing flat indices in range")
        object.__setattr__(self, "pixels", pix)
        object.__setattr__(self, "values", val)

    def __len__(self) -> int:
        return self.pixels.shape[0]

    def as_dict(self) -> dict:
        """Plain {(u, v): value} view, for tests and small-scale inspection."""
        us = self.pixels % self.width
        vs = self.pixels // self.width
        return {(int(u), int(v)): float(x) for u, v, x in zip(us, vs, self.values)}

    def to_dense(self, fill: float = 0.0) -> np.ndarray:
        dense = np.full(self.height * self.width, fill, dtype=float)
        dense[self.pixels] = self.values
        return dense.reshape(self.height, self.width)


def equalize_values(values: np.ndarray, levels: int = EQUALIZE_LEVELS) -> np.ndarray:
    """Histogram-equalize [0, 1] values over ``levels`` quantization levels.

    Each value maps to the empirical CDF of its quantized level, so outputs
    lie in (0, 1] and a single-level input maps to 1.0.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise BadInputError("empty input to equalization")
    quantized = np.rint(v * (levels - 1)).astype(np.int64)
    hist = np.bincount(quantized.reshape(-1), minlength=levels)
    cdf = np.cumsum(hist) / v.size
    return cdf[quantized]


def to_grayscale_equalized(rgb: np.ndarray) -> DenseImage:
    """Luma conversion plus 256-level histogram equalization.

    Accepts (H, W, 3) or (H, W) uint8 arrays; returns values in (0, 1].
    """
    img = np.asarray(rgb)
    if img.size == 0:
        raise BadInputError("empty image")
    if img.ndim == 3:
        if img.shape[2] != 3:
            raise BadInputError(f"expected 3 channels, got {img.shape[2]}")
        wr, wg, wb = LUMA_WEIGHTS
        luma = wr * img[..., 0] + wg * img[..., 1] + wb * img[..., 2]
    elif img.ndim == 2:
        luma = img.astype(float)
    else:
        raise BadInputError(f"expected 2-d or 3-d image, got ndim={img.ndim}")
    return DenseImage(equalize_values(luma / 255.0))


def equalize_intensity(cloud: PointCloud) -> PointCloud:
    """Remap point intensities through their empirical CDF, keeping xyz.

    The mapping is monotone (rank preserving); outputs lie in (0, 1].
    Unlike image equalization there is no level quantization, so applying
    this twice equals applying it once.
    """
    if len(cloud) == 0:
        raise BadInputError("empty cloud")
    _, inverse, counts = np.unique(cloud.intensity, return_inverse=True, return_counts=True)
    cdf = np.cumsum(counts) / len(cloud)
    return PointCloud(cloud.xyz, cdf[inverse])


def zbuffer_select(pixels: np.ndarray, inv_depth: np.ndarray) -> np.ndarray:
    """Indices of the winning sample per distinct pixel, ascending pixel order.

    The winner is the sample with the largest inverse depth; exact ties go
    to the earliest input index. Implemented as one stable sort on the
    packed key ``pixel * 16 - inv_depth`` (inverse depths are below 10 by
    the near-plane cull, so pixels never collide); inverse depths closer
    than one ulp of the key (~1e-10) resolve like exact ties.
    """
    order = np.argsort(pixels * 16.0 - inv_depth, kind="stable")
    sorted_pixels = pixels[order]
    first = np.empty(order.shape, dtype=bool)
    if order.size:
        first[0] = True
        first[1:] = sorted_pixels[1:] != sorted_pixels[:-1]
    return order[first]


def rasterize(
    projected: ProjectedPoints, width: int, height: int
) -> tuple[SparseRaster, SparseRaster]:
    """Build the depth (LDP) and intensity (LIP) rasters from projected points.

    Both rasters share one z-buffer: the same winning point supplies the
    pixel in each. LDP values are inverse depths divided by the frame
    maximum, so they lie in (0, 1]; the structure loss is invariant to that
    positive rescaling.
    """
    if len(projected) == 0:
        empty = np.empty(0)
        return (
            SparseRaster(width, height, np.empty(0, np.int64), empty),
            SparseRaster(width, height, np.empty(0, np.int64), empty.copy()),
        )
    ui = np.rint(projected.u).astype(np.int64)
    vi = np.rint(projected.v).astype(np.int64)
    pixels = vi * width + ui
    winners = zbuffer_select(pixels, projected.inv_depth)
    win_pixels = pixels[winners]
    inv = projected.inv_depth[winners]
    ldp = SparseRaster(width, height, win_pixels, inv / inv.max())
    lip = SparseRaster(width, height, win_pixels, projected.intensity[winners])
    return ldp, lip


def load_monodepth(path, expected_size: tuple[int, int] | None = None) -> DenseImage:
    """Read a 16-bit single-channel monodepth file into [0, 1].

    Values follow the inverse-depth convention: larger means nearer.
    ``expected_size`` is (width, height); a mismatch raises.
    """
    arr = np.asarray(Image.open(Path(path)))
    if arr.ndim != 2:
        raise BadInputError(f"monodepth file must be single-channel, got shape {arr.shape}")
    if expected_size is not None and (arr.shape[1], arr.shape[0]) != tuple(expected_size):
        raise DimensionMismatchError(
            f"monodepth/image size mismatch: file is {arr.shape[1]}x{arr.shape[0]}, "
            f"expected {expected_size[0]}x{expected_size[1]}"
        )
    if arr.dtype not in (np.uint16, np.int32, np.uint8):
        raise BadInputError(f"unsupported monodepth dtype {arr.dtype}")
    if arr.dtype == np.uint8:
        # tolerated for hand-made fixtures; scaled as 8-bit
        return DenseImage(arr.astype(float) / 255.0)
    return DenseImage(arr.astype(float) / 65535.0)


def save_monodepth(path, values: np.ndarray) -> None:
    """Write [0, 1] inverse-depth values as a 16-bit single-channel PNG."""
    v = np.asarray(values, dtype=float)
    if v.min() < 0.0 or v.max() > 1.0:
        raise BadInputError("monodepth values outside [0, 1]")
    Image.fromarray(np.rint(v * 65535.0).astype(np.uint16)).save(Path(path))
