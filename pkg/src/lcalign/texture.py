"""Normalized-information-distance texture loss between GI and LIP.

Both signals are binned into B uniform bins over [0, 1] (value 1.0 falls in
the top bin) at the LiDAR raster's non-idle pixels only. From the joint
histogram's empirical distribution, with natural-log Shannon entropies and
0 log 0 := 0,

    MI(X; Y) = H(X) + H(Y) - H(X, Y)
    NID      = 1 - MI / H(X, Y)

NID is a metric in [0, 1]: 0 for identical signals, 1 for independent ones.
When the raster is empty or the joint entropy is zero there is no evidence
of association and the maximal distance 1.0 is returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadInputError, DimensionMismatchError
from .raster import DenseImage, SparseRaster

DEFAULT_BINS = 256


@dataclass(frozen=True)
class JointHistogram:
    """B x B joint counts over the bin grid, plus the contributing total."""

    counts: np.ndarray
    total: int

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise BadInputError("joint histogram must be square")
        object.__setattr__(self, "counts", c)

    @property
    def bins(self) -> int:
        return self.counts.shape[0]

    def marginal_x(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def marginal_y(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def bin_codes(values: np.ndarray, bins: int) -> np.ndarray:
    """Uniform [0, 1] binning; 1.0 lands in the top bin."""
    return np.minimum((np.asarray(values, dtype=float) * bins).astype(np.int64), bins - 1)


def _entropy_from_counts(counts: np.ndarray, total: int) -> float:
    # canonical (sorted) summation order makes entropy invariant to bin
    # relabeling, so MI symmetry holds bit-exactly
    p = np.sort(counts[counts > 0]) / total
    return float(-(p * np.log(p)).sum())


def build_joint_histogram(gi, lip: SparseRaster, bins: int = DEFAULT_BINS) -> JointHistogram:
    """Joint histogram of GI vs LIP values at the non-idle pixels."""
    if bins < 2:
        raise BadInputError("need at least 2 bins")
    values = gi.values if isinstance(gi, DenseImage) else np.asarray(gi, dtype=float)
    if values.shape != (lip.height, lip.width):
        raise DimensionMismatchError(
            f"grayscale is {values.shape[1]}x{values.shape[0]}, "
            f"raster is {lip.width}x{lip.height}"
        )
    x_codes = bin_codes(values.reshape(-1)[lip.pixels], bins)
    y_codes = bin_codes(lip.values, bins)
    counts = np.bincount(x_codes * bins + y_codes, minlength=bins * bins)
    return JointHistogram(counts.reshape(bins, bins), int(len(lip)))


def nid_from_codes(x_codes: np.ndarray, y_codes: np.ndarray, bins: int) -> float:
    """NID from pre-binned code pairs; the hot path shared with the objective."""
    total = x_codes.size
    if total == 0:
        return 1.0
    _, joint_counts = np.unique(x_codes * bins + y_codes, return_counts=True)
    h_xy = _entropy_from_counts(joint_counts, total)
    if h_xy == 0.0:
        return 1.0
    h_x = _entropy_from_counts(np.bincount(x_codes, minlength=bins), total)
    h_y = _entropy_from_counts(np.bincount(y_codes, minlength=bins), total)
    mutual = h_x + h_y - h_xy
    return min(max(1.0 - mutual / h_xy, 0.0), 1.0)


def nid(gi, lip: SparseRaster, bins: int = DEFAULT_BINS) -> float:
    """Normalized information distance between a grayscale image and a LIP."""
    if bins < 2:
        raise BadInputError("need at least 2 bins")
    values = gi.values if isinstance(gi, DenseImage) else np.asarray(gi, dtype=float)
    if values.shape != (lip.height, lip.width):
        raise DimensionMismatchError(
            f"grayscale is {values.shape[1]}x{values.shape[0]}, "
            f"raster is {lip.width}x{lip.height}"
        )
    x_codes = bin_codes(values.reshape(-1)[lip.pixels], bins)
    y_codes = bin_codes(lip.values, bins)
    return nid_from_codes(x_codes, y_codes, bins)
