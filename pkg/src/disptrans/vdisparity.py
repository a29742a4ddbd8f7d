"""v-disparity histograms: one row of disparity votes per image row."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DisparityImage
from .errors import EmptyInputError


@dataclass(frozen=True, eq=False)
class VDisparityHistogram:
    counts: np.ndarray  # (rows, bins) int64
    bin_width: float
    d_min: float

    @property
    def rows(self) -> int:
        return self.counts.shape[0]

    @property
    def bins(self) -> int:
        return self.counts.shape[1]

    def bin_of(self, d):
        """Bin index of disparity ``d``, clamped to the histogram range."""
        idx = np.floor((np.asarray(d, dtype=np.float64) - self.d_min) / self.bin_width)
        return np.clip(idx, 0, self.bins - 1).astype(np.intp)

    def bin_center(self, b):
        return self.d_min + (np.asarray(b) + 0.5) * self.bin_width

    @property
    def d_max(self) -> float:
        return self.d_min + self.bins * self.bin_width

    def row_spread(self) -> np.ndarray:
        """Per row, ``max occupied bin - min occupied bin`` (-1 for empty rows)."""
        occupied = self.counts > 0
        any_ = occupied.any(axis=1)
        first = np.argmax(occupied, axis=1)
        last = self.bins - 1 - np.argmax(occupied[:, ::-1], axis=1)
        return np.where(any_, last - first, -1)


def build_vdisparity(disp: DisparityImage, bin_width: float = 1.0) -> VDisparityHistogram:
    """Histogram the valid disparities of each raster row.

    Bin 0 starts at the minimum valid disparity floored to a multiple of
    ``bin_width``; bins extend just far enough to hold the maximum.
    """
    if not bin_width > 0:
        raise ValueError(f"bin_width must be > 0, got {bin_width}")
    if disp.n_valid == 0:
        raise EmptyInputError("disparity map has no valid pixels")
    d = disp.values[disp.valid]
    d_min = math.floor(d.min() / bin_width) * bin_width
    bins = int(math.floor((d.max() - d_min) / bin_width)) + 1
    hist = VDisparityHistogram(np.zeros((disp.height, bins), dtype=np.int64), bin_width, d_min)

    rows = np.nonzero(disp.valid)[0]
    flat = rows * bins + hist.bin_of(d)
    counts = np.bincount(flat, minlength=disp.height * bins).reshape(disp.height, bins)
    return VDisparityHistogram(counts, float(bin_width), float(d_min))
