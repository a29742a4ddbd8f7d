"""Disparity transformation and Otsu road segmentation."""

from __future__ import annotations

import numpy as np

from .core import DisparityImage, QuadraticRoadModel, SegmentationMask
from .errors import DegenerateHistogramError, EmptyInputError
from .rotation import rotate_map

DELTA = 30.0


def transform_map(rotated: DisparityImage, model: QuadraticRoadModel, gamma: float,
                  delta: float = DELTA) -> DisparityImage:
    """Flatten the road: ``d -> d - d(v) + delta`` in the levelled frame, then rotate back.

    ``rotated`` is the original map after ``rotate_map(original, gamma)`` and
    ``model`` is expressed in its absolute rows. The road profile is evaluated at
    each sample's exact row in the levelled frame (its integer row when
    positions are not tracked). Negative results are kept as they are.
    """
    _, sv = rotated.positions()
    updated = rotated.with_values(np.where(rotated.valid, rotated.values - model(sv) + delta, np.nan))
    return rotate_map(updated, -gamma)


def _edges(lo: float, hi: float, bins: int) -> np.ndarray:
    return lo + (hi - lo) / bins * np.arange(bins + 1)


def otsu_threshold(values, bins: int = 256) -> float:
    """Otsu threshold of a 1-D population.

    Values are binned into ``bins`` equal-width bins over ``[min, max]``; each
    interior bin edge ``e`` splits the population into ``x < e`` and ``x >= e``,
    and the edge maximising ``w0*w1*(mu0 - mu1)**2`` (class means taken over
    the actual values) is returned. Ties go to the lower edge.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if x.size < 2 or not np.isfinite(x).all():
        raise DegenerateHistogramError("Otsu needs at least two finite values")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        raise DegenerateHistogramError("Otsu needs at least two distinct values")
    edges = _edges(lo, hi, bins)
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, bins - 1)
    cnt = np.bincount(idx, minlength=bins).astype(np.float64)
    sm = np.bincount(idx, weights=x, minlength=bins)

    n0 = np.cumsum(cnt)[:-1]
    s0 = np.cumsum(sm)[:-1]
    n1 = np.cumsum(cnt[::-1])[::-1][1:]
    s1 = np.cumsum(sm[::-1])[::-1][1:]
    ok = (n0 > 0) & (n1 > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        var = (n0 / x.size) * (n1 / x.size) * (s0 / n0 - s1 / n1) ** 2
    var = np.where(ok, var, -np.inf)
    k = int(np.argmax(var))
    return float(edges[k + 1])


def segment_road(trf: DisparityImage, delta: float = DELTA, bins: int = 256,
                 min_contrast: float = 0.0, strict: bool = False) -> SegmentationMask:
    """Binary road mask of a transformed map.

    The default thresholds the residual ``|d - delta|`` and calls the
    low-residual Otsu class road, so both obstacles (above ``delta``) and
    potholes (below) are rejected. ``strict`` thresholds the transformed values
    themselves and keeps the class that contains ``delta``.

    If every residual is below ``min_contrast`` the population has nothing to
    separate and all valid pixels are road.
    """
    if trf.n_valid == 0:
        raise EmptyInputError("transformed map has no valid pixels")
    d = trf.values[trf.valid]
    road = np.zeros(trf.shape, dtype=bool)
    if strict:
        thr = otsu_threshold(d, bins)
        road[trf.valid] = (d < thr) if delta < thr else (d >= thr)
        return SegmentationMask(road, thr)

    r = np.abs(d - delta)
    if r.max() <= min_contrast:
        road[trf.valid] = True
        return SegmentationMask(road, float("inf"))
    thr = otsu_threshold(r, bins)
    road[trf.valid] = r < thr
    return SegmentationMask(road, thr)
