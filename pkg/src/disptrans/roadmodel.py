"""Road-profile estimation from a v-disparity histogram.

A dynamic-programming pass picks one disparity bin per row (the optimal path),
then RANSAC fits the quadratic road model to that path and refines it by
repeatedly discarding outliers and refitting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DisparityImage, QuadraticRoadModel
from .errors import DegenerateHistogramError, InsufficientDataError, NonConvergenceError
from .vdisparity import VDisparityHistogram

MAX_REFINEMENTS = 100


@dataclass(frozen=True)
class OptimalPath:
    v: np.ndarray  # int rows, strictly increasing
    d: np.ndarray
    energy: float

    def __len__(self):
        return len(self.v)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return [(int(a), float(b)) for a, b in zip(self.v, self.d)]


def _l1_envelope(acc: np.ndarray, smoothness: float, idx: np.ndarray) -> np.ndarray:
    """``out[b] = min_b' acc[b'] + smoothness * |b - b'|`` in O(bins)."""
    if smoothness == 0:
        return np.full_like(acc, acc.min())
    ramp = smoothness * idx
    left = np.minimum.accumulate(acc - ramp) + ramp
    right = np.minimum.accumulate((acc + ramp)[::-1])[::-1] - ramp
    return np.minimum(left, right)


def extract_path_dp(hist: VDisparityHistogram, smoothness: float = 1.0) -> OptimalPath:
    """Minimum-energy row-by-row bin sequence through the histogram.

    Energy of a sequence ``b_0..b_{R-1}`` is
    ``sum_v -counts[v, b_v] + smoothness * sum_v |b_v - b_{v+1}|``; the DP runs
    from the bottom row up and backtracks from the top. Rows whose chosen bin
    holds no votes are left out of the returned entries (they carry no data)
    but still count towards the energy.
    """
    if smoothness < 0:
        raise ValueError(f"smoothness must be >= 0, got {smoothness}")
    counts = hist.counts
    if counts.size == 0 or not counts.any():
        raise DegenerateHistogramError("v-disparity histogram holds no votes")
    rows, bins = counts.shape
    idx = np.arange(bins, dtype=np.float64)
    cost = -counts.astype(np.float64)

    acc = np.empty_like(cost)
    acc[-1] = cost[-1]
    for v in range(rows - 2, -1, -1):
        acc[v] = cost[v] + _l1_envelope(acc[v + 1], smoothness, idx)

    path = np.empty(rows, dtype=np.intp)
    path[0] = int(np.argmin(acc[0]))
    for v in range(1, rows):
        path[v] = int(np.argmin(acc[v] + smoothness * np.abs(idx - path[v - 1])))

    r = np.arange(rows)
    keep = counts[r, path] > 0
    return OptimalPath(r[keep], hist.bin_center(path[keep]).astype(np.float64), float(acc[0].min()))


def path_energy(hist: VDisparityHistogram, bins_per_row, smoothness: float) -> float:
    """Objective value of an explicit bin sequence (one bin per histogram row)."""
    b = np.asarray(bins_per_row)
    votes = hist.counts[np.arange(hist.rows), b].sum()
    return float(-votes + smoothness * np.abs(np.diff(b)).sum())


def fit_parabola(v, d) -> QuadraticRoadModel:
    """Least-squares parabola through ``(v, d)``; exact interpolation for 3 points."""
    v = np.asarray(v, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if v.size < 3 or np.unique(v).size < 3:
        raise InsufficientDataError(f"need samples on >= 3 distinct rows, got {np.unique(v).size}")
    # centre and scale v so the Vandermonde system stays well conditioned
    c = v.mean()
    s = max(np.abs(v - c).max(), 1.0)
    x = (v - c) / s
    a = np.stack([np.ones_like(x), x, x * x], axis=1)
    if v.size == 3:
        b = np.linalg.solve(a, d)
    else:
        b = np.linalg.lstsq(a, d, rcond=None)[0]
    scaled = QuadraticRoadModel(b[0], b[1] / s, b[2] / (s * s))
    return scaled.shifted(c)


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 20
    sample_size: int = 3
    inlier_tol: float = 1.0
    rng_seed: int = 0
    select: str = "largest"  # or "smallest": keep the hypothesis with the lowest inlier ratio

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("RANSAC needs at least one iteration")
        if self.sample_size < 3:
            raise ValueError("a parabola needs at least 3 samples")
        if not self.inlier_tol > 0:
            raise ValueError("inlier_tol must be > 0")
        if self.select not in ("largest", "smallest"):
            raise ValueError(f"select must be 'largest' or 'smallest', got {self.select!r}")


@dataclass(frozen=True)
class RansacResult:
    model: QuadraticRoadModel
    inliers: np.ndarray  # bool over the input path entries
    eta: float  # inlier ratio of the selected hypothesis
    refinements: int
    converged: bool
    hypotheses: tuple[tuple[QuadraticRoadModel, float], ...]


def _residual(model: QuadraticRoadModel, v, d):
    return np.abs(d - model(v))


def ransac_fit(path: OptimalPath, cfg: RansacConfig = RansacConfig(), strict: bool = False) -> RansacResult:
    """RANSAC parabola fit followed by iterative outlier removal.

    ``strict`` turns a refinement that fails to settle into
    :class:`NonConvergenceError` instead of a ``converged=False`` result.
    """
    v = np.asarray(path.v, dtype=np.float64)
    d = np.asarray(path.d, dtype=np.float64)
    n = v.size
    t = cfg.sample_size
    if n < t:
        raise InsufficientDataError(f"path has {n} entries, RANSAC needs >= {t}")

    rng = np.random.default_rng(cfg.rng_seed)
    hypotheses: list[tuple[QuadraticRoadModel, float]] = []
    retries = 0
    while len(hypotheses) < cfg.iterations:
        pick = rng.choice(n, size=t, replace=False)
        if np.unique(v[pick]).size < 3:
            retries += 1
            if retries > 10 * cfg.iterations:
                raise InsufficientDataError("could not draw a non-degenerate sample")
            continue
        model = fit_parabola(v[pick], d[pick])
        eta = float(np.count_nonzero(_residual(model, v, d) <= cfg.inlier_tol)) / n
        hypotheses.append((model, eta))

    etas = np.array([e for _, e in hypotheses])
    best = int(np.argmax(etas) if cfg.select == "largest" else np.argmin(etas))
    model, eta = hypotheses[best]

    keep = np.ones(n, dtype=bool)
    prev_out = n + 1
    converged = False
    refinements = 0
    best_state, best_eta = (model, keep.copy()), -1.0
    while refinements < MAX_REFINEMENTS:
        out = keep & (_residual(model, v, d) > cfg.inlier_tol)
        n_out = int(out.sum())
        if n_out > prev_out:  # removal is making things worse; stop rather than loop
            break
        keep &= ~out
        if np.unique(v[keep]).size < 3:
            break
        model = fit_parabola(v[keep], d[keep])
        refinements += 1
        prev_out = n_out
        full_eta = float(np.count_nonzero(_residual(model, v, d) <= cfg.inlier_tol)) / n
        if full_eta > best_eta:
            best_state, best_eta = (model, keep.copy()), full_eta
        if n_out == 0:
            converged = True
            break

    if not converged:
        if strict:
            raise NonConvergenceError(f"outlier removal did not settle after {refinements} refits")
        model, keep = best_state
    return RansacResult(model, keep, eta, refinements, converged, tuple(hypotheses))


def ransac_parabola(path: OptimalPath, cfg: RansacConfig = RansacConfig()) -> QuadraticRoadModel:
    """Quadratic road model fitted robustly to the optimal path."""
    return ransac_fit(path, cfg).model


def refine_model_on_pixels(rotated: DisparityImage, model: QuadraticRoadModel, tol: float = 1.0,
                           max_rounds: int = 20) -> tuple[QuadraticRoadModel, Optional[np.ndarray]]:
    """Polish a road model against the individual pixels of the levelled map.

    Pixels within ``tol`` of the current model (evaluated at each sample's
    exact row) are refitted by least squares until the inlier set stops
    changing. Returns the polished model and the final inlier mask over the
    raster; the input model is returned unchanged if too few pixels agree.
    """
    _, sv, d = rotated.valid_samples()
    inl = None
    for _ in range(max_rounds):
        new = np.abs(d - model(sv)) <= tol
        if inl is not None and np.array_equal(new, inl):
            break
        if np.unique(sv[new]).size < 3:
            return model, None
        inl = new
        model = fit_parabola(sv[inl], d[inl])
    mask = np.zeros(rotated.shape, dtype=bool)
    if inl is not None:
        mask[rotated.valid] = inl
    return model, mask
