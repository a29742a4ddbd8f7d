"""Synthetic ground-truth disparity maps and roll-accuracy sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import DisparityImage, QuadraticRoadModel
from .rollest import GssConfig, estimate_roll_gss
from .rotation import rotate_coords

log = logging.getLogger(__name__)

REFERENCE_MODEL = QuadraticRoadModel(100.0, 0.3, 0.1)


@dataclass(frozen=True)
class Inset:
    """Axis-aligned region of the level road, ``u0 <= u < u1``, ``v0 <= v < v1``,
    whose disparity is offset by ``offset`` (negative: pothole, positive: obstacle)."""

    u0: float
    v0: float
    u1: float
    v1: float
    offset: float

    def contains(self, u, v):
        return (u >= self.u0) & (u < self.u1) & (v >= self.v0) & (v < self.v1)


@dataclass(frozen=True)
class SyntheticSpec:
    width: int = 640
    height: int = 480
    model: QuadraticRoadModel = REFERENCE_MODEL
    gamma: float = 0.0
    kappa: float = 0.0
    seed: int = 0
    insets: tuple[Inset, ...] = ()
    noise: str = "uniform"
    quantize: Optional[float] = None

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ValueError(f"synthetic maps must be at least 8x8, got {self.width}x{self.height}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.noise not in ("uniform", "gaussian"):
            raise ValueError(f"unknown noise mode {self.noise!r}")


def _level_positions(spec: SyntheticSpec):
    """Where each pixel of the rolled map sits on the level (roll-free) road, and
    whether that position is inside the frame."""
    v, u = np.indices((spec.height, spec.width), dtype=np.float64)
    cu, cv = (spec.width - 1) / 2.0, (spec.height - 1) / 2.0
    lu, lv = rotate_coords(u, v, cu, cv, spec.gamma)
    lu += cu
    lv += cv
    inside = (lu >= -0.5) & (lu < spec.width - 0.5) & (lv >= -0.5) & (lv < spec.height - 0.5)
    return lu, lv, inside


def generate_ground_truth(spec: SyntheticSpec) -> DisparityImage:
    """Noiseless disparity map of a parabolic road seen with roll ``spec.gamma``.

    Every pixel is evaluated analytically at its exact position on the level
    road, so rotating the result by ``spec.gamma`` (coordinates or raster)
    makes every row constant up to the insets. Pixels whose level position
    falls outside the frame are invalid (the rotated-away corners).
    """
    lu, lv, inside = _level_positions(spec)
    values = spec.model(lv)
    for inset in spec.insets:
        values = values + np.where(inset.contains(lu, lv), inset.offset, 0.0)
    if spec.quantize:
        values = np.round(values / spec.quantize) * spec.quantize
    return DisparityImage(np.where(inside, values, np.nan), inside)


def ground_truth_labels(spec: SyntheticSpec) -> np.ndarray:
    """Boolean road mask matching :func:`generate_ground_truth` (valid and in no inset)."""
    lu, lv, inside = _level_positions(spec)
    road = inside.copy()
    for inset in spec.insets:
        road &= ~inset.contains(lu, lv)
    return road


def add_noise(disp: DisparityImage, kappa: float, seed: int, mode: str = "uniform") -> DisparityImage:
    """Perturb every valid pixel by ``kappa * w``.

    ``mode="uniform"`` draws ``w`` uniformly from [-1, 1]; ``mode="gaussian"``
    draws it from a normal with standard deviation 1/3.
    """
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if kappa == 0:
        return disp
    rng = np.random.default_rng(seed)
    if mode == "uniform":
        w = rng.uniform(-1.0, 1.0, size=disp.shape)
    elif mode == "gaussian":
        w = rng.normal(0.0, 1.0 / 3.0, size=disp.shape)
    else:
        raise ValueError(f"unknown noise mode {mode!r}")
    return disp.with_values(np.where(disp.valid, disp.values + kappa * w, np.nan))


def render(spec: SyntheticSpec) -> DisparityImage:
    """Ground truth plus the noise described by ``spec``."""
    return add_noise(generate_ground_truth(spec), spec.kappa, spec.seed, spec.noise)


def sweep_angles(n: int = 65) -> np.ndarray:
    return np.linspace(-math.pi / 4, math.pi / 4, n)


@dataclass
class SweepRecord:
    gamma_true: float
    gamma_est: float = float("nan")
    epsilon: float = float("nan")
    e_min: float = float("nan")
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepReport:
    records: list[SweepRecord] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.epsilon for r in self.records if r.ok])

    @property
    def mean_error(self) -> float:
        e = self.errors
        return float(e.mean()) if e.size else float("nan")

    @property
    def max_error(self) -> float:
        e = self.errors
        return float(e.max()) if e.size else float("nan")

    @property
    def n_failed(self) -> int:
        return sum(not r.ok for r in self.records)

    def to_dict(self) -> dict:
        return {
            "mean_error_rad": self.mean_error,
            "max_error_rad": self.max_error,
            "mean_error_deg": math.degrees(self.mean_error),
            "max_error_deg": math.degrees(self.max_error),
            "n_angles": len(self.records),
            "n_failed": self.n_failed,
            "seconds": self.seconds,
            "records": [vars(r) for r in self.records],
        }


def run_accuracy_sweep(base: SyntheticSpec, gammas: Sequence[float],
                       gss: GssConfig = GssConfig()) -> SweepReport:
    """Roll the synthetic road by each angle, estimate it back, record the error.

    Each angle gets its own noise stream derived from ``base.seed``. Failures
    are recorded on the entry and do not stop the sweep.
    """
    import time

    t0 = time.perf_counter()
    seeds = np.random.SeedSequence(base.seed).generate_state(len(gammas))
    report = SweepReport()
    for g, s in zip(gammas, seeds):
        rec = SweepRecord(float(g))
        try:
            disp = render(replace(base, gamma=float(g), seed=int(s)))
            est = estimate_roll_gss(disp, gss)
            rec.gamma_est = est.gamma
            rec.e_min = est.e_min
            rec.epsilon = abs(rec.gamma_true - est.gamma)
        except Exception as exc:  # keep sweeping; the entry carries the failure
            log.warning("sweep entry gamma=%.6f failed: %s", g, exc)
            rec.error = f"{type(exc).__name__}: {exc}"
        report.records.append(rec)
    report.seconds = time.perf_counter() - t0
    return report
