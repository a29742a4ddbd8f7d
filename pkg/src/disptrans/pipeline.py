"""End-to-end road segmentation: roll, levelling, road model, transform, Otsu."""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import DisparityImage, QuadraticRoadModel, RollEstimate, SegmentationMask
from .errors import DisptransError
from .roadmodel import (OptimalPath, RansacConfig, RansacResult, extract_path_dp, ransac_fit,
                        refine_model_on_pixels)
from .rollest import GssConfig, estimate_roll_gss
from .rotation import rotate_map
from .transform import segment_road, transform_map
from .vdisparity import VDisparityHistogram, build_vdisparity


@dataclass
class PipelineConfig:
    """Every tunable of the pipeline, with its default.

    ==================  ===============  ==========================================
    key                 default          meaning
    ==================  ===============  ==========================================
    gamma_lo/gamma_hi   -pi/2, pi/2      roll search bracket (radians)
    tol                 pi/1800          search stops once the bracket is this narrow
    k                   0.618            golden section factor
    coarse_scan_steps   36               exhaustive pre-scan points (0: bare search)
    bin_width           1.0              v-disparity bin width (disparity units)
    smoothness          1.0              DP penalty per bin of jump between rows
    ransac_iterations   20               RANSAC hypotheses
    sample_size         3                samples per hypothesis
    inlier_tol          1.0              inlier band (disparity units)
    ransac_select       "largest"        keep the hypothesis with largest/smallest
                                         inlier ratio
    rng_seed            0                RANSAC seed
    refine_pixels       True             polish the road model on levelled pixels
    delta               30.0             offset added to transformed disparities
    otsu_bins           256              Otsu histogram bins
    min_contrast        1.0              residual spread below which all is road
    strict_segmentation False            threshold raw transformed values
    strict              False            non-convergence is an error (exit 4)
    ==================  ===============  ==========================================
    """

    gamma_lo: float = -math.pi / 2
    gamma_hi: float = math.pi / 2
    tol: float = math.pi / 1800
    k: float = 0.618
    coarse_scan_steps: int = 36
    bin_width: float = 1.0
    smoothness: float = 1.0
    ransac_iterations: int = 20
    sample_size: int = 3
    inlier_tol: float = 1.0
    ransac_select: str = "largest"
    rng_seed: int = 0
    refine_pixels: bool = True
    delta: float = 30.0
    otsu_bins: int = 256
    min_contrast: float = 1.0
    strict_segmentation: bool = False
    strict: bool = False

    @property
    def gss(self) -> GssConfig:
        return GssConfig(self.gamma_lo, self.gamma_hi, self.tol, self.k, self.coarse_scan_steps)

    @property
    def ransac(self) -> RansacConfig:
        return RansacConfig(self.ransac_iterations, self.sample_size, self.inlier_tol,
                            self.rng_seed, self.ransac_select)

    @classmethod
    def keys(cls) -> dict[str, type]:
        return {f.name: type(f.default) for f in dataclasses.fields(cls)}

    def updated(self, **overrides) -> "PipelineConfig":
        unknown = set(overrides) - set(self.keys())
        if unknown:
            raise KeyError(f"unknown config keys: {sorted(unknown)}")
        coerced = {}
        for key, value in overrides.items():
            kind = self.keys()[key]
            coerced[key] = kind(value) if kind is not bool else bool(value)
        return dataclasses.replace(self, **coerced)


class PipelineError(DisptransError):
    """A stage failed; ``stage`` names it and ``__cause__`` holds the original error."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    roll: RollEstimate
    rotated: DisparityImage
    histogram: VDisparityHistogram
    path: OptimalPath
    ransac: RansacResult
    model: QuadraticRoadModel
    transformed: DisparityImage
    mask: SegmentationMask
    timings: dict[str, float] = field(default_factory=dict)

    def report(self, cfg: PipelineConfig) -> dict:
        return {
            "schema": 1,
            "gamma_rad": self.roll.gamma,
            "gamma_deg": math.degrees(self.roll.gamma),
            "e_min": self.roll.e_min,
            "roll_iterations": self.roll.iterations,
            "roll_evaluations": self.roll.evaluations,
            "roll_flat": self.roll.flat,
            "alpha": list(self.model.coefficients),
            "alpha_ransac": list(self.ransac.model.coefficients),
            "ransac_eta": self.ransac.eta,
            "ransac_converged": self.ransac.converged,
            "path_entries": len(self.path),
            "delta": cfg.delta,
            "threshold": self.mask.threshold,
            "road_pixels": int(self.mask.road.sum()),
            "valid_pixels": self.transformed.n_valid,
            "timings_s": self.timings,
            "config": dataclasses.asdict(cfg),
        }


def run_pipeline(disp: DisparityImage, cfg: Optional[PipelineConfig] = None) -> PipelineResult:
    cfg = cfg or PipelineConfig()
    timings: dict[str, float] = {}
    out: dict = {}

    def stage(name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            out[name] = fn(*args, **kwargs)
        except DisptransError as exc:
            raise PipelineError(name, exc) from exc
        timings[name] = time.perf_counter() - t0
        return out[name]

    roll = stage("estimate_roll", estimate_roll_gss, disp, cfg.gss)
    rotated = stage("rotate", rotate_map, disp, roll.gamma)
    hist = stage("vdisparity", build_vdisparity, rotated, cfg.bin_width)
    path = stage("dp_path", extract_path_dp, hist, cfg.smoothness)
    fit = stage("ransac", ransac_fit, path, cfg.ransac, strict=cfg.strict)
    model = fit.model
    if cfg.refine_pixels:
        model, _ = stage("refine_pixels", refine_model_on_pixels, rotated, model, cfg.inlier_tol)
    trf = stage("transform", transform_map, rotated, model, roll.gamma, cfg.delta)
    mask = stage("segment", segment_road, trf, cfg.delta, cfg.otsu_bins,
                 min_contrast=cfg.min_contrast, strict=cfg.strict_segmentation)
    timings["total"] = float(np.sum(list(timings.values())))
    return PipelineResult(roll, rotated, hist, path, fit, model, trf, mask, timings)
