"""Roll-angle estimation, disparity transformation and road segmentation for dense disparity maps."""

from .core import (DisparityImage, QuadraticRoadModel, RollEstimate, SegmentationMask,
                   evaluate_model, new_disparity_image)
from .errors import (DegenerateGeometryError, DegenerateHistogramError, DisptransError,
                     EmptyInputError, InsufficientDataError, NonConvergenceError,
                     RasterFormatError, SizeError, UnderdeterminedError)
from .pipeline import PipelineConfig, PipelineResult, run_pipeline
from .roadmodel import (OptimalPath, RansacConfig, extract_path_dp, ransac_fit, ransac_parabola,
                        refine_model_on_pixels)
from .rollest import GssConfig, energy_at_gamma, estimate_roll_gss, scan_energy_curve
from .rotation import rotate_coords, rotate_map
from .synth import (Inset, SweepReport, SyntheticSpec, add_noise, generate_ground_truth,
                    ground_truth_labels, run_accuracy_sweep)
from .transform import otsu_threshold, segment_road, transform_map
from .vdisparity import VDisparityHistogram, build_vdisparity

__version__ = "0.1.0"

__all__ = [
    "DisparityImage", "QuadraticRoadModel", "RollEstimate", "SegmentationMask", "evaluate_model",
    "new_disparity_image", "DegenerateGeometryError", "DegenerateHistogramError", "DisptransError",
    "EmptyInputError", "InsufficientDataError", "NonConvergenceError", "RasterFormatError",
    "SizeError", "UnderdeterminedError", "PipelineConfig", "PipelineResult", "run_pipeline",
    "OptimalPath", "RansacConfig", "extract_path_dp", "ransac_fit", "ransac_parabola",
    "refine_model_on_pixels", "GssConfig", "energy_at_gamma", "estimate_roll_gss",
    "scan_energy_curve", "rotate_coords", "rotate_map", "Inset", "SweepReport", "SyntheticSpec",
    "add_noise", "generate_ground_truth", "ground_truth_labels", "run_accuracy_sweep",
    "otsu_threshold", "segment_road", "transform_map", "VDisparityHistogram", "build_vdisparity",
]
