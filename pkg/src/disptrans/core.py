"""Raster and model types shared by every stage of the pipeline.

Coordinates follow the usual disparity-map convention: ``u`` is the column
index (increasing to the right), ``v`` the row index (increasing downwards).
Arrays are stored row-major with shape ``(height, width)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import SizeError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DisparityImage:
    """Dense disparity raster with an explicit validity mask.

    ``sample_u``/``sample_v`` are optional sub-pixel positions of each stored
    sample in this raster's frame. They are ``None`` for maps whose samples sit
    on the pixel grid (anything read from disk or generated), and are filled in
    by :func:`disptrans.rotation.rotate_map`, which moves samples by
    nearest-neighbour lookup but remembers where each one really lands.
    """

    values: np.ndarray
    valid: np.ndarray
    sample_u: Optional[np.ndarray] = field(default=None)
    sample_v: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if values.ndim != 2 or values.size == 0:
            raise SizeError(f"disparity raster must be 2-D and nonempty, got shape {values.shape}")
        if valid.shape != values.shape:
            raise SizeError(f"mask shape {valid.shape} != values shape {values.shape}")
        valid = valid & np.isfinite(values)
        values = np.where(valid, values, np.nan)
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "valid", _frozen(valid))
        for name in ("sample_u", "sample_v"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=np.float64)
                if arr.shape != values.shape:
                    raise SizeError(f"{name} shape {arr.shape} != values shape {values.shape}")
                object.__setattr__(self, name, _frozen(arr))
        if (self.sample_u is None) != (self.sample_v is None):
            raise SizeError("sample_u and sample_v must be given together")

    @classmethod
    def from_array(cls, values, valid=None) -> "DisparityImage":
        """Wrap a 2-D array; non-finite entries are always treated as invalid."""
        values = np.asarray(values, dtype=np.float64)
        if valid is None:
            valid = np.isfinite(values)
        return cls(values, valid)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def center_u(self) -> float:
        return (self.width - 1) / 2.0

    @property
    def center_v(self) -> float:
        return (self.height - 1) / 2.0

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    def positions(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(u, v)`` grids of sample positions, exact when tracked."""
        if self.sample_u is not None:
            return self.sample_u, self.sample_v
        v, u = np.indices(self.shape, dtype=np.float64)
        return u, v

    def valid_samples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return flat ``(u, v, d)`` arrays for the valid samples only."""
        u, v = self.positions()
        m = self.valid
        return u[m], v[m], self.values[m]

    def with_values(self, values: np.ndarray, valid: Optional[np.ndarray] = None) -> "DisparityImage":
        """Copy with new values; sample positions are carried over."""
        return DisparityImage(values, self.valid if valid is None else valid,
                              self.sample_u, self.sample_v)

    def filled(self, fill: float = 0.0) -> np.ndarray:
        """Return a writable copy of the values with invalid pixels set to ``fill``."""
        return np.where(self.valid, self.values, fill)


def new_disparity_image(width: int, height: int, values: Sequence[float] | np.ndarray,
                        invalid_marker: Optional[float] = None) -> DisparityImage:
    """Build a :class:`DisparityImage` from a flat row-major sequence.

    Entries equal to ``invalid_marker`` and non-finite entries are flagged invalid.
    """
    if width < 1 or height < 1:
        raise SizeError(f"width and height must be >= 1, got {width}x{height}")
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    if arr.size != width * height:
        raise SizeError(f"expected {width * height} values for {width}x{height}, got {arr.size}")
    arr = arr.reshape(height, width)
    valid = np.isfinite(arr)
    if invalid_marker is not None:
        valid &= arr != invalid_marker
    return DisparityImage(arr, valid)


@dataclass(frozen=True)
class QuadraticRoadModel:
    """Vertical road profile ``d(v) = alpha0 + alpha1*v + alpha2*v**2``."""

    alpha0: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        for name in ("alpha0", "alpha1", "alpha2"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not all(np.isfinite([self.alpha0, self.alpha1, self.alpha2])):
            raise ValueError(f"non-finite road model coefficients {self.coefficients}")

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return (self.alpha0, self.alpha1, self.alpha2)

    def __call__(self, v):
        return evaluate_model(self, v)

    def shifted(self, offset: float) -> "QuadraticRoadModel":
        """Re-express the model in ``w = v + offset``, so ``new(w) == self(v)``.

        With ``offset = v_o`` a centre-relative model becomes an absolute-row one.
        """
        a0, a1, a2 = self.coefficients
        s = -offset
        return QuadraticRoadModel(a0 + a1 * s + a2 * s * s, a1 + 2.0 * a2 * s, a2)

    def to_dict(self) -> dict:
        return {"alpha0": self.alpha0, "alpha1": self.alpha1, "alpha2": self.alpha2}


def evaluate_model(model: QuadraticRoadModel, v):
    """Evaluate the parabola at row(s) ``v``."""
    return model.alpha0 + model.alpha1 * v + model.alpha2 * v * v


@dataclass(frozen=True)
class RollEstimate:
    """Result of the roll-angle search.

    ``iterations`` counts bracket shrinks; ``evaluations`` counts energy
    evaluations (scan points and bracket endpoints included). ``flat`` is set
    when the energy never varied, in which case ``gamma`` is the bracket
    midpoint and carries no information.
    """

    gamma: float
    e_min: float
    evaluations: int
    iterations: int
    trace: tuple[tuple[float, float], ...]
    flat: bool = False


@dataclass(frozen=True, eq=False)
class SegmentationMask:
    road: np.ndarray
    threshold: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "road", _frozen(np.asarray(self.road, dtype=bool)))

    @property
    def height(self) -> int:
        return self.road.shape[0]

    @property
    def width(self) -> int:
        return self.road.shape[1]
