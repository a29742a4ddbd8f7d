"""Roll-angle estimation.

The map is rotated (in coordinates only) by a candidate angle, a parabola in
the rotated row coordinate is fitted to every valid disparity by least squares,
and the RMS residual of that fit is the energy of the angle. The roll angle is
the angle of least energy, found by golden section search, optionally after a
coarse exhaustive scan that brackets the global minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DisparityImage, QuadraticRoadModel, RollEstimate
from .errors import DegenerateGeometryError, UnderdeterminedError

GOLDEN_K = 0.618


@dataclass(frozen=True)
class GssConfig:
    gamma_lo: float = -math.pi / 2
    gamma_hi: float = math.pi / 2
    tol: float = math.pi / 1800
    k: float = GOLDEN_K
    coarse_scan_steps: int = 36

    def __post_init__(self):
        if not self.gamma_lo < self.gamma_hi:
            raise ValueError(f"empty search bracket ({self.gamma_lo}, {self.gamma_hi}]")
        if not 0.5 < self.k < 1:
            raise ValueError(f"golden section factor must lie in (0.5, 1), got {self.k}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.coarse_scan_steps < 0:
            raise ValueError("coarse_scan_steps must be >= 0")

    @property
    def spans_period(self) -> bool:
        return math.isclose(self.gamma_hi - self.gamma_lo, math.pi, rel_tol=1e-12)


class RoadEnergy:
    """Least-squares road-profile energy of one disparity map as a function of angle.

    Sample positions are extracted once, so repeated evaluation (as inside the
    search) only costs a handful of vector passes over the valid pixels.
    """

    def __init__(self, disp: DisparityImage):
        u, v, d = disp.valid_samples()
        if d.size < 3:
            raise UnderdeterminedError(f"need >= 3 valid pixels to fit a parabola, got {d.size}")
        self.du = u - disp.center_u
        self.dv = v - disp.center_v
        self.d_mean = float(d.mean())
        self.dc = d - self.d_mean
        self.n = d.size
        # |v'| never exceeds the distance to the centre; fixed so E(g) and E(g+pi) scale alike
        self.scale = float(np.sqrt(self.du * self.du + self.dv * self.dv).max())
        if self.scale == 0:
            raise DegenerateGeometryError("all valid samples sit at the raster centre")

    def rotated_rows(self, gamma: float) -> np.ndarray:
        """Centre-relative rotated row coordinate ``v'`` of every valid sample."""
        return self.dv * math.cos(gamma) - self.du * math.sin(gamma)

    def fit(self, gamma: float) -> tuple[float, QuadraticRoadModel]:
        """Return ``(E, model)``; the model is expressed in centre-relative ``v'``."""
        t = self.rotated_rows(gamma) * (1.0 / self.scale)
        t2 = t * t
        m1 = t.mean()
        m2 = t2.mean()
        c1 = t - m1
        c2 = t2 - m2
        g11 = c1 @ c1
        g12 = c1 @ c2
        g22 = c2 @ c2
        r1 = c1 @ self.dc
        r2 = c2 @ self.dc
        det = g11 * g22 - g12 * g12
        if not det > 1e-10 * g11 * g22:
            raise DegenerateGeometryError(
                f"normal equations are singular at gamma={gamma:.6g} (samples on fewer than 3 rows)")
        b1 = (r1 * g22 - r2 * g12) / det
        b2 = (r2 * g11 - r1 * g12) / det
        resid = self.dc - b1 * c1 - b2 * c2
        energy = math.sqrt(float(resid @ resid) / self.n)
        s = self.scale
        model = QuadraticRoadModel(self.d_mean - b1 * m1 - b2 * m2, b1 / s, b2 / (s * s))
        return energy, model

    def __call__(self, gamma: float) -> float:
        return self.fit(gamma)[0]


def energy_at_gamma(disp: DisparityImage, gamma: float) -> tuple[float, QuadraticRoadModel]:
    """RMS residual of the best parabola in the rotated row coordinate, and that parabola.

    The model is centre-relative; ``model.shifted(disp.center_v)`` converts it to
    absolute rows of the map rotated by ``gamma``.
    """
    return RoadEnergy(disp).fit(gamma)


def scan_grid(lo: float, hi: float, step: float) -> np.ndarray:
    """Angles ``lo + step, lo + 2*step, ...`` up to ``hi`` (interval open at ``lo``)."""
    if not step > 0:
        raise ValueError(f"step must be > 0, got {step}")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(1, n + 1)


def scan_energy_curve(disp: DisparityImage, step: float,
                      lo: float = -math.pi / 2, hi: float = math.pi / 2) -> list[tuple[float, float]]:
    """Exhaustively evaluate the energy over ``(lo, hi]`` at the given step."""
    energy = RoadEnergy(disp)
    return [(float(g), energy(g)) for g in scan_grid(lo, hi, step)]


def count_gss_iterations(width: float, tol: float, k: float = GOLDEN_K) -> int:
    """Number of bracket shrinks the search performs on a bracket of ``width``."""
    n = 0
    g1, g2 = 0.0, width
    while g2 - g1 > tol:
        g2 = k * g2 + (1 - k) * g1
        n += 1
    return n


def _wrap(gamma: float, cfg: GssConfig) -> float:
    if cfg.spans_period:
        while gamma <= cfg.gamma_lo:
            gamma += math.pi
        while gamma > cfg.gamma_hi:
            gamma -= math.pi
    return gamma


def estimate_roll_gss(disp: DisparityImage, cfg: GssConfig = GssConfig()) -> RollEstimate:
    """Estimate the roll angle by golden section search on the road energy.

    Each iteration probes ``g3 = k*g1 + (1-k)*g2`` and ``g4 = k*g2 + (1-k)*g1``
    and keeps ``[g3, g2]`` if ``E(g3) > E(g4)``, else ``[g1, g4]``, until the
    bracket is no wider than ``cfg.tol``. Both probes are evaluated afresh every
    iteration. The returned angle is the best point probed anywhere in the
    search, not the bracket midpoint.
    """
    energy = RoadEnergy(disp)
    trace: list[tuple[float, float]] = []

    def probe(g: float) -> float:
        e = energy(g)
        trace.append((float(g), e))
        return e

    g1, g2 = cfg.gamma_lo, cfg.gamma_hi
    if cfg.coarse_scan_steps > 0:
        h = (g2 - g1) / cfg.coarse_scan_steps
        grid = scan_grid(g1, g2, h)
        i = int(np.argmin([probe(g) for g in grid]))
        g1, g2 = grid[i] - h, grid[i] + h
        if not cfg.spans_period:
            g1, g2 = max(g1, cfg.gamma_lo), min(g2, cfg.gamma_hi)

    # bracket endpoints; only recorded, the loop never reads them
    probe(g1)
    probe(g2)

    k = cfg.k
    iterations = 0
    while g2 - g1 > cfg.tol:
        g3 = k * g1 + (1 - k) * g2
        g4 = k * g2 + (1 - k) * g1
        if probe(g3) > probe(g4):
            g1 = g3
        else:
            g2 = g4
        iterations += 1

    es = np.array([e for _, e in trace])
    e_hi = float(es.max())
    if e_hi - float(es.min()) <= 1e-12 + 1e-9 * e_hi:
        mid = 0.5 * (cfg.gamma_lo + cfg.gamma_hi)
        return RollEstimate(mid, energy(mid), len(trace) + 1, iterations, tuple(trace), flat=True)

    best = int(np.argmin(es))
    gamma, e_min = trace[best]
    return RollEstimate(_wrap(gamma, cfg), e_min, len(trace), iterations, tuple(trace))
