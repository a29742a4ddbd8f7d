"""Diagnostic figures written next to the CSV/JSON reports.

Everything renders off-screen (Agg) straight to a file.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .raster_io import atomic_write  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 120,
    "figure.figsize": (6.0, 3.7),
}

ROAD_RGB = (148, 0, 211)  # violet


def _save(fig, path):
    with atomic_write(path) as fh:
        fig.savefig(fh, format="png", bbox_inches="tight")
    plt.close(fig)


def plot_energy_curve(curve, path, estimate=None):
    """Fit energy against candidate roll angle (degrees)."""
    g = np.degrees([c[0] for c in curve])
    e = np.array([c[1] for c in curve])
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(g, e, lw=1.2, color="k")
        if estimate is not None:
            ax.axvline(math.degrees(estimate.gamma), color="tab:red", ls="--", lw=1,
                       label=f"estimate {math.degrees(estimate.gamma):.4f} deg")
            ax.legend(loc="upper right")
        ax.set_xlabel("roll angle (deg)")
        ax.set_ylabel("minimum fit energy")
        _save(fig, path)


def plot_sweep(report, path):
    """Absolute roll error against true roll angle for an accuracy sweep."""
    recs = [r for r in report.records if r.ok]
    g = np.degrees([r.gamma_true for r in recs])
    err = np.degrees([r.epsilon for r in recs])
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(g, err, marker="o", ms=3, lw=0.8)
        ax.set_xlabel("true roll angle (deg)")
        ax.set_ylabel("absolute error (deg)")
        ax.set_title(f"mean {math.degrees(report.mean_error):.2e} deg, "
                     f"max {math.degrees(report.max_error):.2e} deg")
        _save(fig, path)


def plot_vdisparity(hist, path, opt_path=None, model=None):
    """Log-scaled v-disparity histogram with the optimal path and fitted profile."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.0, 5.0))
        extent = (hist.d_min, hist.d_max, hist.rows - 0.5, -0.5)
        ax.imshow(np.log1p(hist.counts), cmap="gray_r", aspect="auto", extent=extent,
                  interpolation="nearest")
        if opt_path is not None and len(opt_path):
            ax.plot(opt_path.d, opt_path.v, ".", ms=1.5, color="tab:blue", label="DP path")
        if model is not None:
            v = np.arange(hist.rows)
            ax.plot(model(v), v, lw=1, color="tab:red", label="road model")
        if opt_path is not None or model is not None:
            ax.legend(loc="lower right")
        ax.set_xlim(hist.d_min, hist.d_max)
        ax.set_xlabel("disparity")
        ax.set_ylabel("row v")
        ax.grid(False)
        _save(fig, path)


def overlay_rgb(disp, mask, alpha=0.5) -> np.ndarray:
    """Grayscale disparity rendering with the road mask blended in violet."""
    gray = np.zeros(disp.shape)
    if disp.n_valid:
        d = disp.values[disp.valid]
        lo, hi = np.percentile(d, [1, 99])
        gray[disp.valid] = np.clip((d - lo) / max(hi - lo, 1e-12), 0, 1)
    rgb = np.repeat((gray * 255)[..., None], 3, axis=2)
    road = np.asarray(mask, dtype=bool)
    rgb[road] = (1 - alpha) * rgb[road] + alpha * np.array(ROAD_RGB, dtype=np.float64)
    return np.round(rgb).astype(np.uint8)
