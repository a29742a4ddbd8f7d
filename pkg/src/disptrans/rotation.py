"""Rotation of pixel coordinates and of whole disparity rasters about the raster centre."""

from __future__ import annotations

import numpy as np

from .core import DisparityImage


def rotate_coords(u, v, center_u, center_v, gamma):
    """Rotate ``(u, v)`` by ``gamma`` about ``(center_u, center_v)``.

    Returns centre-relative ``(u', v')``::

        u' = (u - u_o) cos g + (v - v_o) sin g
        v' = (v - v_o) cos g - (u - u_o) sin g

    Works elementwise on arrays.
    """
    c, s = np.cos(gamma), np.sin(gamma)
    du = np.subtract(u, center_u)
    dv = np.subtract(v, center_v)
    return du * c + dv * s, dv * c - du * s


def _nearest(x):
    # round half up; np.rint rounds half to even which is asymmetric about the centre
    return np.floor(x + 0.5).astype(np.intp)


def source_indices(shape, gamma):
    """For each destination pixel of a raster rotated by ``gamma``, the source pixel.

    Returns ``(rows, cols, inside)``: nearest-neighbour source indices obtained by
    inverse-rotating every destination pixel, and a mask of those that land
    inside the source raster. Out-of-frame indices are clipped to 0 and must be
    ignored by the caller.
    """
    h, w = shape
    cu, cv = (w - 1) / 2.0, (h - 1) / 2.0
    vd, ud = np.indices(shape, dtype=np.float64)
    # inverse rotation == forward rotation by -gamma
    xs, ys = rotate_coords(ud, vd, cu, cv, -gamma)
    cols = _nearest(xs + cu)
    rows = _nearest(ys + cv)
    inside = (cols >= 0) & (cols < w) & (rows >= 0) & (rows < h)
    return np.where(inside, rows, 0), np.where(inside, cols, 0), inside


def rotate_map(disp: DisparityImage, gamma: float) -> DisparityImage:
    """Rotate a disparity raster by ``gamma`` with nearest-neighbour inverse mapping.

    The output keeps the input dimensions. The pixel at rotated coordinate
    ``(u', v')`` receives the disparity found at the inverse-rotated source
    location; destinations whose source falls outside the raster or on an
    invalid pixel become invalid. Disparity values are copied, never rescaled.

    Each output sample also records its exact rotated position
    (``sample_u``/``sample_v``), which later stages use to avoid the half-pixel
    error that nearest-neighbour lookup would otherwise introduce.
    """
    rows, cols, inside = source_indices(disp.shape, gamma)
    valid = inside & disp.valid[rows, cols]
    values = np.where(valid, disp.values[rows, cols], np.nan)

    su, sv = disp.positions()
    cu, cv = disp.center_u, disp.center_v
    pu, pv = rotate_coords(su[rows, cols], sv[rows, cols], cu, cv, gamma)
    return DisparityImage(values, valid, pu + cu, pv + cv)
