"""Reading and writing disparity rasters (PFM, 16-bit PGM, CSV) and mask exports.

All writers go through :func:`atomic_write`, so a failed run never leaves a
half-written file behind.
"""

from __future__ import annotations

import contextlib
import json
import os
import re
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from .core import DisparityImage
from .errors import RasterFormatError

FORMATS = ("pfm", "pgm", "csv")
DEFAULT_PGM_SCALE = 256.0


@contextlib.contextmanager
def atomic_write(path, mode="wb"):
    """Write to a temporary file next to ``path`` and rename it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def guess_format(path) -> str:
    ext = Path(path).suffix.lower().lstrip(".")
    if ext in FORMATS:
        return ext
    if ext == "txt":
        return "csv"
    raise RasterFormatError(f"{path}: cannot infer raster format from extension {ext!r} "
                            f"(expected one of {', '.join(FORMATS)})")


def _read_header_tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens (skipping # comments)."""
    tokens: list[bytes] = []
    pos = 0
    pat = re.compile(rb"\s*(#[^\n]*\n\s*)*(\S+)")
    while len(tokens) < count:
        m = pat.match(buf, pos)
        if not m:
            raise RasterFormatError("truncated header")
        tokens.append(m.group(2))
        pos = m.end()
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_pfm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    try:
        (magic, w, h, scale), start = _read_header_tokens(data, 4)
        width, height, scale = int(w), int(h), float(scale)
    except (ValueError, RasterFormatError) as exc:
        raise RasterFormatError(f"{path}: malformed PFM header ({exc})") from None
    if magic not in (b"Pf", b"PF"):
        raise RasterFormatError(f"{path}: not a PFM file (magic {magic!r})")
    channels = 3 if magic == b"PF" else 1
    endian = "<" if scale < 0 else ">"
    need = width * height * channels * 4
    raw = data[start:start + need]
    if width < 1 or height < 1 or len(raw) != need:
        raise RasterFormatError(f"{path}: truncated PFM raster ({len(raw)} of {need} bytes)")
    arr = np.frombuffer(raw, dtype=endian + "f4").reshape(height, width, channels)[..., 0]
    # PFM stores rows bottom-to-top
    return np.flipud(arr).astype(np.float64)


def write_pfm(path, values: np.ndarray) -> None:
    values = np.asarray(values, dtype="<f4")
    h, w = values.shape
    with atomic_write(path) as fh:
        fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(np.flipud(values).tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    try:
        (magic, w, h, maxval), start = _read_header_tokens(data, 4)
        width, height, maxval = int(w), int(h), int(maxval)
    except (ValueError, RasterFormatError) as exc:
        raise RasterFormatError(f"{path}: malformed PGM header ({exc})") from None
    if magic != b"P5":
        raise RasterFormatError(f"{path}: only binary PGM (P5) is supported, got {magic!r}")
    if not 0 < maxval < 65536:
        raise RasterFormatError(f"{path}: bad PGM maxval {maxval}")
    dtype = ">u2" if maxval > 255 else "u1"
    need = width * height * np.dtype(dtype).itemsize
    raw = data[start:start + need]
    if width < 1 or height < 1 or len(raw) != need:
        raise RasterFormatError(f"{path}: truncated PGM raster ({len(raw)} of {need} bytes)")
    return np.frombuffer(raw, dtype=dtype).reshape(height, width).astype(np.float64)


def write_pgm(path, raw: np.ndarray) -> None:
    raw = np.asarray(raw)
    h, w = raw.shape
    with atomic_write(path) as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(raw.astype(">u2").tobytes())


def read_csv(path) -> np.ndarray:
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except (ValueError, OSError) as exc:
        raise RasterFormatError(f"{path}: unreadable CSV grid ({exc})") from None
    if arr.size == 0:
        raise RasterFormatError(f"{path}: empty CSV grid")
    return arr


def write_csv(path, values: np.ndarray) -> None:
    with atomic_write(path, "w") as fh:
        np.savetxt(fh, np.asarray(values, dtype=np.float64), delimiter=",", fmt="%.17g")


def read_disparity(path, fmt: Optional[str] = None, invalid_marker: Optional[float] = None,
                   pgm_scale: float = DEFAULT_PGM_SCALE) -> DisparityImage:
    """Load a disparity map.

    Non-finite values are always invalid. ``invalid_marker`` defaults to 0 for
    PFM/PGM (the usual "no match" encoding) and to none for CSV.
    """
    fmt = fmt or guess_format(path)
    if not Path(path).is_file():
        raise RasterFormatError(f"{path}: no such file")
    if fmt == "pfm":
        arr = read_pfm(path)
    elif fmt == "pgm":
        arr = read_pgm(path)
    elif fmt == "csv":
        arr = read_csv(path)
    else:
        raise RasterFormatError(f"unsupported raster format {fmt!r}")
    if invalid_marker is None and fmt in ("pfm", "pgm"):
        invalid_marker = 0.0
    valid = np.isfinite(arr)
    if invalid_marker is not None:
        valid &= arr != invalid_marker
    if fmt == "pgm":
        arr = arr / pgm_scale
    return DisparityImage(arr, valid)


def write_disparity(path, disp: DisparityImage, fmt: Optional[str] = None,
                    pgm_scale: float = DEFAULT_PGM_SCALE) -> None:
    """Save a disparity map; invalid pixels become NaN (PFM/CSV) or 0 (PGM)."""
    fmt = fmt or guess_format(path)
    if fmt == "pfm":
        write_pfm(path, disp.values)
    elif fmt == "csv":
        write_csv(path, disp.values)
    elif fmt == "pgm":
        raw = np.clip(np.round(disp.filled(0.0) * pgm_scale), 0, 65535)
        raw = np.where(disp.valid, np.maximum(raw, 1), 0)
        write_pgm(path, raw)
    else:
        raise RasterFormatError(f"unsupported raster format {fmt!r}")


def mask_to_rle(mask: np.ndarray) -> dict:
    """Row-major run lengths, alternating non-road/road and starting with non-road."""
    flat = np.asarray(mask, dtype=bool).ravel()
    change = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat.size and flat[0]:
        runs = [0] + runs
    h, w = mask.shape
    return {"schema": 1, "height": h, "width": w, "order": "row-major",
            "first_value": False, "runs": runs}


def rle_to_mask(rle: dict) -> np.ndarray:
    flat = np.zeros(rle["height"] * rle["width"], dtype=bool)
    pos = 0
    value = bool(rle.get("first_value", False))
    for n in rle["runs"]:
        flat[pos:pos + n] = value
        pos += n
        value = not value
    return flat.reshape(rle["height"], rle["width"])


def write_json(path, payload: dict) -> None:
    with atomic_write(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def write_mask_png(path, mask: np.ndarray) -> None:
    from PIL import Image

    img = Image.fromarray(np.asarray(mask, dtype=bool)).convert("1")
    with atomic_write(path) as fh:
        img.save(fh, format="PNG")


def write_rgb_png(path, rgb: np.ndarray) -> None:
    from PIL import Image

    with atomic_write(path) as fh:
        Image.fromarray(np.asarray(rgb, dtype=np.uint8)).save(fh, format="PNG")
