"""Log-amplitude TFD rendering.

Amplitudes are coded logarithmically over a fixed dynamic range (20 dB by
default) and written as binary PGM, the bit-exact baseline format; PNG is
optional on top.  Frequency increases upward, time rightward.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

__all__ = ["to_gray", "render_pgm", "render_png"]


def to_gray(mat: np.ndarray, dynamic_range_db: float = 20.0) -> np.ndarray:
    """Map |values| to gray levels 0..255 on a clamped log scale.

    0 dB (the matrix peak) maps to 255, -dynamic_range_db and below to 0.
    Returns uint8 with row 0 at the TOP of the image (frequency reversed).
    """
    mat = np.asarray(mat, dtype=float)
    if mat.size == 0:
        raise ValueError("cannot render an empty matrix")
    peak = np.abs(mat).max()
    if peak == 0.0:
        warnings.warn("rendering an all-zero matrix (black image)", stacklevel=2)
        return np.zeros(mat.shape, dtype=np.uint8)[::-1, :]
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(np.abs(mat) / peak)
    db = np.clip(db, -dynamic_range_db, 0.0)
    gray = np.rint((db + dynamic_range_db) / dynamic_range_db * 255.0).astype(np.uint8)
    return gray[::-1, :]


def render_pgm(mat: np.ndarray, out: str | Path, dynamic_range_db: float = 20.0) -> None:
    gray = to_gray(mat, dynamic_range_db)
    h, w = gray.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(out).write_bytes(header + gray.tobytes())


def render_png(mat: np.ndarray, out: str | Path, dynamic_range_db: float = 20.0) -> None:
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise RuntimeError("PNG output needs pillow (install tfsparse[png])") from exc
    gray = to_gray(mat, dynamic_range_db)
    Image.fromarray(gray, mode="L").save(str(out), format="PNG")
