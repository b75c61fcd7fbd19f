"""
Bilinear Resampling
Brings face photographs to each architecture's stored input size
"""

import numpy as np

from app.errors import ShapeError
from app.ingestion.color import ImageRGB


def _sample_positions(n_in: int, n_out: int):
    """Source indices and weights for pixel-center aligned resampling"""
    dst = np.arange(n_out, dtype=np.float64)
    src = (dst + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    return i0, i1, frac


def resize_plane(plane: np.ndarray, h: int, w: int) -> np.ndarray:
    """Bilinear resize of the two leading axes of an [H, W, ...] array"""
    if h < 1 or w < 1:
        raise ShapeError(f"target size must be >= 1, got {w}x{h}")
    in_h, in_w = plane.shape[:2]
    if (in_h, in_w) == (h, w):
        return plane.copy()
    y0, y1, fy = _sample_positions(in_h, h)
    x0, x1, fx = _sample_positions(in_w, w)
    extra = (1,) * (plane.ndim - 2)
    fy = fy.reshape((-1, 1) + extra)
    fx = fx.reshape((1, -1) + extra)
    top = plane[y0][:, x0] * (1.0 - fx) + plane[y0][:, x1] * fx
    bottom = plane[y1][:, x0] * (1.0 - fx) + plane[y1][:, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def resize_bilinear(img: ImageRGB, w: int, h: int) -> ImageRGB:
    """
    Resize with bilinear interpolation and edge clamping

    Args:
        img: Source image
        w: Target width
        h: Target height

    Returns:
        Resized image; same size in and out yields an exact copy
    """
    return ImageRGB(pixels=resize_plane(img.pixels, h, w))
