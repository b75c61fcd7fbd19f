"""
Color Space Conversion
sRGB transfer functions and CIELAB (D65 white, 2 degree observer)
"""

from dataclasses import dataclass

import numpy as np

from app.errors import ShapeError

# IEC 61966-2-1 linear sRGB -> XYZ (D65)
SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
XYZ_TO_SRGB = np.linalg.inv(SRGB_TO_XYZ)

# White point: the XYZ image of linear (1, 1, 1) so white maps to a = b = 0 exactly
D65_WHITE = SRGB_TO_XYZ.sum(axis=1)

_DELTA = 6.0 / 29.0


@dataclass
class ImageRGB:
    """Linear-light RGB image, pixels [H, W, 3] in [0, 1]"""

    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ShapeError(f"ImageRGB pixels must be [H, W, 3], got {self.pixels.shape}")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ShapeError("ImageRGB needs width and height >= 1")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class ImageLAB:
    """CIELAB image, pixels [H, W, 3] holding (L, a, b)"""

    pixels: np.ndarray

    @property
    def lightness(self) -> np.ndarray:
        return self.pixels[:, :, 0]

    @property
    def a(self) -> np.ndarray:
        return self.pixels[:, :, 1]

    @property
    def b(self) -> np.ndarray:
        return self.pixels[:, :, 2]


def srgb_decode(encoded: np.ndarray) -> np.ndarray:
    """sRGB electro-optical transfer function, [0, 1] encoded -> linear"""
    encoded = np.asarray(encoded, dtype=np.float64)
    return np.where(
        encoded <= 0.04045,
        encoded / 12.92,
        ((encoded + 0.055) / 1.055) ** 2.4,
    )


def srgb_encode(linear: np.ndarray) -> np.ndarray:
    """Inverse of srgb_decode, clamped to [0, 1]"""
    linear = np.clip(np.asarray(linear, dtype=np.float64), 0.0, 1.0)
    return np.where(
        linear <= 0.0031308,
        linear * 12.92,
        1.055 * linear ** (1.0 / 2.4) - 0.055,
    )


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA ** 3, np.cbrt(t), t / (3 * _DELTA ** 2) + 4.0 / 29.0)


def _lab_f_inv(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA, t ** 3, 3 * _DELTA ** 2 * (t - 4.0 / 29.0))


def srgb_to_lab(img: ImageRGB) -> ImageLAB:
    """
    Convert a linear-light RGB image to CIELAB

    Args:
        img: Linear RGB image with components in [0, 1]

    Returns:
        ImageLAB with L in [0, 100]
    """
    xyz = img.pixels.astype(np.float64) @ SRGB_TO_XYZ.T
    f = _lab_f(xyz / D65_WHITE)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    lab[..., 0] = np.clip(lab[..., 0], 0.0, 100.0)
    return ImageLAB(pixels=lab)


def lab_to_srgb(img: ImageLAB) -> ImageRGB:
    """Inverse of srgb_to_lab; out-of-gamut values are clamped to [0, 1]"""
    lab = img.pixels.astype(np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)], axis=-1) * D65_WHITE
    linear = xyz @ XYZ_TO_SRGB.T
    return ImageRGB(pixels=np.clip(linear, 0.0, 1.0))
