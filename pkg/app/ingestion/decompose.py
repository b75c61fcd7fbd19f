"""
Facial Channel Decomposition
RGB, CIELAB a/b, WLS base layer and detail layer at network resolution
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from app import tensor
from app.errors import ArgumentError
from app.ingestion.color import ImageRGB, srgb_to_lab
from app.ingestion.resize import resize_bilinear
from app.ingestion.wls import WlsParams, wls_base

# Multipliers that bring every plane to a comparable range before mean subtraction
CHANNEL_SCALES: Dict[str, float] = {
    "rgb": 1.0,
    "a": 1.0 / 110.0,
    "b": 1.0 / 110.0,
    "lightness": 1.0 / 100.0,
    "base": 1.0 / 100.0,
    "detail": 1.0 / 100.0,
}

CHANNEL_SETS: Dict[str, Tuple[str, ...]] = {
    "a": ("a",),
    "b": ("b",),
    "rgb": ("rgb",),
    "base": ("base",),
    "detail": ("detail",),
    "combined": ("rgb", "base", "detail"),
}

_PLANE_WIDTHS = {"rgb": 3, "a": 1, "b": 1, "lightness": 1, "base": 1, "detail": 1}


def channel_planes(channel_set: str) -> Tuple[str, ...]:
    if channel_set not in CHANNEL_SETS:
        raise ArgumentError(
            f"unknown channel set {channel_set!r}, expected one of {sorted(CHANNEL_SETS)}"
        )
    return CHANNEL_SETS[channel_set]


def channel_count(channel_set: str) -> int:
    """Input channels a channel set feeds to the network"""
    return sum(_PLANE_WIDTHS[p] for p in channel_planes(channel_set))


@dataclass
class FaceChannels:
    """
    Derived planes of one face image, all [c, H, W] and unscaled

    rgb is linear light in [0, 1]; a, b, lightness, base and detail are in
    CIELAB units. base + detail == lightness by construction. scales holds the
    multipliers applied when planes are stacked as network input.
    """

    rgb: np.ndarray
    a: np.ndarray
    b: np.ndarray
    lightness: np.ndarray
    base: np.ndarray
    detail: np.ndarray
    scales: Dict[str, float] = field(default_factory=lambda: dict(CHANNEL_SCALES))

    @property
    def size(self) -> int:
        return self.lightness.shape[-1]

    def plane(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def scaled(self, name: str) -> np.ndarray:
        return self.plane(name) * self.scales[name]

    def stack(self, channel_set: str) -> np.ndarray:
        """
        Concatenate the scaled planes of a channel set

        Args:
            channel_set: Key of CHANNEL_SETS

        Returns:
            Tensor [C, S, S] in the active precision
        """
        planes: List[np.ndarray] = [self.scaled(p) for p in channel_planes(channel_set)]
        return np.concatenate(planes, axis=0).astype(tensor.dtype())

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return {
            "rgb": self.rgb, "a": self.a, "b": self.b,
            "lightness": self.lightness, "base": self.base, "detail": self.detail,
        }

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> "FaceChannels":
        return cls(**{k: np.asarray(arrays[k]) for k in _PLANE_WIDTHS})


def decompose(img: ImageRGB, params: WlsParams, out_size: int) -> FaceChannels:
    """
    Split a face photograph into the network's facial channels

    Args:
        img: Linear RGB portrait
        params: WLS parameters
        out_size: Network stored resolution (56/156/256 for the three CNNs)

    Returns:
        FaceChannels at out_size x out_size
    """
    if out_size < 1:
        raise ArgumentError(f"out_size must be >= 1, got {out_size}")
    resized = resize_bilinear(img, out_size, out_size)
    lab = srgb_to_lab(resized)

    lightness = lab.lightness[None].copy()
    base = wls_base(lightness, params)
    detail = lightness - base

    return FaceChannels(
        rgb=np.ascontiguousarray(resized.pixels.transpose(2, 0, 1)),
        a=lab.a[None].copy(),
        b=lab.b[None].copy(),
        lightness=lightness,
        base=base,
        detail=detail,
    )
