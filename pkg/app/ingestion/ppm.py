"""
PPM/PGM Codec
Binary netpbm reader and writers (P5 gray, P6 RGB, 8-bit)
"""

from pathlib import Path
from typing import Tuple, Union

import numpy as np

from app.errors import ArgumentError, ImageFormatError, ShapeError
from app.ingestion.color import ImageRGB, srgb_decode, srgb_encode

PathLike = Union[str, Path]

_WHITESPACE = b" \t\r\n\v\f"


def _read_header(data: bytes) -> Tuple[str, int, int, int, int]:
    """
    Parse a netpbm header

    Args:
        data: Whole file contents

    Returns:
        Tuple of (magic, width, height, maxval, payload_offset)
    """
    if len(data) < 2 or data[:2] not in (b"P5", b"P6"):
        raise ImageFormatError("expected binary PPM/PGM magic P5 or P6", 0)
    magic = data[:2].decode("ascii")
    pos = 2
    fields = []
    while len(fields) < 3:
        # Skip whitespace and comments
        while pos < len(data) and (data[pos] in _WHITESPACE or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < len(data) and data[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < len(data) and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        token = data[start:pos]
        if not token:
            raise ImageFormatError("truncated header", start)
        if not token.isdigit():
            raise ImageFormatError(f"non-numeric header field {token!r}", start)
        fields.append(int(token))
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise ImageFormatError("missing whitespace after maxval", pos)
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ImageFormatError(f"invalid dimensions {width}x{height}", 2)
    if not 1 <= maxval <= 255:
        raise ImageFormatError(f"only 8-bit images are supported, maxval={maxval}", pos)
    return magic, width, height, maxval, pos + 1


def read_pnm(path: PathLike) -> np.ndarray:
    """
    Read the raw 8-bit samples of a P5 or P6 file

    Args:
        path: Path to the image file

    Returns:
        uint8 array [H, W] for P5 or [H, W, 3] for P6, rescaled to 0..255
    """
    data = Path(path).read_bytes()
    magic, width, height, maxval, offset = _read_header(data)
    channels = 3 if magic == "P6" else 1
    expected = width * height * channels
    payload = data[offset:offset + expected]
    if len(payload) < expected:
        raise ImageFormatError(
            f"truncated payload: expected {expected} bytes, found {len(payload)}",
            offset + len(payload),
        )
    samples = np.frombuffer(payload, dtype=np.uint8)
    if maxval != 255:
        samples = np.round(samples.astype(np.float64) * 255.0 / maxval).astype(np.uint8)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return samples.reshape(shape)


def read_image(path: PathLike) -> ImageRGB:
    """
    Read a PPM (or gray PGM) file as a linear-light RGB image

    Args:
        path: Path to the .ppm/.pgm file

    Returns:
        ImageRGB with sRGB gamma removed
    """
    samples = read_pnm(path)
    if samples.ndim == 2:
        samples = np.repeat(samples[:, :, None], 3, axis=2)
    return ImageRGB(pixels=srgb_decode(samples.astype(np.float64) / 255.0))


def _write(path: PathLike, magic: str, samples: np.ndarray) -> None:
    height, width = samples.shape[:2]
    header = f"{magic}\n{width} {height}\n255\n".encode("ascii")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + np.ascontiguousarray(samples, dtype=np.uint8).tobytes())


def write_ppm(img: ImageRGB, path: PathLike) -> None:
    """Write a linear-light image as an 8-bit sRGB P6 file"""
    encoded = np.round(srgb_encode(img.pixels) * 255.0)
    _write(path, "P6", encoded.astype(np.uint8))


def write_raw_ppm(samples: np.ndarray, path: PathLike) -> None:
    """Write already-encoded uint8 samples [H, W, 3] as P6"""
    if samples.ndim != 3 or samples.shape[2] != 3:
        raise ShapeError(f"expected [H, W, 3] samples, got {samples.shape}")
    _write(path, "P6", samples)


def to_gray_bytes(plane: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Map [lo, hi] linearly to 0..255 with clamping"""
    if not lo < hi:
        raise ArgumentError(f"write range requires lo < hi, got [{lo}, {hi}]")
    scaled = (np.asarray(plane, dtype=np.float64) - lo) * 255.0 / (hi - lo)
    return np.round(np.clip(scaled, 0.0, 255.0)).astype(np.uint8)


def write_pgm(plane: np.ndarray, path: PathLike, lo: float, hi: float) -> None:
    """
    Write one plane as an 8-bit P5 file

    Args:
        plane: Tensor [1, H, W] (or [H, W])
        path: Destination file
        lo: Value mapped to 0
        hi: Value mapped to 255
    """
    if plane.ndim == 3:
        if plane.shape[0] != 1:
            raise ShapeError(f"write_pgm takes a single plane, got {plane.shape}")
        plane = plane[0]
    _write(path, "P5", to_gray_bytes(plane, lo, hi))
