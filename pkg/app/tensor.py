"""
Dense Tensor Helpers
numpy arrays in [batch, channel, height, width] layout, a global precision
switch, and the seeded random generator every other module draws from
"""

from typing import Literal, Sequence, Union

import numpy as np

from app.errors import ArgumentError, BoundsError, NumericError, ShapeError

Tensor = np.ndarray
Precision = Literal["f32", "f64"]

_DTYPES = {"f32": np.float32, "f64": np.float64}
_precision: Precision = "f64"


def set_precision(mode: Precision) -> None:
    """
    Select the numeric mode for every tensor created afterwards

    Args:
        mode: "f64" for verification runs, "f32" for faster training
    """
    global _precision
    if mode not in _DTYPES:
        raise ArgumentError(f"precision must be one of {sorted(_DTYPES)}, got {mode!r}")
    _precision = mode


def get_precision() -> Precision:
    return _precision


def dtype() -> np.dtype:
    """Active floating dtype"""
    return np.dtype(_DTYPES[_precision])


def as_tensor(values) -> Tensor:
    """Copy values into a contiguous tensor of the active dtype"""
    arr = np.array(values, dtype=dtype(), order="C")
    check_shape(arr.shape)
    return arr


def check_shape(shape: Sequence[int]) -> tuple:
    shape = tuple(int(s) for s in shape)
    if not 1 <= len(shape) <= 4:
        raise ShapeError(f"rank must be 1-4, got shape {shape}")
    if any(s < 1 for s in shape):
        raise ShapeError(f"all extents must be >= 1, got shape {shape}")
    return shape


def zeros(shape: Sequence[int]) -> Tensor:
    return np.zeros(check_shape(shape), dtype=dtype())


def elementwise(
    op: Literal["add", "sub", "mul", "scale"],
    a: Tensor,
    b: Union[Tensor, float],
) -> Tensor:
    """
    Element-by-element arithmetic without broadcasting

    Args:
        op: add, sub, mul (tensor-tensor) or scale (tensor-scalar)
        a: Left operand
        b: Right operand, a tensor of identical shape or a scalar for scale

    Returns:
        New tensor with the shape of a
    """
    if op == "scale":
        if np.ndim(b) != 0:
            raise ShapeError("scale takes a scalar right operand")
        return a * a.dtype.type(b)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ArgumentError(f"unknown elementwise op {op!r}")


def reduce(op: Literal["sum", "mean", "max"], a: Tensor) -> float:
    if a.size == 0:
        raise ShapeError("cannot reduce an empty tensor")
    if op == "sum":
        return float(np.sum(a))
    if op == "mean":
        return float(np.sum(a) / a.size)
    if op == "max":
        return float(np.max(a))
    raise ArgumentError(f"unknown reduction {op!r}")


def crop2d(a: Tensor, top: int, left: int, h: int, w: int) -> Tensor:
    """
    Copy an h x w window out of every channel of a [C, H, W] tensor

    Args:
        a: Source tensor [C, H, W]
        top: Row of the window's first pixel
        left: Column of the window's first pixel
        h: Window height
        w: Window width

    Returns:
        Contiguous tensor [C, h, w]
    """
    if a.ndim != 3:
        raise ShapeError(f"crop2d expects [C, H, W], got shape {a.shape}")
    _, height, width = a.shape
    if h < 1 or w < 1 or top < 0 or left < 0 or top + h > height or left + w > width:
        raise BoundsError(
            f"window top={top} left={left} h={h} w={w} outside {height}x{width}"
        )
    return np.ascontiguousarray(a[:, top:top + h, left:left + w])


def assert_finite(a: Tensor, what: str, **diagnostics) -> None:
    if not np.all(np.isfinite(a)):
        raise NumericError(f"non-finite values in {what}", diagnostics or None)


class Rng:
    """
    Seeded generator backed by numpy's PCG64 (128-bit permuted congruential
    generator, O'Neill 2014)

    One Rng is created per run from the configured seed; consumers draw from
    it in a fixed order so identical seeds reproduce identical runs.
    """

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self._generator = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, shape: Sequence[int], lo: float, hi: float) -> Tensor:
        if not lo < hi:
            raise ArgumentError(f"uniform range requires lo < hi, got [{lo}, {hi})")
        values = self._generator.random(check_shape(shape), dtype=np.float64)
        out = (lo + (hi - lo) * values).astype(dtype())
        # lo + (hi-lo)*u can round up to hi for tiny ranges
        return np.where(out >= hi, np.nextafter(out.dtype.type(hi), out.dtype.type(lo)), out)

    def randint(self, n: int) -> int:
        if n < 1:
            raise ArgumentError(f"randint needs n >= 1, got {n}")
        return int(self._generator.integers(0, n))

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def bernoulli(self, shape: Sequence[int], p: float) -> Tensor:
        """Mask of ones with probability p, zeros otherwise"""
        return (self._generator.random(check_shape(shape)) < p).astype(dtype())


def rng_uniform(rng: Rng, shape: Sequence[int], lo: float, hi: float) -> Tensor:
    return rng.uniform(shape, lo, hi)


def rng_randint(rng: Rng, n: int) -> int:
    return rng.randint(n)
