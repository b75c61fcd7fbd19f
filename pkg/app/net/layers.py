"""
CNN Layers
Forward passes and hand-derived backward passes over [N, C, H, W] batches
"""

from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.tensor import Rng

Params = Dict[str, np.ndarray]
Grads = Dict[str, np.ndarray]


class Layer:
    """
    Base layer

    Layers are stateless: parameters live in the Network and are passed in,
    and everything backward needs is returned as the forward cache.
    """

    name: str = ""

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {}

    def fan_in(self) -> int:
        return 1

    def forward(self, x: np.ndarray, params: Params, train: bool, rng: Optional[Rng]) -> Tuple[np.ndarray, Any]:
        raise NotImplementedError

    def backward(self, dout: np.ndarray, cache: Any, params: Params) -> Tuple[np.ndarray, Grads]:
        raise NotImplementedError


class Conv2D(Layer):
    """Valid convolution, stride 1, square kernel"""

    def __init__(self, name: str, in_channels: int, out_maps: int, kernel: int):
        self.name = name
        self.in_channels = in_channels
        self.out_maps = out_maps
        self.kernel = kernel

    def param_shapes(self):
        return {
            "weight": (self.out_maps, self.in_channels, self.kernel, self.kernel),
            "bias": (self.out_maps,),
        }

    def fan_in(self) -> int:
        return self.in_channels * self.kernel * self.kernel

    def forward(self, x, params, train, rng):
        k = self.kernel
        windows = sliding_window_view(x, (k, k), axis=(2, 3))  # N, C, Ho, Wo, k, k
        out = np.tensordot(windows, params["weight"], axes=([1, 4, 5], [1, 2, 3]))
        out = out.transpose(0, 3, 1, 2) + params["bias"][None, :, None, None]
        return np.ascontiguousarray(out), x

    def backward(self, dout, cache, params):
        x = cache
        k = self.kernel
        windows = sliding_window_view(x, (k, k), axis=(2, 3))
        d_weight = np.tensordot(dout, windows, axes=([0, 2, 3], [0, 2, 3]))
        d_bias = dout.sum(axis=(0, 2, 3))

        # Full correlation of the output gradient with the flipped kernel
        padded = np.pad(dout, ((0, 0), (0, 0), (k - 1, k - 1), (k - 1, k - 1)))
        padded_windows = sliding_window_view(padded, (k, k), axis=(2, 3))
        flipped = params["weight"][:, :, ::-1, ::-1]
        dx = np.tensordot(padded_windows, flipped, axes=([1, 4, 5], [0, 2, 3]))
        dx = np.ascontiguousarray(dx.transpose(0, 3, 1, 2))
        return dx, {"weight": d_weight, "bias": d_bias}


class ReLU(Layer):
    def __init__(self, name: str):
        self.name = name

    def forward(self, x, params, train, rng):
        mask = x > 0
        return x * mask, mask

    def backward(self, dout, cache, params):
        return dout * cache, {}


class MaxPool2D(Layer):
    """
    Non-overlapping 2x2 max pooling; odd trailing rows/columns are dropped

    Ties route the gradient to the first maximum in row-major block order.
    """

    def __init__(self, name: str):
        self.name = name

    def forward(self, x, params, train, rng):
        n, c, h, w = x.shape
        ho, wo = h // 2, w // 2
        blocks = (
            x[:, :, :2 * ho, :2 * wo]
            .reshape(n, c, ho, 2, wo, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, ho, wo, 4)
        )
        argmax = blocks.argmax(axis=-1)
        out = np.take_along_axis(blocks, argmax[..., None], axis=-1)[..., 0]
        return out, (x.shape, argmax)

    def backward(self, dout, cache, params):
        shape, argmax = cache
        n, c, h, w = shape
        ho, wo = h // 2, w // 2
        grad_blocks = np.zeros((n, c, ho, wo, 4), dtype=dout.dtype)
        np.put_along_axis(grad_blocks, argmax[..., None], dout[..., None], axis=-1)
        dx = np.zeros(shape, dtype=dout.dtype)
        dx[:, :, :2 * ho, :2 * wo] = (
            grad_blocks.reshape(n, c, ho, wo, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, 2 * ho, 2 * wo)
        )
        return dx, {}


class Flatten(Layer):
    def __init__(self, name: str = "flatten"):
        self.name = name

    def forward(self, x, params, train, rng):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dout, cache, params):
        return dout.reshape(cache), {}


class Dense(Layer):
    """Fully connected layer, weight [out, in]"""

    def __init__(self, name: str, in_features: int, out_features: int):
        self.name = name
        self.in_features = in_features
        self.out_features = out_features

    def param_shapes(self):
        return {
            "weight": (self.out_features, self.in_features),
            "bias": (self.out_features,),
        }

    def fan_in(self) -> int:
        return self.in_features

    def forward(self, x, params, train, rng):
        return x @ params["weight"].T + params["bias"], x

    def backward(self, dout, cache, params):
        x = cache
        return dout @ params["weight"], {"weight": dout.T @ x, "bias": dout.sum(axis=0)}


class Dropout(Layer):
    """Inverted dropout: kept units are scaled by 1/keep_rate during training"""

    def __init__(self, name: str, keep_rate: float):
        self.name = name
        self.keep_rate = keep_rate

    def forward(self, x, params, train, rng):
        if not train or self.keep_rate >= 1.0:
            return x, None
        mask = rng.bernoulli(x.shape, self.keep_rate).astype(x.dtype) / x.dtype.type(self.keep_rate)
        return x * mask, mask

    def backward(self, dout, cache, params):
        if cache is None:
            return dout, {}
        return dout * cache, {}
