"""
Network Engine
Builds a conv/pool/fc CNN from its NetworkSpec and runs forward/backward passes,
the Euclidean loss, and input-channel adaptation for cascaded fine-tuning
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np

from app import tensor
from app.errors import ArgumentError, ShapeError, StateError
from app.net.architectures import NetworkSpec
from app.net.layers import Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D, ReLU
from app.tensor import Rng

logger = logging.getLogger(__name__)

Mode = Literal["train", "eval"]
AdaptMode = Literal["reinit", "replicate"]

_network_ids = itertools.count(1)


def build_layers(spec: NetworkSpec) -> List[Layer]:
    """
    Expand a spec into concrete layers

    A ReLU follows every conv and every hidden fully connected layer; the
    final fully connected layer is linear.
    """
    spec.shape_chain()
    layers: List[Layer] = []
    channels = spec.channels
    conv_index = 0
    dense_index = 0
    dense_total = sum(1 for layer in spec.layers if layer.kind == "fully_connected")
    features = None
    for layer in spec.layers:
        if layer.kind == "conv":
            conv_index += 1
            layers.append(Conv2D(f"conv{conv_index}", channels, layer.out_maps, layer.kernel))
            layers.append(ReLU(f"relu{conv_index}"))
            channels = layer.out_maps
        elif layer.kind == "pool":
            layers.append(MaxPool2D(f"pool{conv_index}"))
        elif layer.kind == "fully_connected":
            if features is None:
                layers.append(Flatten())
                features = spec.flatten_size()
            dense_index += 1
            layers.append(Dense(f"fc{dense_index}", features, layer.out_neurons))
            if dense_index < dense_total:
                layers.append(ReLU(f"relu_fc{dense_index}"))
            features = layer.out_neurons
        elif layer.kind == "dropout":
            layers.append(Dropout(f"drop{dense_index}", layer.keep_rate))
    return layers


@dataclass
class ForwardCache:
    """Per-layer state retained by forward for the matching backward call"""

    network_id: int
    generation: int
    caches: List[object]
    outputs: Dict[str, np.ndarray] = field(default_factory=dict)


class Network:
    """
    Instantiated parameters and momentum state of a NetworkSpec

    params and momentum map "<layer>.<weight|bias>" to tensors in layer order.
    """

    def __init__(self, spec: NetworkSpec, params: Dict[str, np.ndarray]):
        self.spec = spec
        self.layers = build_layers(spec)
        expected = self.param_shapes()
        if list(params) != list(expected):
            raise ShapeError(f"parameter names {list(params)} do not match spec {list(expected)}")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ShapeError(f"{name}: expected shape {shape}, got {params[name].shape}")
        self.params = params
        self.momentum = {name: np.zeros_like(value) for name, value in params.items()}
        self.train_mode = False
        self.id = next(_network_ids)
        self.generation = 0

    @property
    def in_channels(self) -> int:
        return self.spec.channels

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        shapes = {}
        for layer in self.layers:
            for pname, shape in layer.param_shapes().items():
                shapes[f"{layer.name}.{pname}"] = shape
        return shapes

    def layer_params(self, layer: Layer) -> Dict[str, np.ndarray]:
        prefix = layer.name + "."
        return {k[len(prefix):]: v for k, v in self.params.items() if k.startswith(prefix)}

    def copy(self) -> "Network":
        clone = Network(self.spec, {k: v.copy() for k, v in self.params.items()})
        clone.momentum = {k: v.copy() for k, v in self.momentum.items()}
        return clone

    def mark_updated(self) -> None:
        """Invalidate caches produced before a parameter update"""
        self.generation += 1

    def forward(
        self,
        batch: np.ndarray,
        mode: Mode = "eval",
        rng: Optional[Rng] = None,
        keep_outputs: bool = False,
    ) -> Tuple[np.ndarray, ForwardCache]:
        """
        Run the network on a batch

        Args:
            batch: Tensor [N, C, K, K]
            mode: "train" draws dropout masks from rng, "eval" is deterministic
            rng: Run generator, required in train mode
            keep_outputs: Retain every layer's output in the cache (for visualization)

        Returns:
            Tuple of (predictions [N, 1], cache for backward)
        """
        expected = (self.spec.channels, self.spec.crop_size, self.spec.crop_size)
        if batch.ndim != 4 or batch.shape[1:] != expected:
            raise ShapeError(f"batch must be [N, {expected[0]}, {expected[1]}, {expected[2]}], got {batch.shape}")
        train = mode == "train"
        if train and rng is None:
            raise ArgumentError("train mode needs an Rng for dropout masks")
        self.train_mode = train

        cache = ForwardCache(network_id=self.id, generation=self.generation, caches=[])
        x = batch.astype(tensor.dtype(), copy=False)
        for layer in self.layers:
            x, layer_cache = layer.forward(x, self.layer_params(layer), train, rng)
            cache.caches.append(layer_cache)
            if keep_outputs:
                cache.outputs[layer.name] = x
        return x, cache

    def backward(self, cache: ForwardCache, dloss_dpred: np.ndarray) -> Dict[str, np.ndarray]:
        """
        Analytic gradients of the loss with respect to every parameter

        Args:
            cache: Cache from the matching forward call
            dloss_dpred: Gradient of the loss with respect to the predictions [N, 1]

        Returns:
            Gradients keyed and shaped like params
        """
        if cache.network_id != self.id or cache.generation != self.generation:
            raise StateError("forward cache is stale or belongs to another network")
        if len(cache.caches) != len(self.layers):
            raise StateError("forward cache does not match the layer list")

        grads: Dict[str, np.ndarray] = {}
        dout = dloss_dpred
        for layer, layer_cache in zip(reversed(self.layers), reversed(cache.caches)):
            dout, layer_grads = layer.backward(dout, layer_cache, self.layer_params(layer))
            for pname, grad in layer_grads.items():
                grads[f"{layer.name}.{pname}"] = grad
        return {name: grads[name] for name in self.params}


def init_params(spec: NetworkSpec, rng: Rng) -> Dict[str, np.ndarray]:
    """Weights uniform in (-s, s) with s = sqrt(3 / fan_in), biases zero"""
    params = {}
    for layer in build_layers(spec):
        for pname, shape in layer.param_shapes().items():
            if pname == "weight":
                scale = float(np.sqrt(3.0 / layer.fan_in()))
                params[f"{layer.name}.{pname}"] = rng.uniform(shape, -scale, scale)
            else:
                params[f"{layer.name}.{pname}"] = tensor.zeros(shape)
    return params


def build(spec: NetworkSpec, in_channels: int, seed: int) -> Network:
    """
    Instantiate a network with fresh weights

    Args:
        spec: Architecture description
        in_channels: Input planes fed to conv1
        seed: Initialization seed

    Returns:
        Network with zeroed momentum
    """
    spec = spec.with_channels(in_channels)
    spec.shape_chain()
    network = Network(spec, init_params(spec, Rng(seed)))
    logger.debug("built %s with %d input channels, chain %s", spec.name, in_channels, spec.shape_chain())
    return network


def loss_euclidean(pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Half mean squared error

    Args:
        pred: Predictions [N, 1]
        target: Ground truth [N, 1]

    Returns:
        Tuple of (loss = sum((pred - target)^2) / 2N, gradient (pred - target) / N)
    """
    if pred.shape != target.shape:
        raise ShapeError(f"prediction shape {pred.shape} != target shape {target.shape}")
    n = pred.shape[0]
    if n == 0:
        raise ArgumentError("loss needs at least one sample")
    diff = pred - target
    return float(np.sum(diff * diff) / (2 * n)), diff / n


def adapt_input(network: Network, new_channels: int, seed: int, mode: AdaptMode = "reinit") -> Network:
    """
    Carry a trained network over to a different number of input channels

    Args:
        network: Trained source network
        new_channels: Channel count of the next cascade stage
        seed: Seed for the fresh conv1 weights
        mode: "reinit" draws conv1 afresh; "replicate" averages the old
            filters over their input channels and repeats them, rescaled so
            each filter keeps its response to a constant input

    Returns:
        The same network when the count is unchanged, otherwise a new network
        whose layers after conv1 are copied verbatim
    """
    if new_channels < 1:
        raise ArgumentError(f"new_channels must be >= 1, got {new_channels}")
    if new_channels == network.in_channels:
        return network

    spec = network.spec.with_channels(new_channels)
    params = {k: v.copy() for k, v in network.params.items()}
    old_weight = network.params["conv1.weight"]
    out_maps, old_channels, k, _ = old_weight.shape
    if mode == "replicate":
        mean_filter = old_weight.mean(axis=1, keepdims=True)
        scale = old_channels / new_channels
        params["conv1.weight"] = np.repeat(mean_filter, new_channels, axis=1) * scale
    else:
        fresh = init_params(spec, Rng(seed))
        params["conv1.weight"] = fresh["conv1.weight"]
        params["conv1.bias"] = fresh["conv1.bias"]

    adapted = Network(spec, params)
    for name, value in network.momentum.items():
        if not name.startswith("conv1."):
            adapted.momentum[name] = value.copy()
    logger.info("adapted input %d -> %d channels (%s)", old_channels, new_channels, mode)
    return adapted
