"""
Network Architectures
Layer-by-layer descriptions of the three basic CNNs and their toy variants
"""

from typing import List, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.errors import SpecError

LayerKind = Literal["conv", "pool", "fully_connected", "dropout"]


class LayerSpec(BaseModel):
    """
    One layer of a NetworkSpec

    conv layers always use stride 1 and pool layers always halve with a 2x2
    max window, so only maps/kernel, neurons or keep rate vary.
    """

    model_config = ConfigDict(frozen=True)

    kind: LayerKind
    out_maps: Optional[int] = Field(None, ge=1)
    kernel: Optional[int] = Field(None, ge=1)
    out_neurons: Optional[int] = Field(None, ge=1)
    keep_rate: Optional[float] = Field(None, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_fields(self):
        if self.kind == "conv" and (self.out_maps is None or self.kernel is None):
            raise ValueError("conv layers need out_maps and kernel")
        if self.kind == "fully_connected" and self.out_neurons is None:
            raise ValueError("fully_connected layers need out_neurons")
        if self.kind == "dropout" and self.keep_rate is None:
            raise ValueError("dropout layers need keep_rate")
        return self


def conv(out_maps: int, kernel: int) -> LayerSpec:
    return LayerSpec(kind="conv", out_maps=out_maps, kernel=kernel)


def pool() -> LayerSpec:
    return LayerSpec(kind="pool")


def fully_connected(out_neurons: int) -> LayerSpec:
    return LayerSpec(kind="fully_connected", out_neurons=out_neurons)


def dropout(keep_rate: float = 0.5) -> LayerSpec:
    return LayerSpec(kind="dropout", keep_rate=keep_rate)


class NetworkSpec(BaseModel):
    """Architecture: input geometry plus an ordered layer list"""

    model_config = ConfigDict(frozen=True)

    name: str
    channels: int = Field(1, ge=1)
    input_size: int = Field(..., ge=1, description="stored plane size S")
    crop_size: int = Field(..., ge=1, description="network input size K")
    layers: List[LayerSpec]

    def conv_layers(self) -> List[LayerSpec]:
        return [layer for layer in self.layers if layer.kind == "conv"]

    def with_channels(self, channels: int) -> "NetworkSpec":
        return self.model_copy(update={"channels": channels})

    def with_keep_rate(self, keep_rate: float) -> "NetworkSpec":
        layers = [dropout(keep_rate) if layer.kind == "dropout" else layer for layer in self.layers]
        return self.model_copy(update={"layers": layers})

    def shape_chain(self) -> List[int]:
        """
        Spatial side lengths after the input and after every conv and pool

        Returns:
            e.g. [48, 42, 21, 16, 8, 4, 2] for CNN-1

        Raises:
            SpecError naming the first layer whose output would be empty, or
            a conv that is not followed by a pool
        """
        if self.crop_size > self.input_size:
            raise SpecError(
                f"crop size {self.crop_size} exceeds stored size {self.input_size}", "input"
            )
        side = self.crop_size
        chain = [side]
        conv_index = 0
        seen_dense = False
        for position, layer in enumerate(self.layers):
            if layer.kind == "conv":
                conv_index += 1
                label = f"conv{conv_index}"
                if seen_dense:
                    raise SpecError("conv layer after a fully connected layer", label)
                following = self.layers[position + 1] if position + 1 < len(self.layers) else None
                if following is None or following.kind != "pool":
                    raise SpecError("every conv layer must be followed by a pool layer", label)
                side = side - layer.kernel + 1
                if side < 1:
                    raise SpecError(f"kernel {layer.kernel} leaves no output", label)
                chain.append(side)
            elif layer.kind == "pool":
                side = side // 2
                if side < 1:
                    raise SpecError("pooling leaves no output", f"pool{conv_index}")
                chain.append(side)
            elif layer.kind == "fully_connected":
                seen_dense = True
        dense = [layer for layer in self.layers if layer.kind == "fully_connected"]
        if not dense or dense[-1].out_neurons != 1:
            raise SpecError("the last fully connected layer must have one neuron", "output")
        return chain

    def flatten_size(self) -> int:
        chain = self.shape_chain()
        maps = self.conv_layers()[-1].out_maps if self.conv_layers() else self.channels
        return chain[-1] * chain[-1] * maps


CNN1 = NetworkSpec(
    name="CNN-1",
    input_size=56,
    crop_size=48,
    layers=[
        conv(50, 7), pool(),
        conv(100, 6), pool(),
        conv(150, 5), pool(),
        fully_connected(300), dropout(0.5),
        fully_connected(1),
    ],
)

CNN2 = NetworkSpec(
    name="CNN-2",
    input_size=156,
    crop_size=138,
    layers=[
        conv(50, 5), pool(),
        conv(100, 5), pool(),
        conv(150, 4), pool(),
        conv(200, 4), pool(),
        conv(250, 3), pool(),
        fully_connected(300), dropout(0.5),
        fully_connected(1),
    ],
)

CNN3 = NetworkSpec(
    name="CNN-3",
    input_size=256,
    crop_size=227,
    layers=[
        conv(50, 5), pool(),
        conv(100, 5), pool(),
        conv(150, 4), pool(),
        conv(200, 4), pool(),
        conv(250, 3), pool(),
        conv(300, 2), pool(),
        fully_connected(500), dropout(0.5),
        fully_connected(1),
    ],
)

ARCHITECTURES = {spec.name: spec for spec in (CNN1, CNN2, CNN3)}


def toy_spec(
    crop_size: int = 12,
    input_size: Optional[int] = None,
    maps: Sequence[int] = (4, 6, 8),
    kernels: Sequence[int] = (3, 2, 1),
    hidden: int = 10,
    keep_rate: float = 0.5,
) -> NetworkSpec:
    """CNN-1 shaped network (three conv/pool stages, two FC) at reduced size"""
    layers: List[LayerSpec] = []
    for out_maps, kernel in zip(maps, kernels):
        layers += [conv(out_maps, kernel), pool()]
    layers += [fully_connected(hidden), dropout(keep_rate), fully_connected(1)]
    return NetworkSpec(
        name="custom",
        input_size=input_size or crop_size,
        crop_size=crop_size,
        layers=layers,
    )


def get_spec(name: str) -> NetworkSpec:
    """
    Look up an architecture by name

    Args:
        name: CNN-1, CNN-2, CNN-3, or toy (a 12x12 CNN-1 variant), or
            toy-<S>-<K> for a toy variant stored at S and cropped to K

    Returns:
        The NetworkSpec
    """
    if name in ARCHITECTURES:
        return ARCHITECTURES[name]
    if name == "toy":
        return toy_spec(crop_size=12, input_size=14)
    if name.startswith("toy-"):
        try:
            _, stored, crop = name.split("-")
            return toy_spec(crop_size=int(crop), input_size=int(stored))
        except ValueError:
            pass
    raise SpecError(f"unknown architecture {name!r}", "spec")
