"""
Feature Map Visualization
Tiles the responses of one convolution layer into a single PGM grid
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Union

import numpy as np

from app.db.model_store import ChannelDescriptor
from app.errors import ArgumentError
from app.ingestion.ppm import write_pgm
from app.net.network import Network
from app.tools.crops import center_crop
from app.tools.extract import ChannelExtractionTool

logger = logging.getLogger(__name__)

# Maps smaller than this are upsampled nearest-neighbor by UPSAMPLE
MIN_LEGIBLE_EXTENT = 4
UPSAMPLE = 8
SEPARATOR = 1.0


@dataclass
class FeatureMapGrid:
    """Per-map normalized responses of one layer and their tiling"""

    layer: int
    maps: List[np.ndarray]
    rows: int
    cols: int
    extent: int
    upsampled: bool = False
    image: np.ndarray = field(default_factory=lambda: np.zeros((1, 1)))


def normalize_map(plane: np.ndarray) -> np.ndarray:
    """Min-max to [0, 1]; constant maps become mid-gray 0.5"""
    lo, hi = float(plane.min()), float(plane.max())
    if hi == lo:
        return np.full(plane.shape, 0.5)
    return (plane.astype(np.float64) - lo) / (hi - lo)


def tile_maps(maps: List[np.ndarray]) -> FeatureMapGrid:
    """Lay out square maps row-major with 1-pixel separators"""
    count = len(maps)
    extent = maps[0].shape[0]
    cols = math.ceil(math.sqrt(count))
    rows = math.ceil(count / cols)
    height = rows * extent + (rows - 1)
    width = cols * extent + (cols - 1)
    image = np.full((height, width), SEPARATOR)
    for i, plane in enumerate(maps):
        r, c = divmod(i, cols)
        top, left = r * (extent + 1), c * (extent + 1)
        image[top:top + extent, left:left + extent] = plane
    # Unused tiles in the last row stay black
    for i in range(count, rows * cols):
        r, c = divmod(i, cols)
        top, left = r * (extent + 1), c * (extent + 1)
        image[top:top + extent, left:left + extent] = 0.0
    return FeatureMapGrid(layer=0, maps=maps, rows=rows, cols=cols, extent=extent, image=image)


def layer_responses(network: Network, batch: np.ndarray, layer: int, post_pool: bool = False) -> np.ndarray:
    """
    Eval-mode responses of conv layer `layer` (1-based) for the first sample

    Returns:
        Array [out_maps, h, w], post-activation and pre-pool unless post_pool
    """
    n_conv = len(network.spec.conv_layers())
    if not 1 <= layer <= n_conv:
        raise ArgumentError(f"layer must lie in [1, {n_conv}], got {layer}")
    _, cache = network.forward(batch, mode="eval", keep_outputs=True)
    key = f"pool{layer}" if post_pool else f"relu{layer}"
    return cache.outputs[key][0]


def feature_maps(
    network: Network,
    descriptor: ChannelDescriptor,
    image_path: Union[str, Path],
    layer: int,
    out_path: Union[str, Path],
    extractor: ChannelExtractionTool,
    post_pool: bool = False,
) -> FeatureMapGrid:
    """
    Render one layer's feature maps for an image

    Args:
        network: Trained network
        descriptor: Its channel descriptor
        image_path: Face image (PPM)
        layer: Conv layer number, 1-based
        out_path: Destination PGM
        extractor: Channel extraction tool at the network's stored size
        post_pool: Visualize after pooling instead of before

    Returns:
        The written FeatureMapGrid
    """
    channels = extractor.extract(image_path)
    batch = center_crop(channels, descriptor.channel_set, network.spec.crop_size, descriptor.normalize)[None]

    responses = layer_responses(network, batch, layer, post_pool)
    maps = [normalize_map(plane) for plane in responses]
    upsampled = maps[0].shape[0] < MIN_LEGIBLE_EXTENT
    if upsampled:
        maps = [np.kron(plane, np.ones((UPSAMPLE, UPSAMPLE))) for plane in maps]
        logger.info("conv%d maps are %dx%d, upsampled x%d", layer, *responses.shape[1:], UPSAMPLE)

    grid = tile_maps(maps)
    grid.layer = layer
    grid.upsampled = upsampled
    write_pgm(grid.image, out_path, 0.0, 1.0)
    return grid
