"""
Crop Augmentation
Random training crops and the deterministic center crop used at test time
"""

from typing import Callable, List, Optional, Tuple

import numpy as np

from app.errors import ArgumentError
from app.ingestion.decompose import FaceChannels
from app.tensor import Rng, crop2d

Normalizer = Callable[[np.ndarray], np.ndarray]


def _check_sizes(stored: int, crop: int) -> int:
    if crop > stored:
        raise ArgumentError(f"crop size {crop} exceeds plane size {stored}")
    return stored - crop


def random_offsets(stored: int, crop: int, n: int, rng: Rng) -> List[Tuple[int, int]]:
    """n (top, left) pairs uniform in [0, stored - crop]^2"""
    slack = _check_sizes(stored, crop)
    return [(rng.randint(slack + 1), rng.randint(slack + 1)) for _ in range(n)]


def center_offset(stored: int, crop: int) -> Tuple[int, int]:
    slack = _check_sizes(stored, crop)
    return slack // 2, slack // 2


def random_crops(stacked: np.ndarray, crop: int, n: int, rng: Rng) -> List[np.ndarray]:
    """
    Random crops of a stacked channel tensor

    Args:
        stacked: Tensor [C, S, S]; every plane of one crop shares its offset
        crop: Network input size K
        n: Crops to draw
        rng: Run generator

    Returns:
        n tensors [C, K, K]
    """
    if n < 1:
        raise ArgumentError(f"need at least one crop, got {n}")
    stored = stacked.shape[-1]
    return [crop2d(stacked, top, left, crop, crop) for top, left in random_offsets(stored, crop, n, rng)]


def center_crop_stack(stacked: np.ndarray, crop: int) -> np.ndarray:
    """Crop at offset floor((S - K) / 2) on both axes"""
    top, left = center_offset(stacked.shape[-1], crop)
    return crop2d(stacked, top, left, crop, crop)


def _stack(channels: FaceChannels, channel_set: str, normalize: Optional[Normalizer]) -> np.ndarray:
    stacked = channels.stack(channel_set)
    return normalize(stacked) if normalize is not None else stacked


def make_training_crops(
    channels: FaceChannels,
    channel_set: str,
    crop: int,
    n: int,
    rng: Rng,
    normalize: Optional[Normalizer] = None,
) -> List[np.ndarray]:
    """
    n random [C, K, K] crops of one image's channel set (10 per image by default)

    Args:
        channels: Decomposed image at the stored size
        channel_set: Channel set to stack
        crop: Network input size K
        n: Crops to draw
        rng: Run generator
        normalize: Applied to the stacked [C, S, S] tensor before cropping
    """
    return random_crops(_stack(channels, channel_set, normalize), crop, n, rng)


def center_crop(
    channels: FaceChannels, channel_set: str, crop: int, normalize: Optional[Normalizer] = None
) -> np.ndarray:
    return center_crop_stack(_stack(channels, channel_set, normalize), crop)
