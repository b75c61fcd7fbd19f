"""
Synthetic Face Corpus
Portrait-like images with a known score so the whole pipeline can be
exercised without the benchmark database

Each image is a smooth elliptical "face" on a dark background plus a striped
band across the eye region. Two latent factors drive it:
    lightness  l in [0.25, 0.85]  brightness of the face blob
    sharpness  e in [0, 1]        blob edge sharpness and stripe contrast
and the score is the monotone map
    score = 1 + 4 * (0.7 * (l - 0.25) / 0.6 + 0.3 * e)
which always lies in [1, 5].
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from app.errors import ArgumentError
from app.ingestion.dataset import DatasetIndex, IndexRecord, write_index
from app.ingestion.ppm import write_raw_ppm
from app.tensor import Rng

logger = logging.getLogger(__name__)

LIGHTNESS_RANGE = (0.25, 0.85)
SKIN_TONE = np.array([1.0, 0.78, 0.66])
BACKGROUND = 0.12


def synth_score(lightness: float, sharpness: float) -> float:
    lo, hi = LIGHTNESS_RANGE
    score = 1.0 + 4.0 * (0.7 * (lightness - lo) / (hi - lo) + 0.3 * sharpness)
    return float(np.clip(score, 1.0, 5.0))


def render_face(size: int, lightness: float, sharpness: float, noise: np.ndarray) -> np.ndarray:
    """
    Render one portrait as encoded sRGB uint8 [size, size, 3]

    Args:
        size: Side length in pixels
        lightness: Face blob brightness
        sharpness: Edge sharpness and stripe contrast
        noise: Per-pixel noise [size, size] in encoded units
    """
    coords = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    radius = np.sqrt((xx / 0.62) ** 2 + (yy / 0.78) ** 2)

    edge_width = 0.14 - 0.12 * sharpness
    blob = 1.0 / (1.0 + np.exp((radius - 1.0) / edge_width))

    band = (np.abs(yy + 0.1) < 0.12) & (radius < 0.9)
    stripes = 0.18 * sharpness * np.sin(xx * np.pi * 8.0) * band

    face = lightness * (1.0 + stripes)
    value = BACKGROUND * (1.0 - blob) + face * blob
    rgb = value[:, :, None] * SKIN_TONE[None, None, :] + noise[:, :, None]
    return np.round(np.clip(rgb, 0.0, 1.0) * 255.0).astype(np.uint8)


def synth_dataset(n: int, size: int, seed: int, out_dir: Union[str, Path]) -> DatasetIndex:
    """
    Generate a synthetic corpus

    Args:
        n: Number of images (>= 2)
        size: Image side length
        seed: Generator seed; the same seed yields a byte-identical corpus
        out_dir: Directory for face_XXX.ppm files and index.csv

    Returns:
        DatasetIndex of the written images, provenance "synthetic"
    """
    if n < 2:
        raise ArgumentError(f"need at least two images, got {n}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = Rng(seed)
    records = []
    for i in range(n):
        lightness = float(rng.uniform((1,), *LIGHTNESS_RANGE)[0])
        sharpness = float(rng.uniform((1,), 0.0, 1.0)[0])
        noise = rng.uniform((size, size), -0.01, 0.01)
        path = out_dir / f"face_{i:03d}.ppm"
        write_raw_ppm(render_face(size, lightness, sharpness, noise), path)
        records.append(IndexRecord(path=path, score=synth_score(lightness, sharpness)))

    index = DatasetIndex(records=records, provenance="synthetic")
    write_index(index, out_dir / "index.csv")
    logger.info("wrote %d synthetic faces to %s", n, out_dir)
    return index
