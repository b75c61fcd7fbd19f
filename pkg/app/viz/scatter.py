"""
Prediction Scatter
Raster scatter of ground truth against prediction on [1, 5] x [1, 5]

Rasterization: a SIZE x SIZE white canvas; score v maps to pixel
round((clip(v, 1, 5) - 1) / 4 * (SIZE - 1)); truth is the column, prediction
the row counted from the bottom. The identity line occupies (SIZE-1-c, c) for
every column c, and each sample is a 3x3 marker centered on its pixel.
"""

from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np
import pandas as pd

from app.errors import ArgumentError
from app.ingestion.ppm import write_raw_ppm
from app.tools.evaluate import EvalReport

SIZE = 256
WHITE = (255, 255, 255)
LINE = (160, 160, 160)
MARKER = (200, 30, 30)


def to_pixel(score: float) -> int:
    return int(round((min(max(score, 1.0), 5.0) - 1.0) / 4.0 * (SIZE - 1)))


def marker_center(truth: float, prediction: float) -> Tuple[int, int]:
    """(row, column) of a sample's marker"""
    return SIZE - 1 - to_pixel(prediction), to_pixel(truth)


def render_scatter(report: EvalReport) -> np.ndarray:
    canvas = np.empty((SIZE, SIZE, 3), dtype=np.uint8)
    canvas[:] = WHITE
    cols = np.arange(SIZE)
    canvas[SIZE - 1 - cols, cols] = LINE
    for sample in report.samples:
        row, col = marker_center(sample.truth, sample.prediction)
        canvas[max(row - 1, 0):row + 2, max(col - 1, 0):col + 2] = MARKER
    return canvas


def scatter_report(report: EvalReport, out_path: Union[str, Path]) -> Dict[str, Path]:
    """
    Write the scatter PPM and a companion CSV of its points

    Args:
        report: Evaluation report with at least one sample
        out_path: Destination .ppm; the CSV is written next to it with suffix .csv

    Returns:
        Dictionary with the image and csv paths
    """
    if not report.samples:
        raise ArgumentError("cannot plot an empty report")
    out_path = Path(out_path)
    write_raw_ppm(render_scatter(report), out_path)
    csv_path = out_path.with_suffix(".csv")
    pd.DataFrame(
        [(s.id, s.truth, s.prediction) for s in report.samples],
        columns=["id", "truth", "prediction"],
    ).to_csv(csv_path, index=False, float_format="%.17g")
    return {"image": out_path, "csv": csv_path}
