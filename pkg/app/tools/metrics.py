"""
Regression Metrics
Pearson correlation, the predictor's headline metric, plus MAE and RMSE
"""

from typing import Sequence

import numpy as np

from app.errors import ArgumentError, UndefinedCorrelationError


def _pair(x: Sequence[float], y: Sequence[float]):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ArgumentError(f"expected two equal-length vectors, got {x.shape} and {y.shape}")
    return x, y


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Pearson correlation coefficient

    Args:
        x: First vector (length >= 2)
        y: Second vector of the same length

    Returns:
        r in [-1, 1]

    Raises:
        UndefinedCorrelationError if either vector has zero variance
    """
    x, y = _pair(x, y)
    if x.size < 2:
        raise ArgumentError("pearson needs at least two samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a zero-variance vector")
    r = float(np.dot(dx, dy)) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def mae(truth: Sequence[float], pred: Sequence[float]) -> float:
    truth, pred = _pair(truth, pred)
    return float(np.mean(np.abs(truth - pred)))


def rmse(truth: Sequence[float], pred: Sequence[float]) -> float:
    truth, pred = _pair(truth, pred)
    return float(np.sqrt(np.mean((truth - pred) ** 2)))
