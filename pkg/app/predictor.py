"""
Beauty Predictor
Loads a trained model once and scores face images with it
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.db.cache import DecompositionCache
from app.db.model_store import load_model
from app.ingestion.dataset import SCORE_MAX, SCORE_MIN
from app.ingestion.wls import WlsParams
from app.tools.evaluate import predict_channels
from app.tools.extract import ChannelExtractionTool

logger = logging.getLogger(__name__)


class BeautyPredictor:
    """
    Scores portraits with a persisted model

    The model's spec fixes the stored resolution; the WLS parameters must match
    the ones used for training since the model file does not carry them.
    """

    def __init__(
        self,
        model_path: Union[str, Path],
        params: Optional[WlsParams] = None,
        cache: Optional[DecompositionCache] = None,
        threads: int = 1,
        multi_crop: bool = False,
    ):
        self.model_path = Path(model_path)
        self.network, self.descriptor = load_model(self.model_path)
        self.extractor = ChannelExtractionTool(
            params or WlsParams(), self.network.spec.input_size, cache=cache, threads=threads
        )
        self.multi_crop = multi_crop
        logger.info(
            "loaded %s (%s, %s input)", self.model_path, self.network.spec.name, self.descriptor.channel_set
        )

    def score(self, image_paths: Sequence[Union[str, Path]]) -> np.ndarray:
        """
        Raw model scores, not clamped

        Args:
            image_paths: Face images (PPM)

        Returns:
            One score per image
        """
        channels = self.extractor.extract_all([Path(p) for p in image_paths])
        return predict_channels(self.network, self.descriptor, channels, multi_crop=self.multi_crop)

    def predict(self, image_paths: Sequence[Union[str, Path]]) -> List[Tuple[Path, float]]:
        """
        Scores clamped to the rating scale

        Returns:
            List of (path, score) pairs in input order
        """
        scores = np.clip(self.score(image_paths), SCORE_MIN, SCORE_MAX)
        return [(Path(p), float(s)) for p, s in zip(image_paths, scores)]
