"""
Evaluation Tool
Scores a trained model on a subset of the index and reports Pearson, MAE and RMSE
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from app.db.model_store import ChannelDescriptor, load_model
from app.errors import ArgumentError, UndefinedCorrelationError
from app.ingestion.dataset import DatasetIndex
from app.ingestion.decompose import FaceChannels
from app.net.network import Network
from app.tensor import Rng
from app.tools.crops import center_crop, make_training_crops
from app.tools.extract import ChannelExtractionTool
from app.tools.metrics import mae, pearson, rmse

logger = logging.getLogger(__name__)

MULTI_CROP_COUNT = 10


class SamplePrediction(BaseModel):
    id: str
    truth: float
    prediction: float
    residual: float


class EvalReport(BaseModel):
    """Predictions and agreement metrics of one evaluation run"""

    samples: List[SamplePrediction] = Field(default_factory=list)
    pearson_r: Optional[float] = None
    error: Optional[str] = None
    mae: float = 0.0
    rmse: float = 0.0
    config_fingerprint: str = ""

    @property
    def truths(self) -> np.ndarray:
        return np.array([s.truth for s in self.samples])

    @property
    def predictions(self) -> np.ndarray:
        return np.array([s.prediction for s in self.samples])

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EvalReport":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))


def build_report(ids: Sequence[str], truths: Sequence[float], predictions: Sequence[float], fingerprint: str = "") -> EvalReport:
    """
    Assemble an EvalReport; an undefined correlation is recorded in error,
    never replaced by zero
    """
    truths = np.asarray(truths, dtype=np.float64)
    predictions = np.asarray(predictions, dtype=np.float64)
    samples = [
        SamplePrediction(id=i, truth=float(t), prediction=float(p), residual=float(p - t))
        for i, t, p in zip(ids, truths, predictions)
    ]
    report = EvalReport(
        samples=samples,
        mae=mae(truths, predictions),
        rmse=rmse(truths, predictions),
        config_fingerprint=fingerprint,
    )
    if len(samples) < 2:
        report.error = "correlation is undefined for fewer than two samples"
        logger.warning("evaluation: %s", report.error)
        return report
    try:
        report.pearson_r = pearson(truths, predictions)
    except UndefinedCorrelationError as e:
        report.error = str(e)
        logger.warning("evaluation: %s", e)
    return report


def predict_channels(
    network: Network,
    descriptor: ChannelDescriptor,
    channels: Sequence[FaceChannels],
    batch_size: int = 32,
    multi_crop: bool = False,
    seed: int = 0,
) -> np.ndarray:
    """
    Score images in eval mode

    Args:
        network: Trained network
        descriptor: Channel set and normalization of its inputs
        channels: Decomposed images at the spec's stored size
        batch_size: Images per forward pass
        multi_crop: Average 10 random crops instead of the single center crop
        seed: Crop seed for multi_crop

    Returns:
        Predicted scores, one per image
    """
    if not channels:
        raise ArgumentError("nothing to predict: no images given")
    crop = network.spec.crop_size
    rng = Rng(seed)
    channel_set, normalize = descriptor.channel_set, descriptor.normalize
    inputs = []
    for face in channels:
        if multi_crop:
            inputs.extend(make_training_crops(face, channel_set, crop, MULTI_CROP_COUNT, rng, normalize))
        else:
            inputs.append(center_crop(face, channel_set, crop, normalize))
    batch = np.stack(inputs)

    outputs = []
    for start in range(0, len(batch), batch_size):
        pred, _ = network.forward(batch[start:start + batch_size], mode="eval")
        outputs.append(pred[:, 0])
    scores = np.concatenate(outputs).astype(np.float64) + descriptor.target_mean
    if multi_crop:
        scores = scores.reshape(len(channels), MULTI_CROP_COUNT).mean(axis=1)
    return scores


def evaluate(
    network: Network,
    descriptor: ChannelDescriptor,
    index: DatasetIndex,
    subset: List[int],
    extractor: ChannelExtractionTool,
    multi_crop: bool = False,
    fingerprint: str = "",
) -> EvalReport:
    """
    Evaluate a model on index records

    Args:
        network: Trained network
        descriptor: Its channel descriptor
        index: Dataset index
        subset: Record positions to score
        extractor: Channel extraction tool at the network's stored size
        multi_crop: Average 10 crops per image
        fingerprint: Config fingerprint stored in the report

    Returns:
        EvalReport with pearson (or the undefined-correlation error), MAE, RMSE
    """
    if not subset:
        raise ArgumentError("cannot evaluate an empty subset")
    channels = extractor.extract_all(index.paths(subset))
    predictions = predict_channels(network, descriptor, channels, multi_crop=multi_crop)
    ids = [index.records[i].stem for i in subset]
    return build_report(ids, index.scores(subset), predictions, fingerprint)


def evaluate_model_file(
    model_path: Union[str, Path],
    index: DatasetIndex,
    subset: List[int],
    extractor: ChannelExtractionTool,
    multi_crop: bool = False,
) -> EvalReport:
    network, descriptor = load_model(model_path)
    return evaluate(network, descriptor, index, subset, extractor, multi_crop)
