"""
Training Tool
Epoch loop over random crops: decompose, crop, minibatch forward/backward,
SGD step, then evaluate on the test split and keep the best model
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from app.config import TrainConfig
from app.db.model_store import ChannelDescriptor, save_model
from app.errors import ArgumentError, NumericError, UndefinedCorrelationError
from app.ingestion.dataset import DatasetIndex, Split
from app.ingestion.decompose import FaceChannels, channel_count
from app.net.architectures import NetworkSpec, get_spec
from app.net.network import AdaptMode, Network, adapt_input, build, loss_euclidean
from app.net.optim import StepSchedule, sgd_step
from app.tensor import Rng, crop2d
from app.tools.crops import random_offsets
from app.tools.evaluate import predict_channels
from app.tools.extract import ChannelExtractionTool
from app.tools.metrics import pearson

logger = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    test_pearson: float
    lr: float


@dataclass
class TrainResult:
    """Outcome of one training run"""

    network: Network
    descriptor: ChannelDescriptor
    history: List[EpochRecord] = field(default_factory=list)
    final_network: Optional[Network] = None
    initial_params: Dict[str, np.ndarray] = field(default_factory=dict)
    model_path: Optional[Path] = None

    @property
    def best_pearson(self) -> float:
        values = [r.test_pearson for r in self.history if not math.isnan(r.test_pearson)]
        return max(values) if values else float("nan")


def network_spec(cfg: TrainConfig) -> NetworkSpec:
    return get_spec(cfg.spec).with_keep_rate(cfg.keep_rate)


def make_extractor(cfg: TrainConfig, cache=None) -> ChannelExtractionTool:
    return ChannelExtractionTool(cfg.wls, network_spec(cfg).input_size, cache=cache, threads=cfg.threads)


def channel_means(stacks: List[np.ndarray]) -> List[float]:
    """Per-channel mean over every pixel of every training image"""
    total = np.sum([s.sum(axis=(1, 2), dtype=np.float64) for s in stacks], axis=0)
    count = sum(s.shape[1] * s.shape[2] for s in stacks)
    return [float(v) for v in total / count]


def write_history(history: List[EpochRecord], path: Union[str, Path]) -> Path:
    """History CSV with columns epoch,train_loss,test_pearson"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [(r.epoch, r.train_loss, r.test_pearson) for r in history],
        columns=["epoch", "train_loss", "test_pearson"],
    )
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def _sample_offsets(
    n_images: int, stored: int, crop: int, per_image: int, rng: Rng
) -> List[Tuple[int, int, int]]:
    samples = []
    for image in range(n_images):
        for top, left in random_offsets(stored, crop, per_image, rng):
            samples.append((image, top, left))
    return samples


def train(
    cfg: TrainConfig,
    index: DatasetIndex,
    split: Split,
    extractor: Optional[ChannelExtractionTool] = None,
    out_dir: Optional[Union[str, Path]] = None,
    init_network: Optional[Network] = None,
    lr_scale: float = 1.0,
    adapt_mode: AdaptMode = "reinit",
    model_name: str = "model.fbpm",
    history_name: str = "history.csv",
    train_channels: Optional[List[FaceChannels]] = None,
    test_channels: Optional[List[FaceChannels]] = None,
) -> TrainResult:
    """
    Train a network on one channel set

    Args:
        cfg: Training configuration
        index: Dataset index
        split: Train/test record positions
        extractor: Channel extraction tool (built from cfg when omitted)
        out_dir: Where to write the best model and history CSV; None keeps everything in memory
        init_network: Start from this network (cascade stages), adapted to the channel set
        lr_scale: Multiplier on the configured learning rate (fine-tuning stages)
        adapt_mode: How init_network's conv1 is adapted to a new channel count
        model_name: File name of the persisted model
        history_name: File name of the history CSV
        train_channels: Pre-decomposed training images (skips extraction)
        test_channels: Pre-decomposed test images

    Returns:
        TrainResult holding the best-by-pearson network and the per-epoch history
    """
    if not split.train:
        raise ArgumentError("training split is empty")
    spec = network_spec(cfg)
    n_channels = channel_count(cfg.channel_set)
    extractor = extractor or make_extractor(cfg)

    if train_channels is None:
        train_channels = extractor.extract_all(index.paths(split.train))
    if test_channels is None:
        test_channels = extractor.extract_all(index.paths(split.test)) if split.test else []
    train_scores = index.scores(split.train)
    test_scores = index.scores(split.test)

    stacks = [face.stack(cfg.channel_set) for face in train_channels]
    descriptor = ChannelDescriptor(
        channel_set=cfg.channel_set,
        channels=n_channels,
        means=channel_means(stacks),
        target_mean=float(train_scores.mean()),
    )
    stacks = [descriptor.normalize(s) for s in stacks]
    targets = (train_scores - descriptor.target_mean).astype(stacks[0].dtype)

    if init_network is None:
        network = build(spec, n_channels, cfg.seed)
    else:
        network = adapt_input(init_network.copy(), n_channels, cfg.seed, adapt_mode)
        # Fine-tuning starts from zero momentum
        network.momentum = {k: np.zeros_like(v) for k, v in network.momentum.items()}
    initial_params = {k: v.copy() for k, v in network.params.items()}

    rng = Rng(cfg.seed)
    schedule = StepSchedule(cfg.lr * lr_scale, cfg.lr_gamma, cfg.lr_step)
    stored, crop = spec.input_size, spec.crop_size
    fixed = None
    if cfg.fixed_crops:
        fixed = _sample_offsets(len(stacks), stored, crop, cfg.crops_per_image, rng)

    history: List[EpochRecord] = []
    best_network = None
    best_r = -math.inf
    for epoch in range(1, cfg.epochs + 1):
        lr = schedule.lr_at(epoch - 1)
        samples = fixed or _sample_offsets(len(stacks), stored, crop, cfg.crops_per_image, rng)
        order = rng.permutation(len(samples))

        total_loss = 0.0
        for batch_no, start in enumerate(range(0, len(order), cfg.batch_size), start=1):
            chosen = [samples[i] for i in order[start:start + cfg.batch_size]]
            batch = np.stack([crop2d(stacks[img], top, left, crop, crop) for img, top, left in chosen])
            target = targets[[img for img, _, _ in chosen]][:, None]

            pred, cache = network.forward(batch, mode="train", rng=rng)
            loss, dloss = loss_euclidean(pred, target)
            if not math.isfinite(loss):
                raise NumericError("non-finite training loss", {"epoch": epoch, "batch": batch_no, "lr": lr})
            grads = network.backward(cache, dloss)
            sgd_step(network, grads, lr, cfg.momentum, cfg.weight_decay, cfg.layer_lr_mult)
            total_loss += loss * len(chosen)

        train_loss = total_loss / len(samples)
        test_r = float("nan")
        # pearson needs two test images
        if len(test_channels) > 1:
            predictions = predict_channels(network, descriptor, test_channels, cfg.batch_size, cfg.multi_crop, cfg.seed)
            try:
                test_r = pearson(test_scores, predictions)
            except UndefinedCorrelationError as e:
                logger.warning("epoch %d: %s", epoch, e)
        history.append(EpochRecord(epoch=epoch, train_loss=train_loss, test_pearson=test_r, lr=lr))
        logger.info("epoch=%d train_loss=%.6f test_pearson=%.4f lr=%g", epoch, train_loss, test_r, lr)

        if not math.isnan(test_r) and test_r > best_r:
            best_r = test_r
            best_network = network.copy()

    result = TrainResult(
        network=best_network or network,
        descriptor=descriptor,
        history=history,
        final_network=network,
        initial_params=initial_params,
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        result.model_path = save_model(result.network, descriptor, out_dir / model_name)
        write_history(history, out_dir / history_name)
    return result
