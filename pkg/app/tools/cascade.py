"""
Cascaded Fine-Tuning
Trains on the first channel set from scratch, then fine-tunes the trained
model on each following channel set (detail -> base -> rgb by default)
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd

from app.config import TrainConfig
from app.db.model_store import load_model, save_model
from app.errors import ArgumentError
from app.ingestion.dataset import DatasetIndex, Split
from app.ingestion.decompose import channel_planes
from app.net.network import AdaptMode
from app.tools.extract import ChannelExtractionTool
from app.tools.train import TrainResult, make_extractor, train

logger = logging.getLogger(__name__)

DEFAULT_STAGES = ("detail", "base", "rgb")


@dataclass
class StageResult:
    stage: int
    channel_set: str
    result: TrainResult
    model_path: Optional[Path] = None

    @property
    def pearson_undefined(self) -> bool:
        return math.isnan(self.result.best_pearson)


@dataclass
class CascadeResult:
    stages: List[StageResult] = field(default_factory=list)
    model_path: Optional[Path] = None

    @property
    def final(self) -> TrainResult:
        return self.stages[-1].result


def cascade_train(
    cfg: TrainConfig,
    index: DatasetIndex,
    split: Split,
    stages: Sequence[str] = DEFAULT_STAGES,
    extractor: Optional[ChannelExtractionTool] = None,
    out_dir: Optional[Union[str, Path]] = None,
    finetune_lr_factor: float = 0.1,
    adapt_mode: AdaptMode = "reinit",
) -> CascadeResult:
    """
    Run a cascade of training stages

    Args:
        cfg: Base training configuration; its channel_set is replaced per stage
        index: Dataset index
        split: Train/test record positions shared by all stages
        stages: Ordered channel sets
        extractor: Channel extraction tool (built from cfg when omitted)
        out_dir: Where to write one model per stage plus model.fbpm
        finetune_lr_factor: Learning rate multiplier for stages after the first
        adapt_mode: conv1 adaptation when the channel count changes

    Returns:
        CascadeResult with every stage's TrainResult
    """
    if not stages:
        raise ArgumentError("a cascade needs at least one stage")
    for channel_set in stages:
        channel_planes(channel_set)

    extractor = extractor or make_extractor(cfg)
    train_channels = extractor.extract_all(index.paths(split.train))
    test_channels = extractor.extract_all(index.paths(split.test)) if split.test else []
    out_dir = Path(out_dir) if out_dir is not None else None

    cascade = CascadeResult()
    previous = None
    for number, channel_set in enumerate(stages, start=1):
        stage_cfg = cfg.model_copy(update={"channel_set": channel_set})
        if previous is not None and previous.model_path is not None:
            init_network, _ = load_model(previous.model_path)
        elif previous is not None:
            init_network = previous.result.network
        else:
            init_network = None

        logger.info("cascade stage %d/%d: %s", number, len(stages), channel_set)
        result = train(
            stage_cfg,
            index,
            split,
            extractor=extractor,
            out_dir=out_dir,
            init_network=init_network,
            lr_scale=1.0 if init_network is None else finetune_lr_factor,
            adapt_mode=adapt_mode,
            model_name=f"stage{number}-{channel_set}.fbpm",
            history_name=f"stage{number}-{channel_set}.history.csv",
            train_channels=train_channels,
            test_channels=test_channels,
        )
        stage = StageResult(stage=number, channel_set=channel_set, result=result, model_path=result.model_path)
        if stage.pearson_undefined:
            logger.warning("stage %d (%s): test pearson undefined in every epoch", number, channel_set)
        cascade.stages.append(stage)
        previous = stage

    if out_dir is not None:
        final = cascade.final
        cascade.model_path = save_model(final.network, final.descriptor, out_dir / "model.fbpm")
        pd.DataFrame(
            [
                (s.stage, s.channel_set, s.result.descriptor.channels, s.result.best_pearson, s.pearson_undefined)
                for s in cascade.stages
            ],
            columns=["stage", "channel_set", "channels", "best_pearson", "pearson_undefined"],
        ).to_csv(out_dir / "cascade.csv", index=False, float_format="%.17g")
    return cascade
