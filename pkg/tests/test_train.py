import math

import numpy as np
import pandas as pd
import pytest

from app.config import TrainConfig
from app.db.model_store import load_model
from app.errors import ArgumentError, NumericError
from app.ingestion.dataset import Split, split_train_test
from app.tools.evaluate import predict_channels
from app.tools.synth import synth_dataset
from app.tools.train import make_extractor, train

TOY = TrainConfig(
    spec="toy", channel_set="rgb", epochs=4, batch_size=8, lr=0.01,
    keep_rate=1.0, crops_per_image=2, seed=5,
)


def test_history_and_artifacts(synth_corpus, tmp_path):
    _, index = synth_corpus
    split = split_train_test(index, 9, seed=0)
    result = train(TOY, index, split, out_dir=tmp_path)
    assert [r.epoch for r in result.history] == [1, 2, 3, 4]
    history = pd.read_csv(tmp_path / "history.csv")
    assert list(history.columns) == ["epoch", "train_loss", "test_pearson"]
    assert len(history) == 4
    network, descriptor = load_model(tmp_path / "model.fbpm")
    assert descriptor.channel_set == "rgb" and descriptor.channels == 3
    assert descriptor.target_mean == pytest.approx(index.scores(split.train).mean())
    assert network.in_channels == 3


def test_training_reduces_loss(tmp_path):
    index = synth_dataset(24, 28, seed=4, out_dir=tmp_path / "corpus")
    cfg = TOY.model_copy(update={"epochs": 25, "crops_per_image": 4})
    split = Split(train=list(range(24)), test=[])
    result = train(cfg, index, split)
    assert result.history[-1].train_loss < result.history[0].train_loss
    assert all(math.isnan(r.test_pearson) for r in result.history)


def test_same_seed_gives_identical_files(synth_corpus, tmp_path):
    _, index = synth_corpus
    split = split_train_test(index, 9, seed=0)
    train(TOY, index, split, out_dir=tmp_path / "a")
    train(TOY, index, split, out_dir=tmp_path / "b")
    threaded = TOY.model_copy(update={"threads": 4})
    train(threaded, index, split, out_dir=tmp_path / "c")
    for name in ("model.fbpm", "history.csv"):
        reference = (tmp_path / "a" / name).read_bytes()
        assert (tmp_path / "b" / name).read_bytes() == reference
        assert (tmp_path / "c" / name).read_bytes() == reference


def test_fixed_crops_and_multi_crop_run(synth_corpus):
    _, index = synth_corpus
    cfg = TOY.model_copy(update={"fixed_crops": True, "multi_crop": True, "epochs": 2})
    result = train(cfg, index, split_train_test(index, 9, seed=1))
    assert len(result.history) == 2


def test_empty_training_split(synth_corpus):
    _, index = synth_corpus
    with pytest.raises(ArgumentError):
        train(TOY, index, Split(train=[], test=[0]))


def test_divergence_aborts_with_diagnostics(synth_corpus):
    _, index = synth_corpus
    cfg = TOY.model_copy(update={"lr": 1e8, "epochs": 10})
    with pytest.raises(NumericError) as info:
        train(cfg, index, split_train_test(index, 9, seed=0))
    assert {"epoch", "batch", "lr"} <= set(info.value.diagnostics) or "param" in info.value.diagnostics


@pytest.mark.slow
def test_overfit_cnn1_on_detail_channel(tmp_path):
    index = synth_dataset(32, 56, seed=0, out_dir=tmp_path / "corpus")
    cfg = TrainConfig(
        spec="CNN-1", channel_set="detail", epochs=200, batch_size=32, lr=0.01,
        crops_per_image=10, keep_rate=1.0, weight_decay=0.0, seed=0,
    )
    every = list(range(len(index)))
    result = train(cfg, index, Split(train=every, test=every))
    assert result.history[-1].train_loss < 0.1 * result.history[0].train_loss
    extractor = make_extractor(cfg)
    predictions = predict_channels(result.network, result.descriptor, extractor.extract_all(index.paths(every)))
    assert np.corrcoef(index.scores(every), predictions)[0, 1] >= 0.95


@pytest.mark.slow
def test_overfit_run_is_reproducible_across_threads(tmp_path):
    index = synth_dataset(32, 56, seed=0, out_dir=tmp_path / "corpus")
    cfg = TrainConfig(spec="CNN-1", channel_set="detail", epochs=5, batch_size=32, crops_per_image=10, seed=0)
    every = list(range(len(index)))
    split = Split(train=every, test=every)
    train(cfg, index, split, out_dir=tmp_path / "one")
    train(cfg.model_copy(update={"threads": 4}), index, split, out_dir=tmp_path / "four")
    for name in ("model.fbpm", "history.csv"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "four" / name).read_bytes()
