import numpy as np
import pandas as pd
import pytest

from app.config import TrainConfig
from app.db.model_store import load_model
from app.errors import ArgumentError
from app.ingestion.dataset import split_train_test
from app.tools.cascade import cascade_train
from app.tools.evaluate import predict_channels
from app.tools.synth import synth_dataset
from app.tools.train import make_extractor, train

TOY = TrainConfig(spec="toy", epochs=2, batch_size=8, crops_per_image=2, seed=3)


def test_stage_transitions_carry_parameters(synth_corpus, tmp_path):
    _, index = synth_corpus
    split = split_train_test(index, 9, seed=0)
    result = cascade_train(TOY, index, split, ("detail", "base", "rgb"), out_dir=tmp_path)
    detail, base, rgb = result.stages

    # 1 -> 1 channel: every parameter starts where the previous stage ended
    for name, value in detail.result.network.params.items():
        np.testing.assert_array_equal(base.result.initial_params[name], value)

    # 1 -> 3 channels: all but conv1
    for name, value in base.result.network.params.items():
        if name.startswith("conv1."):
            continue
        np.testing.assert_array_equal(rgb.result.initial_params[name], value)
    assert rgb.result.initial_params["conv1.weight"].shape[1] == 3

    network, descriptor = load_model(result.model_path)
    assert descriptor.channel_set == "rgb"
    extractor = make_extractor(TOY)
    scores = predict_channels(network, descriptor, extractor.extract_all(index.paths(split.test)))
    assert scores.shape == (len(split.test),)
    summary = pd.read_csv(tmp_path / "cascade.csv")
    assert summary["channel_set"].tolist() == ["detail", "base", "rgb"]
    for stage in ("stage1-detail", "stage2-base", "stage3-rgb"):
        assert (tmp_path / f"{stage}.fbpm").exists()


def test_in_memory_cascade_matches_disk_cascade(synth_corpus, tmp_path):
    _, index = synth_corpus
    split = split_train_test(index, 9, seed=0)
    on_disk = cascade_train(TOY, index, split, ("detail", "base"), out_dir=tmp_path)
    in_memory = cascade_train(TOY, index, split, ("detail", "base"))
    for name, value in on_disk.final.network.params.items():
        np.testing.assert_array_equal(in_memory.final.network.params[name], value)


def test_fine_tuning_uses_scaled_learning_rate(synth_corpus):
    _, index = synth_corpus
    result = cascade_train(TOY, index, split_train_test(index, 9, seed=0), ("detail", "base"), finetune_lr_factor=0.1)
    assert result.stages[0].result.history[0].lr == TOY.lr
    assert result.stages[1].result.history[0].lr == pytest.approx(TOY.lr * 0.1)


def test_replicate_adaptation(synth_corpus):
    _, index = synth_corpus
    result = cascade_train(TOY, index, split_train_test(index, 9, seed=0), ("base", "combined"), adapt_mode="replicate")
    assert result.final.network.in_channels == 5


def test_rejects_bad_stage_lists(synth_corpus):
    _, index = synth_corpus
    split = split_train_test(index, 9, seed=0)
    with pytest.raises(ArgumentError):
        cascade_train(TOY, index, split, ())
    with pytest.raises(ArgumentError):
        cascade_train(TOY, index, split, ("detail", "hsv"))


def test_single_stage_cascade_is_plain_training(synth_corpus):
    _, index = synth_corpus
    split = split_train_test(index, 9, seed=0)
    cascade = cascade_train(TOY, index, split, ("base",))
    plain = train(TOY.model_copy(update={"channel_set": "base"}), index, split)
    for name, value in plain.network.params.items():
        np.testing.assert_array_equal(cascade.final.network.params[name], value)
    assert [r.train_loss for r in cascade.final.history] == [r.train_loss for r in plain.history]
    assert cascade.final.descriptor == plain.descriptor


@pytest.mark.slow
def test_toy_scale_cascade_end_to_end(tmp_path):
    index = synth_dataset(32, 56, seed=1, out_dir=tmp_path / "corpus")
    cfg = TrainConfig(spec="toy-28-24", epochs=30, batch_size=16, crops_per_image=10, seed=1)
    split = split_train_test(index, 24, seed=1)
    result = cascade_train(cfg, index, split, ("detail", "base", "rgb"), out_dir=tmp_path / "run")
    network, descriptor = load_model(result.model_path)
    scores = predict_channels(network, descriptor, make_extractor(cfg).extract_all(index.paths(split.test)))
    assert np.all(np.isfinite(scores))
