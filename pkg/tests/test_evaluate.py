import numpy as np
import pytest

from app.db.model_store import ChannelDescriptor, save_model
from app.errors import ArgumentError
from app.ingestion.wls import WlsParams
from app.net.architectures import get_spec
from app.net.network import build
from app.tools.evaluate import EvalReport, build_report, evaluate, evaluate_model_file, predict_channels
from app.tools.extract import ChannelExtractionTool


def constant_model(value: float):
    network = build(get_spec("toy"), 1, seed=0)
    for param in network.params.values():
        param[:] = 0.0
    return network, ChannelDescriptor(channel_set="detail", channels=1, means=[0.0], target_mean=value)


def test_report_metrics_and_json_round_trip(tmp_path):
    report = build_report(["a", "b", "c"], [1.0, 2.0, 3.0], [1.5, 2.0, 3.5], "abc")
    assert report.pearson_r is not None and report.error is None
    assert report.mae == 1.0 / 3.0
    assert [s.residual for s in report.samples] == [0.5, 0.0, 0.5]
    loaded = EvalReport.load(report.save(tmp_path / "report.json"))
    assert loaded == report


def test_constant_model_reports_undefined_correlation(synth_corpus):
    _, index = synth_corpus
    network, descriptor = constant_model(3.0)
    extractor = ChannelExtractionTool(WlsParams(), network.spec.input_size)
    report = evaluate(network, descriptor, index, [0, 1, 2, 3], extractor)
    assert report.pearson_r is None
    assert "zero-variance" in report.error
    np.testing.assert_allclose(report.predictions, 3.0)


def test_multi_crop_of_constant_model(synth_corpus):
    _, index = synth_corpus
    network, descriptor = constant_model(2.0)
    extractor = ChannelExtractionTool(WlsParams(), network.spec.input_size)
    channels = extractor.extract_all(index.paths([0, 1]))
    np.testing.assert_allclose(predict_channels(network, descriptor, channels, multi_crop=True), 2.0)


def test_evaluate_model_file(synth_corpus, tmp_path):
    _, index = synth_corpus
    network = build(get_spec("toy"), 3, seed=1)
    descriptor = ChannelDescriptor(channel_set="rgb", channels=3, means=[0.2, 0.2, 0.2], target_mean=3.0)
    path = save_model(network, descriptor, tmp_path / "m.fbpm")
    extractor = ChannelExtractionTool(WlsParams(), network.spec.input_size)
    report = evaluate_model_file(path, index, list(range(len(index))), extractor)
    assert len(report.samples) == len(index)
    assert [s.id for s in report.samples] == [r.stem for r in index.records]


def test_empty_inputs_are_rejected(synth_corpus):
    _, index = synth_corpus
    network, descriptor = constant_model(3.0)
    extractor = ChannelExtractionTool(WlsParams(), network.spec.input_size)
    with pytest.raises(ArgumentError):
        evaluate(network, descriptor, index, [], extractor)
    with pytest.raises(ArgumentError):
        predict_channels(network, descriptor, [])


def test_center_crop_prediction_uses_descriptor_normalization(synth_corpus):
    _, index = synth_corpus
    network = build(get_spec("toy"), 1, seed=2)
    descriptor = ChannelDescriptor(channel_set="detail", channels=1, means=[0.1], target_mean=3.0)
    extractor = ChannelExtractionTool(WlsParams(), network.spec.input_size)
    face = extractor.extract(index.records[0].path)
    crop = network.spec.crop_size
    stacked = descriptor.normalize(face.stack("detail"))
    top = (stacked.shape[-1] - crop) // 2
    expected, _ = network.forward(stacked[None, :, top:top + crop, top:top + crop], mode="eval")
    np.testing.assert_allclose(predict_channels(network, descriptor, [face]), expected[:, 0] + 3.0, rtol=1e-12)
