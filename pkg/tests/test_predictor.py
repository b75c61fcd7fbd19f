import numpy as np

from app.config import TrainConfig
from app.db.model_store import ChannelDescriptor, save_model
from app.ingestion.dataset import Split
from app.net.architectures import get_spec
from app.net.network import build
from app.predictor import BeautyPredictor
from app.tools.train import train


def test_scores_are_clamped_to_rating_scale(synth_corpus, tmp_path):
    _, index = synth_corpus
    network = build(get_spec("toy"), 1, seed=0)
    for value in network.params.values():
        value[:] = 0.0
    descriptor = ChannelDescriptor(channel_set="detail", channels=1, means=[0.0], target_mean=9.0)
    predictor = BeautyPredictor(save_model(network, descriptor, tmp_path / "m.fbpm"))
    paths = [r.path for r in index.records[:3]]
    np.testing.assert_allclose(predictor.score(paths), 9.0)
    assert [score for _, score in predictor.predict(paths)] == [5.0, 5.0, 5.0]
    assert [path for path, _ in predictor.predict(paths)] == paths


def test_overfit_model_recovers_its_label(synth_corpus, tmp_path):
    _, index = synth_corpus
    cfg = TrainConfig(spec="toy", epochs=40, batch_size=1, crops_per_image=1, keep_rate=1.0, seed=2)
    result = train(cfg, index, Split(train=[0], test=[]), out_dir=tmp_path)
    predictor = BeautyPredictor(result.model_path)
    [(path, score)] = predictor.predict([index.records[0].path])
    assert path == index.records[0].path
    assert abs(score - index.records[0].score) < 0.5
