import hypothesis
import numpy as np
import pytest
from hypothesis import HealthCheck

from app import tensor
from app.tools.synth import synth_dataset

np.seterr(all="warn")

_suppressed = [HealthCheck.function_scoped_fixture]
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None, suppress_health_check=_suppressed)
hypothesis.settings.register_profile("ci", max_examples=100, deadline=None, suppress_health_check=_suppressed)
hypothesis.settings.load_profile("fast")


@pytest.fixture(autouse=True)
def double_precision():
    tensor.set_precision("f64")
    yield
    tensor.set_precision("f64")


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    from app.config import settings

    monkeypatch.setattr(settings, "cache_dir", str(tmp_path / "cache"))


@pytest.fixture(scope="session")
def synth_corpus(tmp_path_factory):
    """Small synthetic corpus shared by the pipeline tests"""
    out_dir = tmp_path_factory.mktemp("synth")
    index = synth_dataset(n=12, size=32, seed=7, out_dir=out_dir)
    return out_dir, index
