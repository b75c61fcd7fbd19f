import struct

import numpy as np
import pytest

from app import tensor
from app.db.model_store import ChannelDescriptor, checksum, deserialize_model, load_model, save_model, serialize_model
from app.errors import ModelCorruptionError, ModelVersionError
from app.net.architectures import ARCHITECTURES, toy_spec
from app.net.network import build

DESCRIPTOR = ChannelDescriptor(channel_set="detail", channels=1, means=[0.01], target_mean=2.75)


def test_round_trip_preserves_every_byte(tmp_path):
    network = build(toy_spec(), 1, seed=0)
    path = save_model(network, DESCRIPTOR, tmp_path / "m.fbpm")
    loaded, descriptor = load_model(path)
    assert descriptor == DESCRIPTOR
    assert loaded.spec == network.spec
    assert serialize_model(loaded, descriptor) == path.read_bytes()


@pytest.mark.parametrize(
    "spec",
    [toy_spec(), pytest.param(ARCHITECTURES["CNN-2"], marks=pytest.mark.slow)],
    ids=["toy", "CNN-2"],
)
def test_repeated_round_trips(spec):
    data = serialize_model(build(spec, 1, seed=1), DESCRIPTOR)
    for _ in range(1000):
        data_again = serialize_model(*deserialize_model(data))
        assert data_again == data
        data = data_again


def test_single_byte_corruption_detected():
    data = bytearray(serialize_model(build(toy_spec(), 1, seed=2), DESCRIPTOR))
    rng = np.random.default_rng(0)
    for position in rng.integers(4, len(data), size=50):
        corrupted = bytearray(data)
        corrupted[position] ^= 0xFF
        with pytest.raises(ModelCorruptionError):
            deserialize_model(bytes(corrupted))


def test_bad_magic_and_version():
    data = serialize_model(build(toy_spec(), 1, seed=2), DESCRIPTOR)
    with pytest.raises(ModelCorruptionError):
        deserialize_model(b"XXXX" + data[4:])
    body = data[:4] + struct.pack("<I", 99) + data[8:-8]
    with pytest.raises(ModelVersionError):
        deserialize_model(body + struct.pack("<Q", checksum(body)))


def test_single_precision_models_load():
    tensor.set_precision("f32")
    network = build(toy_spec(), 3, seed=3)
    loaded, _ = deserialize_model(serialize_model(network, DESCRIPTOR))
    assert loaded.params["conv1.weight"].dtype == np.float32


def test_descriptor_normalize():
    descriptor = ChannelDescriptor(channel_set="rgb", channels=3, means=[0.1, 0.2, 0.3])
    stacked = np.ones((3, 2, 2))
    np.testing.assert_allclose(descriptor.normalize(stacked)[:, 0, 0], [0.9, 0.8, 0.7])
    np.testing.assert_allclose(descriptor.normalize(stacked[None])[0, :, 1, 1], [0.9, 0.8, 0.7])
