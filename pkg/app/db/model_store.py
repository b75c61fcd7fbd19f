"""
Model File Persistence
Binary ModelFile format holding a network spec, its channel descriptor and
raw parameter tensors

Layout (all integers little-endian):
    b"FBPM"                      magic
    u32                          format version
    u32 + UTF-8 JSON             NetworkSpec
    u32 + UTF-8 JSON             ChannelDescriptor
    u32                          tensor count
    per tensor:
        u16 + UTF-8              parameter name
        u8                       rank
        u32 * rank               extents
        u8                       bytes per element (4 = float32, 8 = float64)
        payload                  little-endian IEEE floats, row-major
    u64                          BLAKE2b-64 checksum of every preceding byte
"""

import hashlib
import logging
import struct
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from app.errors import ModelCorruptionError, ModelVersionError
from app.net.architectures import NetworkSpec
from app.net.network import Network

logger = logging.getLogger(__name__)

MAGIC = b"FBPM"
FORMAT_VERSION = 1
_FLOAT_CODES = {4: "<f4", 8: "<f8"}


class ChannelDescriptor(BaseModel):
    """Which facial planes feed the network and how they are normalized"""

    channel_set: str
    channels: int = Field(..., ge=1)
    means: List[float] = Field(default_factory=list, description="per-channel training means")
    target_mean: float = Field(0.0, description="mean training score added back to outputs")

    def normalize(self, stacked: np.ndarray) -> np.ndarray:
        """Subtract the stored per-channel means from a [C, H, W] or [N, C, H, W] stack"""
        if not self.means:
            return stacked
        means = np.asarray(self.means, dtype=stacked.dtype)
        shape = (-1, 1, 1) if stacked.ndim == 3 else (1, -1, 1, 1)
        return stacked - means.reshape(shape)


def checksum(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def _pack_block(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def serialize_model(network: Network, descriptor: ChannelDescriptor) -> bytes:
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    parts.append(_pack_block(network.spec.model_dump_json()))
    parts.append(_pack_block(descriptor.model_dump_json()))
    parts.append(struct.pack("<I", len(network.params)))
    for name, value in network.params.items():
        raw_name = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw_name)) + raw_name)
        parts.append(struct.pack("<B", value.ndim))
        parts.append(struct.pack(f"<{value.ndim}I", *value.shape))
        parts.append(struct.pack("<B", value.itemsize))
        parts.append(np.ascontiguousarray(value, dtype=_FLOAT_CODES[value.itemsize]).tobytes())
    body = b"".join(parts)
    return body + struct.pack("<Q", checksum(body))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelCorruptionError(f"model file truncated at byte {self.pos}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def deserialize_model(data: bytes) -> Tuple[Network, ChannelDescriptor]:
    if len(data) < len(MAGIC) + 12 or data[:4] != MAGIC:
        raise ModelCorruptionError("not a model file (bad magic)")
    body, (stored,) = data[:-8], struct.unpack("<Q", data[-8:])
    if checksum(body) != stored:
        raise ModelCorruptionError("model file checksum mismatch")

    reader = _Reader(body)
    reader.take(4)
    (version,) = reader.unpack("<I")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"model format version {version}, expected {FORMAT_VERSION}")
    try:
        (length,) = reader.unpack("<I")
        spec = NetworkSpec.model_validate_json(reader.take(length))
        (length,) = reader.unpack("<I")
        descriptor = ChannelDescriptor.model_validate_json(reader.take(length))
        (count,) = reader.unpack("<I")
        params = {}
        for _ in range(count):
            (name_len,) = reader.unpack("<H")
            name = reader.take(name_len).decode("utf-8")
            (rank,) = reader.unpack("<B")
            shape = reader.unpack(f"<{rank}I")
            (itemsize,) = reader.unpack("<B")
            code = _FLOAT_CODES[itemsize]
            payload = reader.take(int(np.prod(shape)) * itemsize)
            params[name] = np.frombuffer(payload, dtype=code).reshape(shape).astype(code[1:])
    except (ValueError, KeyError) as exc:
        raise ModelCorruptionError(f"unreadable model payload: {exc}") from exc
    if reader.pos != len(body):
        raise ModelCorruptionError("trailing bytes after the last tensor")
    return Network(spec, params), descriptor


def save_model(network: Network, descriptor: ChannelDescriptor, path: Union[str, Path]) -> Path:
    """
    Write a model file

    Args:
        network: Trained network
        descriptor: Channel set and normalization of its inputs
        path: Destination

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(serialize_model(network, descriptor))
    logger.debug("saved %s (%s) to %s", network.spec.name, descriptor.channel_set, path)
    return path


def load_model(path: Union[str, Path]) -> Tuple[Network, ChannelDescriptor]:
    """Read and verify a model file written by save_model"""
    return deserialize_model(Path(path).read_bytes())
