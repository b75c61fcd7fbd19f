"""
Decomposition Cache
Persists FaceChannels on disk so multi-stage cascades decompose each image once

Layout: <root>/<image sha256[:16]>/<wls fingerprint>-s<size>.plane.bin
(each file is an uncompressed numpy .npz archive of the six planes)
"""

import hashlib
import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from app.config import settings
from app.ingestion.decompose import FaceChannels
from app.ingestion.wls import WlsParams

logger = logging.getLogger(__name__)


class DecompositionCache:
    """Disk store of decomposed face channels"""

    def __init__(self, root: Optional[Union[str, Path]] = None):
        """
        Args:
            root: Cache directory; defaults to settings.cache_dir (FBP_CACHE_DIR)
        """
        self.root = Path(root) if root is not None else Path(settings.cache_dir)
        self.hits = 0
        self.misses = 0

    @staticmethod
    def image_hash(image_path: Union[str, Path]) -> str:
        return hashlib.sha256(Path(image_path).read_bytes()).hexdigest()[:16]

    def entry_path(self, image_path: Union[str, Path], params: WlsParams, size: int) -> Path:
        return self.root / self.image_hash(image_path) / f"{params.fingerprint()}-s{size}.plane.bin"

    def get(self, image_path: Union[str, Path], params: WlsParams, size: int) -> Optional[FaceChannels]:
        entry = self.entry_path(image_path, params, size)
        if not entry.exists():
            self.misses += 1
            logger.debug("cache miss %s", entry)
            return None
        try:
            with entry.open("rb") as handle, np.load(handle) as archive:
                channels = FaceChannels.from_arrays({k: archive[k] for k in archive.files})
        except (OSError, ValueError, KeyError) as exc:
            logger.warning("ignoring unreadable cache entry %s: %s", entry, exc)
            self.misses += 1
            return None
        self.hits += 1
        logger.debug("cache hit %s", entry)
        return channels

    def put(self, image_path: Union[str, Path], params: WlsParams, size: int, channels: FaceChannels) -> Path:
        entry = self.entry_path(image_path, params, size)
        entry.parent.mkdir(parents=True, exist_ok=True)
        partial = entry.with_suffix(".tmp")
        with partial.open("wb") as handle:
            np.savez(handle, **channels.to_arrays())
        partial.replace(entry)
        return entry
