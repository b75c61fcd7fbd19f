"""
Channel Extraction Tool
Orchestrates reading, decomposition, caching and writing of facial channels
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Union

from app.db.cache import DecompositionCache
from app.errors import FbpError
from app.ingestion.decompose import FaceChannels, decompose
from app.ingestion.ppm import read_image, write_pgm
from app.ingestion.wls import WlsParams

logger = logging.getLogger(__name__)

# Suffix -> (plane, lo, hi) written by write_channel_files
CHANNEL_FILES = {
    "base": ("base", 0.0, 100.0),
    "detail": ("detail", -50.0, 50.0),
    "a": ("a", -110.0, 110.0),
    "b": ("b", -110.0, 110.0),
}


class ChannelExtractionTool:
    """Turns face images into FaceChannels, reusing the on-disk cache"""

    def __init__(self, params: WlsParams, size: int, cache: Optional[DecompositionCache] = None, threads: int = 1):
        """
        Args:
            params: WLS parameters
            size: Network stored resolution
            cache: Decomposition cache; None disables caching
            threads: Worker threads for batch extraction
        """
        self.params = params
        self.size = size
        self.cache = cache
        self.threads = max(1, threads)

    def extract(self, image_path: Union[str, Path]) -> FaceChannels:
        """
        Decompose one image, consulting the cache first

        Args:
            image_path: Path to a PPM file

        Returns:
            FaceChannels at the tool's size
        """
        if self.cache is not None:
            cached = self.cache.get(image_path, self.params, self.size)
            if cached is not None:
                return cached
        channels = decompose(read_image(image_path), self.params, self.size)
        if self.cache is not None:
            self.cache.put(image_path, self.params, self.size, channels)
        return channels

    def extract_all(self, image_paths: List[Path]) -> List[FaceChannels]:
        """
        Decompose every image; results keep input order for any thread count

        Raises:
            The first failure, after all workers finish
        """
        if self.threads == 1 or len(image_paths) < 2:
            return [self.extract(p) for p in image_paths]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(self.extract, image_paths))

    def write_channel_files(self, channels: FaceChannels, out_dir: Union[str, Path], stem: str) -> List[Path]:
        """Write <stem>.base/.detail/.a/.b.pgm into out_dir"""
        out_dir = Path(out_dir)
        written = []
        for suffix, (plane, lo, hi) in CHANNEL_FILES.items():
            path = out_dir / f"{stem}.{suffix}.pgm"
            write_pgm(channels.plane(plane), path, lo, hi)
            written.append(path)
        return written

    def decompose_image(self, image_path: Union[str, Path], out_dir: Union[str, Path]) -> Dict:
        """
        Decompose one image and write its channel files

        Returns:
            Dictionary with success flag, file name and written outputs or error
        """
        path = Path(image_path)
        try:
            channels = self.extract(path)
            written = self.write_channel_files(channels, out_dir, path.stem)
            return {
                "success": True,
                "file": path.name,
                "outputs": [str(p) for p in written],
            }
        except (FbpError, OSError) as e:
            logger.error("failed to decompose %s: %s", path, e)
            return {
                "success": False,
                "error": str(e),
                "file": str(path),
            }

    def decompose_multiple(self, image_paths: List[Union[str, Path]], out_dir: Union[str, Path]) -> Dict:
        """
        Decompose several images

        Returns:
            Dictionary with aggregated results
        """
        results = [self.decompose_image(p, out_dir) for p in image_paths]

        successful = [r for r in results if r.get("success")]
        failed = [r for r in results if not r.get("success")]

        return {
            "total_files": len(image_paths),
            "successful": len(successful),
            "failed": len(failed),
            "results": results,
            "total_outputs": sum(len(r.get("outputs", [])) for r in successful),
        }
