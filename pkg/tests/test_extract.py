import numpy as np

from app.db.cache import DecompositionCache
from app.ingestion.ppm import read_pnm
from app.ingestion.wls import WlsParams
from app.tools.extract import ChannelExtractionTool


def test_cache_hit_returns_identical_planes(synth_corpus, tmp_path):
    _, index = synth_corpus
    cache = DecompositionCache(tmp_path / "cache")
    tool = ChannelExtractionTool(WlsParams(), 14, cache=cache)
    path = index.records[0].path
    first = tool.extract(path)
    second = tool.extract(path)
    assert (cache.misses, cache.hits) == (1, 1)
    for name, value in first.to_arrays().items():
        np.testing.assert_array_equal(second.plane(name), value)
    assert cache.entry_path(path, WlsParams(), 14).exists()


def test_cache_keys_on_parameters(synth_corpus, tmp_path):
    _, index = synth_corpus
    cache = DecompositionCache(tmp_path / "cache")
    path = index.records[0].path
    assert cache.entry_path(path, WlsParams(), 14) != cache.entry_path(path, WlsParams(lam=0.5), 14)
    assert cache.entry_path(path, WlsParams(), 14) != cache.entry_path(path, WlsParams(), 28)


def test_thread_count_does_not_change_results(synth_corpus):
    _, index = synth_corpus
    paths = [r.path for r in index.records]
    serial = ChannelExtractionTool(WlsParams(), 14, threads=1).extract_all(paths)
    parallel = ChannelExtractionTool(WlsParams(), 14, threads=4).extract_all(paths)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.detail, b.detail)
        np.testing.assert_array_equal(a.rgb, b.rgb)


def test_decompose_multiple_writes_four_planes(synth_corpus, tmp_path):
    _, index = synth_corpus
    tool = ChannelExtractionTool(WlsParams(), 14)
    paths = [index.records[0].path, tmp_path / "missing.ppm"]
    result = tool.decompose_multiple(paths, tmp_path / "out")
    assert (result["total_files"], result["successful"], result["failed"]) == (2, 1, 1)
    assert result["total_outputs"] == 4
    stem = index.records[0].path.stem
    for suffix in ("base", "detail", "a", "b"):
        plane = read_pnm(tmp_path / "out" / f"{stem}.{suffix}.pgm")
        assert plane.shape == (14, 14)
    assert "missing.ppm" in result["results"][1]["error"]
