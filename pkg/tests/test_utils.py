import numpy as np

from utils.parallel import map_chunks
from utils.rng import chunk_rng, iter_chunks
from utils.summation import CompensatedSum


def _chunk_sum(seed, chunk, size, offset):
    return chunk, size, float(chunk_rng(seed, chunk).random(size).sum()) + offset


def test_chunk_streams_are_reproducible():
    a = chunk_rng(5, 2).random(10)
    assert np.array_equal(a, chunk_rng(5, 2).random(10))
    assert not np.array_equal(a, chunk_rng(5, 3).random(10))


def test_chunks_cover_samples():
    chunks = list(iter_chunks(10, 4))
    assert chunks == [(0, 0, 4), (1, 4, 8), (2, 8, 10)]


def test_map_chunks_keeps_chunk_order():
    serial = map_chunks(_chunk_sum, 10, 1, 1, 0.5, chunk_size=3)
    pooled = map_chunks(_chunk_sum, 10, 1, 2, 0.5, chunk_size=3)
    assert [c for c, _, _ in serial] == [0, 1, 2, 3]
    assert [s for _, s, _ in serial] == [3, 3, 3, 1]
    assert serial == pooled


def test_compensated_sum_recovers_small_terms():
    acc = CompensatedSum(2)
    acc.add_at(np.array([0, 1]), [1e16, 1.0])
    for _ in range(10):
        acc.add_at(np.array([0]), [1.0])
    acc.add_at(np.array([0]), [-1e16])
    assert acc.value.tolist() == [10.0, 1.0]
