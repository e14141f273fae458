import numpy as np
from typing import Iterator, Tuple

# Samples are cut into fixed chunks by sample index; each chunk owns one
# Philox stream, so a run draws the same numbers for any worker count.
CHUNK_SIZE = 4096


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Counter-based generator for one chunk of one run"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(chunk)])))


def iter_chunks(n_samples: int, chunk_size: int = CHUNK_SIZE) -> Iterator[Tuple[int, int, int]]:
    """Yield (chunk_id, start, stop) covering range(n_samples)"""
    for chunk, start in enumerate(range(0, n_samples, chunk_size)):
        yield chunk, start, min(start + chunk_size, n_samples)
