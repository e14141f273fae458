import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List

from utils.rng import CHUNK_SIZE, iter_chunks

log = logging.getLogger(__name__)


def map_chunks(task: Callable[..., Any], n_samples: int, seed: int, workers: int = 1,
               *args: Any, chunk_size: int = CHUNK_SIZE) -> List[Any]:
    """Run task(seed, chunk, size, *args) on every chunk; results come back in chunk order.

    `task` must be a module-level function so worker processes can pickle it.
    """
    chunks = list(iter_chunks(n_samples, chunk_size))
    sizes = [stop - start for _, start, stop in chunks]
    ids = [chunk for chunk, _, _ in chunks]
    if workers <= 1 or len(chunks) <= 1:
        results = []
        for chunk, size in zip(ids, sizes):
            results.append(task(seed, chunk, size, *args))
            log.debug("chunk %d done (%d samples)", chunk, size)
        return results
    log.debug("dispatching %d chunks to %d workers", len(chunks), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(task, seed, chunk, size, *args) for chunk, size in zip(ids, sizes)]
        return [f.result() for f in futures]
