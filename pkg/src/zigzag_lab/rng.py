"""Counter-based random streams.

Every replicate gets its own Philox stream keyed by ``(master_seed, index)``,
so results never depend on how replicates are scheduled across threads.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

__all__ = ["stream", "as_generator", "map_replicates", "thread_count"]


def stream(master_seed: int, index: int = 0, *keys: int) -> np.random.Generator:
    """Independent Philox generator for replicate ``index`` of ``master_seed``.

    Extra ``keys`` address nested families, e.g. ``stream(seed, eps_index, path)``.
    """
    key = (int(index),) + tuple(int(k) for k in keys)
    seq = np.random.SeedSequence(int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def as_generator(seed) -> np.random.Generator:
    """Accept an int seed or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed, 0)


def thread_count(default: int = 1) -> int:
    """Thread count, overridable by the ``ZIGZAG_THREADS`` environment variable."""
    env = os.environ.get("ZIGZAG_THREADS")
    if env:
        return max(1, int(env))
    return max(1, int(default))


def map_replicates(fn, n: int, threads: int = 1) -> list:
    """Evaluate ``fn(i)`` for ``i in range(n)`` and return results in index order.

    Scheduling is static round-robin: worker ``w`` handles ``w, w + threads, ...``.
    Since each replicate draws from its own stream, the output is identical for
    any ``threads``.
    """
    threads = max(1, min(int(threads), max(n, 1)))
    if threads == 1:
        return [fn(i) for i in range(n)]

    out = [None] * n

    def work(w):
        for i in range(w, n, threads):
            out[i] = fn(i)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for fut in [pool.submit(work, w) for w in range(threads)]:
            fut.result()
    return out
