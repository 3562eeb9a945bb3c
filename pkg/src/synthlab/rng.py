"""Counter-based random streams.

Every stream is a Philox generator whose 128-bit key is ``(seed, stream)``.
Work item ``i`` of a computation always draws from stream ``i``, so results
do not depend on how items are scheduled across threads.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_SEED = 20240611
_MASK64 = (1 << 64) - 1


def stream(seed, index):
    """Return the generator for work item ``index`` under ``seed``."""
    key = np.array([int(seed) & _MASK64, int(index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def ordered_map(func, items, threads=1):
    """``list(map(func, items))`` on a worker pool; output order is input order."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
