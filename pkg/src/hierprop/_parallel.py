"""Thread fan-out capped by the ``HIERPROP_THREADS`` environment variable."""
import os
from concurrent.futures import ThreadPoolExecutor


def max_workers():
    try:
        return max(1, int(os.environ.get("HIERPROP_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(func, items, workers=None):
    """Order-preserving map; runs inline when only one worker is allowed."""
    items = list(items)
    workers = max_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))
