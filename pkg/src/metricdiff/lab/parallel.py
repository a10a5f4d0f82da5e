"""Per-point fan-out with deterministic assembly.

Worker count comes from METRICDIFF_WORKERS only (default 1 = sequential);
results are joined in submission order so reports never depend on thread
scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("METRICDIFF_WORKERS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    items = list(items)
    w = worker_count()
    if w == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, items))
