"""Optional thread parallelism for independent grid or suite items."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "SPECKERN_THREADS"


def thread_count() -> int:
    """Worker count from SPECKERN_THREADS (default 1, i.e. serial)."""
    raw = os.environ.get(ENV_VAR, "1").strip()
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def ordered_map(fn, items):
    """map(fn, items) with results in input order, threaded when allowed."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
