"""Ordered parallel map capped by the ``HQER_THREADS`` environment variable.

Work items carry their own RNG substreams, so results do not depend on the
number of workers; they are always returned in input order.
"""
import os
from concurrent.futures import ThreadPoolExecutor


def thread_cap(default=1):
    raw = os.environ.get("HQER_THREADS", "").strip()
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def ordered_map(fn, items, workers=None):
    items = list(items)
    workers = thread_cap() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
