"""Ordered thread-pool map; results never depend on the worker count."""
import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "PLESSNER_LAB_THREADS"


def default_threads():
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            n = 0
        if n >= 1:
            return n
    return os.cpu_count() or 1


def map_ordered(func, items, threads=None):
    items = list(items)
    threads = default_threads() if threads is None else max(1, int(threads))
    if threads == 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
