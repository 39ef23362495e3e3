"""Worker-count handling and an order-preserving parallel map."""

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "FRACSTRICH_THREADS"


def resolve_threads(threads=None):
    """Explicit value, else $FRACSTRICH_THREADS, else 1."""
    if threads is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        threads = int(env) if env else 1
    threads = int(threads)
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


def ordered_map(func, items, threads=1):
    """[func(x) for x in items], evaluated on up to ``threads`` threads.

    Results come back in input order, so reductions over them do not depend
    on scheduling.  numpy releases the GIL inside BLAS and ufunc loops,
    which is where the work is.
    """
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
