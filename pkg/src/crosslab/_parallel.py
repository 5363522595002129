import os
from concurrent.futures import ThreadPoolExecutor


def resolve_workers(workers):
    if workers is None or workers == 0:
        return os.cpu_count() or 1
    return max(1, int(workers))


def pmap(fn, items, workers=1):
    """Ordered map; LAPACK releases the GIL so threads overlap eigensolves."""
    items = list(items)
    workers = resolve_workers(workers)
    if workers == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
