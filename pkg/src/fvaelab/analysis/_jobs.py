from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def map_jobs(fn, items, jobs: int = 1) -> list:
    """``[fn(*item) for item in items]``, optionally across processes; order preserved."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(*item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*items)))
