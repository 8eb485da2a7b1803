"""Deterministic parallel map and seed splitting for independent work items."""

from concurrent.futures import ThreadPoolExecutor


def split_seed(seed, *parts) -> list:
    """Flat child-seed list: documented splitting scheme seed -> [seed, *parts]."""
    if isinstance(seed, (list, tuple)):
        return [*seed, *parts]
    return [int(seed), *parts]


def det_map(fn, items, threads: int = 1) -> list:
    """Apply fn to items, optionally on a thread pool, preserving order.

    Results are identical to the sequential run: items carry their own seeds
    and the reduction happens in list order afterwards.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
