"""Order-preserving process-pool map; per-item seeding keeps results worker-independent."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import Any


def pmap(fn: Callable[[Any], Any], items: Sequence[Any], workers: int = 1, chunks: int | None = None) -> list:
    """[fn(x) for x in items], optionally spread over ``workers`` processes."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    n = chunks or 4 * workers
    size = max(1, -(-len(items) // n))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=size))
