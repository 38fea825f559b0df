"""Order-preserving worker pool used by builds and quality estimation."""

from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Apply ``fn`` to every item, returning results in input order.

    Results never depend on ``threads``; only wall time does.

    Args:
        fn: Pure function of one item
        items: Work items
        threads: Worker count (1 runs inline)

    Returns:
        List of results aligned with ``items``
    """
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="nhq") as pool:
        return list(pool.map(fn, items))
