"""Deterministic helpers for optional thread-based parallelism.

Results are always merged in input order, and every worker derives its own
RNG stream from explicit keys, so output is identical for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def parallel_map_settled(
    fn: Callable[[T], R], items: Sequence[T], threads: int = 1
) -> list[tuple[R | None, Exception | None]]:
    """Like parallel_map but never raises; returns (result, error) pairs."""

    def settled(x: T) -> tuple[R | None, Exception | None]:
        try:
            return fn(x), None
        except Exception as exc:  # noqa: BLE001 - caller triages per item
            return None, exc

    return parallel_map(settled, items, threads=threads)
