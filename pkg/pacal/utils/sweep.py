"""
Fan-out of independent per-point computations.

Work items run in worker threads, at most `threads` at a time; results come back
in input order whatever the completion order.
"""

import asyncio
import logging
from typing import Callable, List, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)


async def sweep_async(func: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    if threads < 1:
        raise ValueError(f"threads must be at least 1, got {threads}")
    semaphore = asyncio.Semaphore(threads)

    async def run(item: T) -> R:
        async with semaphore:
            return await asyncio.to_thread(func, item)

    return list(await asyncio.gather(*(run(item) for item in items)))


def sweep(func: Callable[[T], R], items: Sequence[T], threads: int = 1) -> List[R]:
    """Synchronous entry point; a single thread runs the items in order in-process."""
    if threads == 1:
        return [func(item) for item in items]
    logger.debug("sweeping %d items on %d threads", len(items), threads)
    return asyncio.run(sweep_async(func, items, threads))
