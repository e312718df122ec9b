"""Thread-pool executor for parameter grids.

GridExecutor.map runs a function over grid points concurrently and returns the
results in grid order, so output built from them is deterministic regardless of
completion order. Each point is a pure computation; nothing is shared between
workers.
"""

from __future__ import annotations

import concurrent.futures
import os
import time
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

from .observability import logger, metrics

T = TypeVar("T")
R = TypeVar("R")


class SweepError(Exception):
    pass


class GridExecutor:
    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = max_workers or (min(32, (os.cpu_count() or 1) + 4))

    def map(
        self, func: Callable[[T], R], points: Sequence[T], label: str = "sweep"
    ) -> List[R]:
        n = len(points)
        logger.info("sweep_started", label=label, points=n, workers=self.max_workers)
        t0 = time.perf_counter()
        results: Dict[int, R] = {}
        if n == 0:
            return []
        with concurrent.futures.ThreadPoolExecutor(max_workers=self.max_workers) as ex:
            futures: Dict[concurrent.futures.Future, int] = {
                ex.submit(func, pt): i for i, pt in enumerate(points)
            }
            while futures:
                done, _ = concurrent.futures.wait(
                    list(futures.keys()), return_when=concurrent.futures.FIRST_COMPLETED
                )
                for fut in done:
                    i = futures.pop(fut)
                    try:
                        results[i] = fut.result()
                    except Exception as exc:
                        for other in futures:
                            other.cancel()
                        logger.warning(
                            "sweep_point_failed", label=label, index=i, point=_describe(points[i]), error=str(exc)
                        )
                        raise SweepError(
                            f"{label}: point {i} ({_describe(points[i])}) failed: {exc}"
                        ) from exc
                    metrics.inc("sweep_points")
        elapsed = time.perf_counter() - t0
        metrics.timing("sweep_seconds", elapsed)
        logger.info("sweep_completed", label=label, points=n, seconds=round(elapsed, 4))
        return [results[i] for i in range(n)]


def _describe(point: Any) -> str:
    text = repr(point)
    return text if len(text) <= 80 else text[:77] + "..."
