"""Small observability utilities: structured event logging and in-memory metrics.

- StructuredLogger: emits one JSON object per event through the standard
  logging module (``quasidark`` logger).
- MetricsCollector: thread-safe counters and timers with a Prometheus-like
  text export.

Numerical modules report solver fallbacks, propagation statistics and sweep
progress here; they never print.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List


class StructuredLogger:
    def __init__(self, name: str = "quasidark"):
        self._logger = logging.getLogger(name)
        if not self._logger.handlers:
            h = logging.StreamHandler()
            h.setFormatter(logging.Formatter("%(message)s"))
            self._logger.addHandler(h)
        self._logger.setLevel(logging.INFO)

    def _emit(self, level: int, event: str, **kwargs: Any) -> None:
        payload = {"ts": time.time(), "event": event, **kwargs}
        try:
            self._logger.log(level, json.dumps(payload))
        except Exception:
            # numpy scalars, complex numbers
            self._logger.log(level, str(payload))

    def info(self, event: str, **kwargs: Any) -> None:
        self._emit(logging.INFO, event, **kwargs)

    def warning(self, event: str, **kwargs: Any) -> None:
        self._emit(logging.WARNING, event, **kwargs)


# module-level default logger
logger = StructuredLogger()


class MetricsCollector:
    def __init__(self) -> None:
        self._counters: Dict[str, int] = {}
        self._timings: Dict[str, List[float]] = {}
        self._lock = threading.Lock()

    def inc(self, name: str, amount: int = 1) -> None:
        with self._lock:
            self._counters[name] = self._counters.get(name, 0) + amount

    def timing(self, name: str, seconds: float) -> None:
        with self._lock:
            self._timings.setdefault(name, []).append(seconds)

    @contextmanager
    def timer(self, name: str) -> Iterator[None]:
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timing(name, time.perf_counter() - t0)

    def counter(self, name: str) -> int:
        with self._lock:
            return self._counters.get(name, 0)

    def export_prometheus(self) -> str:
        """Return a small Prometheus-like exposition format string."""
        lines: List[str] = []
        with self._lock:
            for k, v in sorted(self._counters.items()):
                lines.append(f"{k} {v}")
            for k, vals in sorted(self._timings.items()):
                if vals:
                    avg = sum(vals) / len(vals)
                    lines.append(f"{k}_count {len(vals)}")
                    lines.append(f"{k}_avg {avg:.6f}")
        return "\n".join(lines)


# module-level default metrics collector
metrics = MetricsCollector()
