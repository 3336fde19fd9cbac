"""In-memory cache node with LRU eviction and a lossy admission model.

Real deployments refuse to store some objects under churn (disk swap
failures, admission policies); that is what keeps a warmed cache below a
100% hit ratio.  The model draws one admission roll per store attempt from
a seeded generator, so runs are reproducible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum


class CacheResult(Enum):
    HIT = "HIT"
    MISS_FILLED = "MISS_FILLED"
    SWAPFAIL_MISS = "SWAPFAIL_MISS"
    MISS_UNFILLED = "MISS_UNFILLED"

    @property
    def is_hit(self) -> bool:
        return self is CacheResult.HIT


@dataclass(frozen=True)
class AccessRecord:
    time_ms: float
    url: str
    result: CacheResult
    requester: str


@dataclass
class CacheCounters:
    requests: int = 0
    hits: int = 0
    misses: int = 0
    swapfails: int = 0

    def consistent(self) -> bool:
        return self.hits + self.misses + self.swapfails == self.requests


class CacheNode:
    def __init__(
        self,
        cache_id: str,
        capacity_objects: int | None = None,
        admission_failure_rate: float = 0.0,
        rng: random.Random | None = None,
    ):
        if not 0.0 <= admission_failure_rate <= 1.0:
            raise ValueError("admission_failure_rate must be within [0, 1]")
        self.cache_id = cache_id
        self.capacity_objects = capacity_objects
        self.admission_failure_rate = admission_failure_rate
        self.rng = rng or random.Random()
        self._store: dict[str, int] = {}
        self.counters = CacheCounters()
        self.access_log: list[AccessRecord] = []

    def __contains__(self, url: str) -> bool:
        return url in self._store

    def __len__(self) -> int:
        return len(self._store)

    def _admission_ok(self) -> bool:
        if self.admission_failure_rate <= 0.0:
            return True
        return self.rng.random() >= self.admission_failure_rate

    def serve(
        self,
        url: str,
        now: float = 0.0,
        requester: str = "client",
        origin_available: bool = True,
    ) -> CacheResult:
        """Decide the outcome of one request; storage happens separately.

        A miss only turns into a cached object once :meth:`complete_fill`
        runs, so a second request racing the upstream fetch still misses.
        """
        self.counters.requests += 1
        if url in self._store:
            self._store[url] = self._store.pop(url)  # refresh LRU position
            self.counters.hits += 1
            result = CacheResult.HIT
        elif not origin_available:
            self.counters.misses += 1
            result = CacheResult.MISS_UNFILLED
        elif self._admission_ok():
            self.counters.misses += 1
            result = CacheResult.MISS_FILLED
        else:
            self.counters.swapfails += 1
            result = CacheResult.SWAPFAIL_MISS
        self.access_log.append(AccessRecord(now, url, result, requester))
        return result

    def complete_fill(self, url: str, size: int) -> None:
        self._store.pop(url, None)
        self._store[url] = size
        if self.capacity_objects is not None:
            while len(self._store) > self.capacity_objects:
                oldest = next(iter(self._store))
                del self._store[oldest]

    def serve_and_fill(self, url: str, size: int, now: float = 0.0, requester: str = "client") -> CacheResult:
        """Synchronous convenience for non-simulated use."""
        result = self.serve(url, now=now, requester=requester)
        if result is CacheResult.MISS_FILLED:
            self.complete_fill(url, size)
        return result

    def warm(self, items: list[tuple[str, int]]) -> int:
        """Preload objects as an earlier identical run would have left them.

        Each insert is still subject to the admission model; returns how many
        objects were actually stored.
        """
        stored = 0
        for url, size in items:
            if self._admission_ok():
                self.complete_fill(url, size)
                stored += 1
        return stored

    def reset(self) -> None:
        self._store.clear()
        self.counters = CacheCounters()
        self.access_log.clear()


def write_access_log(cache: CacheNode, path) -> None:
    """One line per request: time, url, result, requester."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in cache.access_log:
            fh.write(f"{rec.time_ms:.6f}\t{rec.url}\t{rec.result.value}\t{rec.requester}\n")
