"""
Cache Service
In-memory caches for exact channel-law tables and upper-bound problems.

Cache tiers:
  - Channel laws : keyed by (p_i, p_d, n)           (tables grow as 4^n)
  - Problems     : keyed by (p_i, p_d, L, flags)    (W matrix, c vector, constraints)

Entries are deterministic functions of their key, so nothing expires; the
oldest entry is evicted when a tier is full.
"""
import threading
from collections import OrderedDict
from typing import Any, Callable, Dict, List, Optional, TypeVar

from app.config.solver import settings

T = TypeVar("T")


class BoundedCache:
    """Thread-safe insertion-ordered cache with max-size eviction and hit stats."""

    def __init__(self, max_keys: int = 256):
        self._store: "OrderedDict[str, Any]" = OrderedDict()
        self._lock = threading.Lock()
        self.max_keys = max_keys
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> Optional[Any]:
        with self._lock:
            value = self._store.get(key)
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
            return value

    def set(self, key: str, value: Any) -> None:
        with self._lock:
            if key in self._store:
                self._store[key] = value
                return
            while len(self._store) >= self.max_keys:
                # Evict oldest entry
                self._store.popitem(last=False)
            self._store[key] = value

    def get_or_build(self, key: str, build: Callable[[], T]) -> T:
        cached = self.get(key)
        if cached is not None:
            return cached
        # Built outside the lock; two threads may build the same entry once each.
        value = build()
        self.set(key, value)
        return value

    def delete(self, key: str) -> None:
        with self._lock:
            self._store.pop(key, None)

    def flush(self) -> None:
        with self._lock:
            self._store.clear()
            self.hits = 0
            self.misses = 0

    def keys(self) -> List[str]:
        with self._lock:
            return list(self._store.keys())

    @property
    def size(self) -> int:
        with self._lock:
            return len(self._store)


# ─── Cache Instances ───────────────────────────────────────

_law_cache = BoundedCache(settings.cache_max_entries)
_problem_cache = BoundedCache(settings.cache_max_entries)


def _params_key(p_i: float, p_d: float) -> str:
    return f"{p_i!r}:{p_d!r}"


# ─── Channel-Law Cache ────────────────────────────────────

def law_table(p_i: float, p_d: float, n: int, build: Callable[[], T]) -> T:
    return _law_cache.get_or_build(f"law:{_params_key(p_i, p_d)}:{n}", build)


# ─── Problem Cache ────────────────────────────────────────

def upper_problem(p_i: float, p_d: float, L: int, bitsym: bool, stationary: bool,
                  build: Callable[[], T]) -> T:
    flags = ("bs" if bitsym else "nobs") + ("-st" if stationary else "-nost")
    return _problem_cache.get_or_build(f"ub:{_params_key(p_i, p_d)}:{L}:{flags}", build)


# ─── Stats ────────────────────────────────────────────────

def get_stats() -> Dict[str, Dict[str, int]]:
    return {
        "laws": {"size": _law_cache.size, "hits": _law_cache.hits, "misses": _law_cache.misses},
        "problems": {"size": _problem_cache.size, "hits": _problem_cache.hits,
                     "misses": _problem_cache.misses},
    }


def flush_all():
    _law_cache.flush()
    _problem_cache.flush()
