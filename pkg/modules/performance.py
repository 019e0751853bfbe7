"""
Memoization of intermediate tensors.
"""
import logging
from collections import OrderedDict
from typing import Any, Callable, Dict, Hashable, Optional

from .config import config

logger = logging.getLogger(__name__)


class MomentCache:
    """LRU cache of evaluated symbolic expressions, keyed by hashable expression trees."""

    def __init__(self, max_size: Optional[int] = None, enabled: Optional[bool] = None):
        """Initialize the cache.

        Args:
            max_size: Maximum number of cached tensors
            enabled: Turn memoization off to recompute every expression
        """
        self.max_size = max_size or config.memo_max_size
        self.enabled = config.enable_memo if enabled is None else enabled
        self.cache: OrderedDict = OrderedDict()
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable) -> Optional[Any]:
        """Get a cached value, or None."""
        if not self.enabled:
            return None
        if key in self.cache:
            self.cache.move_to_end(key)
            self.hits += 1
            return self.cache[key]
        self.misses += 1
        return None

    def set(self, key: Hashable, value: Any) -> None:
        """Cache a value, evicting the least recently used entry at capacity."""
        if not self.enabled:
            return
        if len(self.cache) >= self.max_size:
            self.cache.popitem(last=False)
        self.cache[key] = value

    def get_or_compute(self, key: Hashable, compute: Callable[[], Any]) -> Any:
        """Return the cached value for key, computing and storing it on a miss."""
        value = self.get(key)
        if value is None:
            value = compute()
            self.set(key, value)
        return value

    def clear(self):
        """Clear all cached items."""
        self.cache.clear()
        self.hits = 0
        self.misses = 0
        logger.debug("Moment cache cleared")

    def get_stats(self) -> Dict[str, Any]:
        """Get cache statistics.

        Returns:
            Dict with cache stats
        """
        total_requests = self.hits + self.misses
        hit_rate = (self.hits / total_requests * 100) if total_requests > 0 else 0
        return {
            "enabled": self.enabled,
            "size": len(self.cache),
            "max_size": self.max_size,
            "hits": self.hits,
            "misses": self.misses,
            "hit_rate": round(hit_rate, 2),
        }
