"""
Operation metrics and export utilities.
"""
import json
import logging
import time
from collections import defaultdict
from contextlib import contextmanager
from datetime import datetime
from typing import Any, Dict, Iterator, List, Optional

from .config import config

logger = logging.getLogger(__name__)


class MetricsCollector:
    """Collect per-operation timings and outcomes."""

    def __init__(self):
        self.enabled = config.enable_metrics
        self.metrics: Dict[str, Any] = defaultdict(lambda: {
            "count": 0,
            "total_duration": 0.0,
            "errors": 0,
            "last_called": None,
        })
        self.history: List[Dict[str, Any]] = []
        self.start_time = time.time()

    def record(self, operation: str, duration: float, success: bool = True, error: Optional[str] = None):
        """Record one operation.

        Args:
            operation: Operation name (e.g. 'solve_triangular.free')
            duration: Duration in seconds
            success: Whether the operation succeeded
            error: Error message if failed
        """
        if not self.enabled:
            return

        metric = self.metrics[operation]
        metric["count"] += 1
        metric["total_duration"] += duration
        metric["last_called"] = datetime.now().isoformat()
        if not success:
            metric["errors"] += 1

        self.history.append({
            "operation": operation,
            "timestamp": datetime.now().isoformat(),
            "duration": duration,
            "success": success,
            "error": error,
        })
        if len(self.history) > 1000:
            self.history = self.history[-1000:]

        logger.debug(f"Recorded metric: {operation}, duration={duration:.4f}s, success={success}")

    @contextmanager
    def timed(self, operation: str) -> Iterator[None]:
        """Time a block and record it, marking it failed if it raises."""
        start = time.perf_counter()
        try:
            yield
        except Exception as e:
            self.record(operation, time.perf_counter() - start, success=False, error=str(e))
            raise
        self.record(operation, time.perf_counter() - start)

    def get_metrics(self) -> Dict[str, Any]:
        """Get all collected metrics.

        Returns:
            Dictionary of metrics, with the last ten failed operations under recent_errors
        """
        uptime = time.time() - self.start_time
        total = sum(m["count"] for m in self.metrics.values())
        errors = sum(m["errors"] for m in self.metrics.values())

        operations = {}
        for name, metric in self.metrics.items():
            avg_duration = metric["total_duration"] / metric["count"] if metric["count"] > 0 else 0
            operations[name] = {
                "count": metric["count"],
                "average_duration": round(avg_duration, 6),
                "total_duration": round(metric["total_duration"], 6),
                "error_count": metric["errors"],
                "last_called": metric["last_called"],
            }

        return {
            "uptime_seconds": round(uptime, 2),
            "total_operations": total,
            "total_errors": errors,
            "operations": operations,
            "recent_errors": [h for h in self.history if not h["success"]][-10:],
            "timestamp": datetime.now().isoformat(),
        }

    def export_to_file(self, filepath: str = "metrics.json"):
        """Export metrics to a JSON file.

        Args:
            filepath: Path to export file
        """
        try:
            with open(filepath, "w") as f:
                json.dump(self.get_metrics(), f, indent=2)
            logger.info(f"Metrics exported to {filepath}")
        except OSError as e:
            logger.error(f"Failed to export metrics: {e}")

    def reset(self):
        """Reset all metrics."""
        self.metrics.clear()
        self.history.clear()
        self.start_time = time.time()
        logger.debug("Metrics reset")


# Global instance
metrics_collector = MetricsCollector()
