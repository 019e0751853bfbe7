"""
Error types and resource guardrails for the engine.

Every failure mode of the numerical layer is a subclass of OVFreeException so
that the command-line front end can translate it into an exit code.
"""
import logging
from typing import Dict, Any, Optional

from .config import config

logger = logging.getLogger(__name__)

# Bytes per complex128 entry
_ENTRY_BYTES = 16


class OVFreeException(Exception):
    """Base exception for engine errors."""
    exit_code = 3


class DimensionException(OVFreeException):
    """Exception raised when operand shapes or dimensions do not match."""
    pass


class SingularityException(OVFreeException):
    """Exception raised when an element that must be invertible is numerically singular."""
    pass


class PreconditionException(OVFreeException):
    """Exception raised when an operation's documented precondition is violated."""
    pass


class SeriesTypeException(OVFreeException):
    """Exception raised when a series or distribution has the wrong algebra type."""
    pass


class ModelException(OVFreeException):
    """Exception raised when an operator model violates its invariants."""
    pass


class PositivityException(OVFreeException):
    """Exception raised when a map required to be completely positive is not."""
    pass


class StructureException(OVFreeException):
    """Exception raised when a series does not have the required factorized form."""
    pass


class DomainException(OVFreeException):
    """Exception raised for arguments outside an operation's domain."""
    pass


class ConvergenceException(OVFreeException):
    """Exception raised when an iteration exhausts its budget."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class GridException(OVFreeException):
    """Exception raised when a grid point is too close to the spectrum for the series tail."""

    def __init__(self, message: str, point: Any = None, tail_bound: Optional[float] = None):
        super().__init__(message)
        self.point = point
        self.tail_bound = tail_bound


class UsageException(OVFreeException):
    """Exception raised for malformed requests (unknown shapes, unparsable inputs)."""
    exit_code = 2


class ResourceException(OVFreeException):
    """Exception raised when a computation would exceed a resource guardrail."""
    exit_code = 4


def dense_series_bytes(d_B: int, d_D: int, order: int) -> int:
    """Estimate the memory of one dense series of the given shape.

    Args:
        d_B: Source matrix dimension
        d_D: Target matrix dimension
        order: Truncation order

    Returns:
        Size in bytes of all coefficient tensors up to the order
    """
    entries = sum((d_B * d_B) ** k for k in range(order + 1)) * d_D * d_D
    return entries * _ENTRY_BYTES


def _available_memory() -> Optional[int]:
    """Available system memory in bytes, or None when psutil is not installed."""
    try:
        import psutil
        return int(psutil.virtual_memory().available)
    except ImportError:
        return None


class ResourceGuard:
    """Checks requested computations against the configured guardrails."""

    @staticmethod
    def check_series(d_B: int, d_D: int, order: int) -> Dict[str, Any]:
        """Check dense coefficient storage for a series shape.

        Args:
            d_B: Source matrix dimension
            d_D: Target matrix dimension
            order: Truncation order

        Returns:
            Dict with 'allowed' bool and 'error' message if blocked
        """
        if d_B > config.max_dim:
            return {"allowed": False, "error": f"d_B={d_B} exceeds guardrail {config.max_dim}"}
        if order > config.max_order:
            return {
                "allowed": False,
                "error": f"order {order} exceeds guardrail {config.max_order} (set OVFREE_MAX_ORDER to override)",
            }

        required = dense_series_bytes(d_B, d_D, order)
        available = _available_memory()
        if available is not None and required > config.memory_fraction * available:
            return {
                "allowed": False,
                "error": f"series storage needs {required} bytes, {available} available",
            }
        return {"allowed": True, "error": None}

    @staticmethod
    def check_oracle(order: int) -> Dict[str, Any]:
        """Check the 2^N word expansion of the independence oracle."""
        if order > config.max_oracle_order:
            return {
                "allowed": False,
                "error": f"oracle expansion of 2^{order} words exceeds guardrail 2^{config.max_oracle_order}",
            }
        return {"allowed": True, "error": None}

    @staticmethod
    def check_row_length(k_n: int, n_max: Optional[int] = None) -> Dict[str, Any]:
        """Check a triangular-array row length.

        Row powers scale transforms, so the work per row is independent of k_n
        and the bound applies to k_n alone; n_max only labels the message.
        """
        where = f" (array up to n={n_max})" if n_max is not None else ""
        if k_n > config.max_row_length:
            return {"allowed": False, "error": f"row length {k_n}{where} exceeds guardrail {config.max_row_length}"}
        return {"allowed": True, "error": None}

    @staticmethod
    def check_level(level: int) -> Dict[str, Any]:
        """Check an amplification level for fully matricial evaluation."""
        if level > config.max_level:
            return {"allowed": False, "error": f"amplification level {level} exceeds guardrail {config.max_level}"}
        return {"allowed": True, "error": None}


def enforce(result: Dict[str, Any]) -> None:
    """Raise ResourceException for a blocked guardrail check.

    Args:
        result: Output of one of the ResourceGuard checks
    """
    if not result["allowed"]:
        logger.warning(f"Guardrail blocked computation: {result['error']}")
        raise ResourceException(result["error"])
