"""
Unit tests for the exception hierarchy and resource guardrails.
"""
import pytest

from modules.config import config
from modules.guardrails import (
    ConvergenceException,
    DimensionException,
    GridException,
    OVFreeException,
    ResourceException,
    ResourceGuard,
    UsageException,
    dense_series_bytes,
    enforce,
)


@pytest.mark.unit
class TestExceptions:
    """Test exception attributes and exit codes."""

    def test_exit_codes(self):
        """Test the exit code carried by each exception family."""
        assert UsageException("x").exit_code == 2
        assert ResourceException("x").exit_code == 4
        assert DimensionException("x").exit_code == 3
        assert ConvergenceException("x", 1.0, 3).exit_code == 3

    def test_convergence_report(self):
        """Test that ConvergenceException keeps the last residual and iteration count."""
        e = ConvergenceException("omega did not settle", residual=2.5e-3, iterations=500)
        assert e.residual == 2.5e-3
        assert e.iterations == 500
        assert "500 iterations" in str(e)

    def test_grid_report(self):
        """Test that GridException keeps the offending point and tail bound."""
        e = GridException("too close", point=0.5j, tail_bound=3.0)
        assert e.point == 0.5j
        assert e.tail_bound == 3.0
        assert isinstance(e, OVFreeException)


@pytest.mark.unit
class TestResourceGuard:
    """Test guardrail checks."""

    def test_series_within_limits(self):
        """Test that a small series shape is allowed."""
        assert ResourceGuard.check_series(1, 1, 4)["allowed"]

    def test_series_order_limit(self):
        """Test that orders above the guardrail are blocked with a hint."""
        result = ResourceGuard.check_series(1, 1, config.max_order + 1)
        assert not result["allowed"]
        assert "OVFREE_MAX_ORDER" in result["error"]

    def test_series_dimension_limit(self):
        """Test that d_B above the guardrail is blocked."""
        assert not ResourceGuard.check_series(config.max_dim + 1, 1, 2)["allowed"]

    def test_oracle_limit(self):
        """Test the word-expansion guardrail."""
        assert ResourceGuard.check_oracle(config.max_oracle_order)["allowed"]
        assert not ResourceGuard.check_oracle(config.max_oracle_order + 1)["allowed"]

    def test_row_length_and_level(self):
        """Test row-length and amplification-level guardrails."""
        assert not ResourceGuard.check_row_length(config.max_row_length + 1)["allowed"]
        assert not ResourceGuard.check_level(config.max_level + 1)["allowed"]
        assert ResourceGuard.check_level(1)["allowed"]

    def test_row_length_names_array(self):
        """Test that the bound applies to k_n and the message names n_max."""
        assert ResourceGuard.check_row_length(config.max_row_length, 4 * config.max_row_length)["allowed"]
        blocked = ResourceGuard.check_row_length(config.max_row_length + 1, 256)
        assert "n=256" in blocked["error"]

    def test_enforce_raises(self):
        """Test that enforce turns a blocked check into ResourceException."""
        with pytest.raises(ResourceException):
            enforce(ResourceGuard.check_oracle(config.max_oracle_order + 1))
        enforce(ResourceGuard.check_oracle(1))

    def test_dense_series_bytes(self):
        """Test the storage estimate: sum over k of (d_B^2)^k blocks of d_D^2 complex entries."""
        assert dense_series_bytes(1, 1, 3) == 4 * 16
        assert dense_series_bytes(2, 1, 1) == (1 + 4) * 16
