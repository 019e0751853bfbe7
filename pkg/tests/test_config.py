"""
Unit tests for configuration module.
"""
import pytest
from modules.config import ORDER_CEILING, EngineConfig


@pytest.mark.unit
class TestEngineConfig:
    """Test engine configuration."""

    def test_config_has_required_attributes(self):
        """Test that config has the truncation, tolerance and iteration settings."""
        from modules.config import config

        for name in ("default_order", "max_order", "max_dim", "tolerance", "positivity_slack",
                     "damping", "max_iters", "fixed_point_tol", "seed", "significant_digits"):
            assert hasattr(config, name)

    def test_defaults(self, monkeypatch):
        """Test the documented defaults when no variables are set."""
        for var in ("OVFREE_DEFAULT_ORDER", "OVFREE_MAX_ORDER", "OVFREE_TOL", "OVFREE_DAMPING", "OVFREE_SEED"):
            monkeypatch.delenv(var, raising=False)
        settings = EngineConfig()

        assert settings.default_order == 6
        assert settings.max_order == 8
        assert settings.tolerance == 1e-10
        assert settings.damping == 0.5
        assert settings.seed == 20240611

    def test_environment_override(self, monkeypatch):
        """Test that OVFREE_MAX_ORDER overrides the order guardrail."""
        monkeypatch.setenv("OVFREE_MAX_ORDER", "10")
        assert EngineConfig().max_order == 10

    def test_order_ceiling(self, monkeypatch):
        """Test that the order guardrail cannot exceed the hard ceiling."""
        monkeypatch.setenv("OVFREE_MAX_ORDER", str(ORDER_CEILING + 1))
        with pytest.raises(ValueError, match="OVFREE_MAX_ORDER"):
            EngineConfig()

    def test_damping_range(self, monkeypatch):
        """Test that damping outside (0, 1] is rejected."""
        monkeypatch.setenv("OVFREE_DAMPING", "1.5")
        with pytest.raises(ValueError, match="DAMPING"):
            EngineConfig()

    def test_nonpositive_tolerance(self, monkeypatch):
        """Test that tolerances must be positive."""
        monkeypatch.setenv("OVFREE_TOL", "0")
        with pytest.raises(ValueError, match="tolerance"):
            EngineConfig()

    def test_integer_caps(self, monkeypatch):
        """Test that integer caps must be at least one."""
        monkeypatch.setenv("OVFREE_MAX_LEVEL", "0")
        with pytest.raises(ValueError, match="MAX_LEVEL"):
            EngineConfig()

    def test_as_dict_sorted(self):
        """Test that the settings dump is sorted by name."""
        keys = list(EngineConfig().as_dict())
        assert keys == sorted(keys)
        assert "tail_target" in keys
