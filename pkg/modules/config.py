"""
Configuration module for numerical engine settings.
"""
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Hard ceiling for OVFREE_MAX_ORDER overrides (dense tensors grow as (d_B^2)^N)
ORDER_CEILING = 12


class EngineConfig:
    """Configuration class for truncation, tolerances and guardrails."""

    def __init__(self):
        # Truncation settings
        self.default_order = int(os.getenv("OVFREE_DEFAULT_ORDER", "6"))
        self.scalar_order = int(os.getenv("OVFREE_SCALAR_ORDER", "10"))

        # Resource guardrails (OVFREE_MAX_ORDER is the documented CLI override)
        self.max_order = int(os.getenv("OVFREE_MAX_ORDER", "8"))
        self.max_dim = int(os.getenv("OVFREE_MAX_DIM", "3"))
        self.max_oracle_order = int(os.getenv("OVFREE_MAX_ORACLE_ORDER", "8"))
        self.max_row_length = int(os.getenv("OVFREE_MAX_ROW_LENGTH", "1024"))
        self.max_level = int(os.getenv("OVFREE_MAX_LEVEL", "3"))
        self.memory_fraction = float(os.getenv("OVFREE_MEMORY_FRACTION", "0.5"))

        # Tolerances
        self.tolerance = float(os.getenv("OVFREE_TOL", "1e-10"))
        self.positivity_slack = float(os.getenv("OVFREE_POSITIVITY_SLACK", "1e-8"))
        self.structure_tolerance = float(os.getenv("OVFREE_STRUCTURE_TOL", "1e-8"))
        self.singular_condition = float(os.getenv("OVFREE_SINGULAR_COND", "1e12"))
        self.convergence_tol = float(os.getenv("OVFREE_CONVERGENCE_TOL", "1e-6"))
        self.tail_target = float(os.getenv("OVFREE_TAIL_TARGET", "1e-8"))

        # Fixed-point iteration
        self.damping = float(os.getenv("OVFREE_DAMPING", "0.5"))
        self.max_iters = int(os.getenv("OVFREE_MAX_ITERS", "500"))
        self.fixed_point_tol = float(os.getenv("OVFREE_FIXED_POINT_TOL", "1e-12"))

        # Reproducibility and output
        self.seed = int(os.getenv("OVFREE_SEED", "20240611"))
        self.significant_digits = int(os.getenv("OVFREE_SIGNIFICANT_DIGITS", "12"))

        # Performance settings
        self.enable_memo = os.getenv("OVFREE_ENABLE_MEMO", "true").lower() == "true"
        self.memo_max_size = int(os.getenv("OVFREE_MEMO_MAX_SIZE", "200000"))

        # Monitoring settings
        self.enable_metrics = os.getenv("OVFREE_ENABLE_METRICS", "true").lower() == "true"

        self._validate_config()

    def _validate_config(self) -> None:
        """Validate ranges of the configured values."""
        for name in ("default_order", "scalar_order", "max_order", "max_dim",
                     "max_oracle_order", "max_row_length", "max_level", "max_iters",
                     "memo_max_size", "significant_digits"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name.upper()} must be at least 1")

        if self.max_order > ORDER_CEILING:
            raise ValueError(f"OVFREE_MAX_ORDER must not exceed {ORDER_CEILING}")
        if self.default_order > self.max_order:
            raise ValueError("OVFREE_DEFAULT_ORDER must not exceed OVFREE_MAX_ORDER")
        if self.damping <= 0 or self.damping > 1:
            raise ValueError("OVFREE_DAMPING must be in (0, 1]")
        if self.memory_fraction <= 0 or self.memory_fraction > 1:
            raise ValueError("OVFREE_MEMORY_FRACTION must be in (0, 1]")

        for name in ("tolerance", "positivity_slack", "structure_tolerance",
                     "singular_condition", "convergence_tol", "tail_target",
                     "fixed_point_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def as_dict(self) -> dict:
        """Get the effective settings as a plain dictionary."""
        return dict(sorted(vars(self).items()))

    def __str__(self) -> str:
        """String representation of the config."""
        return (f"EngineConfig(default_order={self.default_order}, max_order={self.max_order}, "
                f"max_dim={self.max_dim}, tolerance={self.tolerance})")


# Global config instance
config = EngineConfig()
