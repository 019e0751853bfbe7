"""
Type definitions for the operator-valued probability engine.

This module provides:
- Literal for constrained string values (convolution kinds, transform kinds, ...)
- TypedDict for the report structures returned by checks and harnesses
- Validation functions that turn user strings into the Literal types

Usage:
    from modules.types import ConvolutionKind, PositivityReport
"""
from typing import Literal, TypedDict, List, Dict
from typing_extensions import NotRequired


# ========== Literal Types ==========

# Additive convolutions
ConvolutionKind = Literal['free', 'boolean', 'cfree']

# Series transforms
TransformKind = Literal['M', 'B', 'R', 'cR']

# Which map of an operator model produces the distribution
MapWhich = Literal['E_B', 'theta']

# Registered triangular equation shapes and solve directions
EquationShape = Literal['boolean', 'free', 'cfree']
SolveDirection = Literal['transform', 'moments']

# Built-in distribution families
StandardFamilyName = Literal[
    'point_mass', 'rademacher', 'ov_semicircle', 'scalar_arcsine', 'scalar_free_poisson'
]

# Built-in operator models
ModelName = Literal['point_mass', 'rademacher', 'semicircle', 'two_state', 'random']

# Verification suites run by the CLI
SuiteName = Literal[
    'oracle', 'linearization', 'clt', 'bercovici_pata', 'bp_identities', 'subordination',
    'identities', 'half_plane', 'nc_axioms', 'positivity', 'scalar', 'corollary', 'all'
]

OutputFormat = Literal['json', 'csv']

CheckStatus = Literal['pass', 'fail']


# ========== TypedDict Definitions ==========

class PositivityReport(TypedDict):
    """Least eigenvalue of a block moment matrix."""
    passed: bool
    min_eigenvalue: float
    matrix_size: int
    cutoff: int
    slack: float


class FactorizationReport(TypedDict):
    """Residual of splitting off a trailing linear slot."""
    residual: float
    orders: int


class BBPReport(TypedDict):
    """Series-level residuals of the Bercovici–Pata identities."""
    max_residual: float
    residuals: Dict[str, float]
    passed: bool


class LimitRow(TypedDict):
    """One row of a limit-theorem harness table."""
    n: int
    k_n: int
    order: int
    boolean_distance: float
    free_distance: float
    bp_residual: float
    cp_min_eigenvalue: float
    scaled_moment_distance: float
    uniform_bound_ok: bool


class LimitReport(TypedDict):
    """Convergence scoreboard of a triangular array."""
    kind: str
    rows: List[LimitRow]
    boolean_converged: bool
    free_converged: bool
    scaled_moments_converged: bool
    generating_pair_cp: bool
    monotone_decay: bool
    decay_ratio: float
    final_distance: float
    bp_residual: float
    bp_consistent: bool


class DivisibilityReport(TypedDict):
    """Outcome of the free-power divisibility test."""
    n: int
    boolean_power_cp: PositivityReport
    reconvolution_residual: float
    consistent_with_fid: bool


class SubordinationRow(TypedDict):
    """One grid point of the subordination suite."""
    b: str
    n_fold: int
    iterations: int
    residual: float
    min_eig_im_omega_minus_im_b: float
    tail_bound: float
    g_subordination_residual: float
    h_cfree_residual: float
    h_cfree_bound: float
    two_variable_residual: float
    two_variable_bound: float
    frak_h_residual: float
    boolean_power_residual: float
    boolean_power_bound: float
    phi_additivity_residual: float
    passed: bool
    model: NotRequired[str]


class ScalarHomomorphismReport(TypedDict):
    """Residuals of the scalar multiplicative Bercovici–Pata checks."""
    shift_lemma_residual: float
    homomorphism_residual: float
    single_shift_residual: float
    passed: bool


class CheckResult(TypedDict):
    """One verification check (a CSV row of the verify command)."""
    suite: str
    check: str
    residual: float
    threshold: float
    status: CheckStatus
    detail: NotRequired[str]


# ========== Type Aliases ==========

ResidualMap = Dict[str, float]
Grid = List[complex]


# ========== Validation Functions ==========

def _validate(value: str, valid: tuple, label: str) -> str:
    if value not in valid:
        raise ValueError(
            f"Invalid {label}: {value}. "
            f"Must be one of: {', '.join(valid)}"
        )
    return value


def validate_convolution_kind(kind: str) -> ConvolutionKind:
    """
    Validate and return a convolution kind.

    Args:
        kind: Kind string to validate

    Returns:
        Validated ConvolutionKind

    Raises:
        ValueError: If kind is invalid
    """
    return _validate(kind, ('free', 'boolean', 'cfree'), 'convolution kind')  # type: ignore


def validate_transform_kind(kind: str) -> TransformKind:
    """Validate and return a transform kind."""
    return _validate(kind, ('M', 'B', 'R', 'cR'), 'transform kind')  # type: ignore


def validate_map_which(which: str) -> MapWhich:
    """Validate and return the model map selector."""
    return _validate(which, ('E_B', 'theta'), 'model map')  # type: ignore


def validate_equation_shape(shape: str) -> EquationShape:
    """Validate and return a registered equation shape."""
    return _validate(shape, ('boolean', 'free', 'cfree'), 'equation shape')  # type: ignore


def validate_suite_name(name: str) -> SuiteName:
    """Validate and return a verification suite name."""
    valid: tuple = (
        'oracle', 'linearization', 'clt', 'bercovici_pata', 'bp_identities', 'subordination',
        'identities', 'half_plane', 'nc_axioms', 'positivity', 'scalar', 'corollary', 'all'
    )
    return _validate(name, valid, 'suite')  # type: ignore


def validate_output_format(fmt: str) -> OutputFormat:
    """Validate and return an output format."""
    return _validate(fmt, ('json', 'csv'), 'output format')  # type: ignore


# ========== Exports ==========

__all__ = [
    # Literal types
    'ConvolutionKind',
    'TransformKind',
    'MapWhich',
    'EquationShape',
    'SolveDirection',
    'StandardFamilyName',
    'ModelName',
    'SuiteName',
    'OutputFormat',
    'CheckStatus',
    # TypedDict
    'PositivityReport',
    'FactorizationReport',
    'BBPReport',
    'LimitRow',
    'LimitReport',
    'DivisibilityReport',
    'SubordinationRow',
    'ScalarHomomorphismReport',
    'CheckResult',
    # Type aliases
    'ResidualMap',
    'Grid',
    # Validation
    'validate_convolution_kind',
    'validate_transform_kind',
    'validate_map_which',
    'validate_equation_shape',
    'validate_suite_name',
    'validate_output_format',
]
