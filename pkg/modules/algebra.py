"""
Complex matrix algebra, unital inclusions B ⊆ D and matrix upper half-plane utilities.

Elements of B = M_{d_B} and D = M_{d_D} are plain complex numpy arrays. Matrix
units E_ij are enumerated row-major, so the basis index of E_ij is i*d + j.
"""
import functools
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .config import config
from .guardrails import DimensionException, SingularityException, PreconditionException

logger = logging.getLogger(__name__)


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce input to a finite square complex matrix.

    Args:
        a: Array-like input
        name: Label used in error messages

    Returns:
        Complex128 square array

    Raises:
        DimensionException: If the input is not a finite square matrix
    """
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionException(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionException(f"{name} has non-finite entries")
    return arr


def matrix_units(d: int) -> np.ndarray:
    """Matrix-unit basis of M_d as an array of shape (d*d, d, d)."""
    return np.eye(d * d, dtype=complex).reshape(d * d, d, d)


def unit_coordinates(b: np.ndarray) -> np.ndarray:
    """Coordinates of b in the matrix-unit basis (row-major flattening)."""
    return np.asarray(b, dtype=complex).reshape(-1)


def adjoint_index(alpha: int, d: int) -> int:
    """Basis index of E_ij* = E_ji."""
    i, j = divmod(alpha, d)
    return j * d + i


def op_norm(a: np.ndarray) -> float:
    """Operator (spectral) norm."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def real_part(a: np.ndarray) -> np.ndarray:
    """Re a = (a + a*)/2."""
    return (a + a.conj().T) / 2


def imag_part(a: np.ndarray) -> np.ndarray:
    """Im a = (a - a*)/2i."""
    return (a - a.conj().T) / 2j


def min_eigenvalue(h: np.ndarray) -> float:
    """Least eigenvalue of the Hermitian part of h."""
    return float(linalg.eigvalsh(real_part(h))[0])


def tolerance_for(*operands: np.ndarray) -> float:
    """Default identity tolerance scaled by operand norms."""
    scale = max((float(np.max(np.abs(x))) for x in operands if np.size(x)), default=0.0)
    return config.tolerance * (1.0 + scale)


def is_selfadjoint(a: np.ndarray, tol: Optional[float] = None) -> bool:
    """Check ‖a − a*‖ ≤ tol·‖a‖ (absolute floor for the zero matrix)."""
    tol = config.tolerance if tol is None else tol
    norm = np.linalg.norm(a)
    return bool(np.linalg.norm(a - a.conj().T) <= tol * max(norm, 1.0))


def direct_sum(*blocks: np.ndarray) -> np.ndarray:
    """Block-diagonal direct sum of square matrices."""
    return linalg.block_diag(*blocks).astype(complex)


@dataclass(frozen=True)
class InclusionSpec:
    """Unital *-homomorphism ι: M_{d_B} → M_{d_D}, stored by its images of matrix units."""
    d_B: int
    d_D: int
    units: np.ndarray = field(repr=False, compare=False)
    label: str = "identity"

    @classmethod
    def identity(cls, d: int) -> "InclusionSpec":
        """Identity inclusion B = D."""
        return cls(d, d, matrix_units(d), "identity")

    @classmethod
    def block_diagonal(cls, d_B: int, copies: int) -> "InclusionSpec":
        """Amplification b ↦ b ⊕ … ⊕ b into M_{copies·d_B}."""
        if copies < 1:
            raise DimensionException("block-diagonal inclusion needs at least one copy")
        units = np.stack([np.kron(np.eye(copies), e) for e in matrix_units(d_B)]).astype(complex)
        return cls(d_B, d_B * copies, units, f"block_diagonal({copies})")

    @functools.cached_property
    def is_identity(self) -> bool:
        """Whether ι maps every matrix unit to itself, whatever the label."""
        return self.d_B == self.d_D and bool(np.allclose(self.units, matrix_units(self.d_B)))

    def same_as(self, other: "InclusionSpec") -> bool:
        """Structural equality of two inclusions."""
        return (self.d_B == other.d_B and self.d_D == other.d_D
                and np.allclose(self.units, other.units))

    def embed(self, b: np.ndarray) -> np.ndarray:
        """ι(b) for b ∈ M_{d_B}."""
        return np.tensordot(unit_coordinates(b), self.units, axes=(0, 0))

    def embed_values(self, tensor: np.ndarray) -> np.ndarray:
        """Apply ι to the trailing (d_B, d_B) axes of a tensor."""
        if self.is_identity:
            return tensor
        lead = tensor.shape[:-2]
        flat = tensor.reshape(lead + (self.d_B * self.d_B,))
        return np.tensordot(flat, self.units, axes=(-1, 0))

    def pullback_values(self, tensor: np.ndarray) -> tuple:
        """Least-squares ι⁻¹ on the trailing (d_D, d_D) axes.

        Returns:
            (tensor with trailing (d_B, d_B) axes, max residual of re-embedding)
        """
        if self.is_identity:
            return tensor, 0.0
        lead = tensor.shape[:-2]
        design = self.units.reshape(self.d_B * self.d_B, -1).T
        rhs = tensor.reshape((-1, self.d_D * self.d_D)).T
        coords, *_ = np.linalg.lstsq(design, rhs, rcond=None)
        residual = float(np.max(np.abs(design @ coords - rhs))) if rhs.size else 0.0
        pulled = coords.T.reshape(lead + (self.d_B, self.d_B))
        return pulled, residual

    def validate(self, tol: float = 1e-12) -> None:
        """Check unitality, multiplicativity and *-preservation on matrix units.

        Raises:
            DimensionException: If ι is not a unital *-homomorphism to tolerance
        """
        if self.units.shape != (self.d_B * self.d_B, self.d_D, self.d_D):
            raise DimensionException(f"inclusion units have shape {self.units.shape}")
        d = self.d_B
        if np.max(np.abs(self.embed(np.eye(d)) - np.eye(self.d_D))) > tol:
            raise DimensionException("inclusion is not unital")
        for a in range(d * d):
            if np.max(np.abs(self.units[adjoint_index(a, d)] - self.units[a].conj().T)) > tol:
                raise DimensionException("inclusion does not preserve adjoints")
            for b in range(d * d):
                i, j = divmod(a, d)
                k, l = divmod(b, d)
                expected = self.units[i * d + l] if j == k else np.zeros((self.d_D, self.d_D))
                if np.max(np.abs(self.units[a] @ self.units[b] - expected)) > tol:
                    raise DimensionException("inclusion is not multiplicative")


def in_upper_half_plane(a, eps: float) -> bool:
    """Check whether Im a ≥ eps·1.

    Args:
        a: Square matrix
        eps: Required lower bound on the least eigenvalue of Im a

    Returns:
        True iff the least eigenvalue of Im a is at least eps
    """
    a = as_matrix(a, "half-plane argument")
    return min_eigenvalue(imag_part(a)) >= eps


def invert_half_plane(a) -> np.ndarray:
    """Invert an element of the matrix upper half-plane.

    Args:
        a: Square matrix with Im a > 0

    Returns:
        a⁻¹, whose imaginary part is negative definite

    Raises:
        SingularityException: If a is numerically singular
    """
    a = as_matrix(a, "half-plane argument")
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > config.singular_condition:
        raise SingularityException(
            f"matrix is numerically singular (condition {cond:.3e}); half-plane precondition violated"
        )
    return np.linalg.solve(a, np.eye(a.shape[0], dtype=complex))


def inverse_via_imaginary_part(a) -> np.ndarray:
    """Second inversion path through a = √v[(√v)⁻¹u(√v)⁻¹ + i]√v, v = Im a, u = Re a.

    Raises:
        PreconditionException: If Im a is not positive definite
    """
    a = as_matrix(a, "half-plane argument")
    evals, evecs = linalg.eigh(imag_part(a))
    if evals[0] <= 0:
        raise PreconditionException("imaginary part is not positive definite")
    root_inv = (evecs / np.sqrt(evals)) @ evecs.conj().T
    s = root_inv @ real_part(a) @ root_inv
    s_evals, s_evecs = linalg.eigh(real_part(s))
    middle = (s_evecs / (s_evals + 1j)) @ s_evecs.conj().T
    return root_inv @ middle @ root_inv


def random_half_plane_point(rng: np.random.Generator, d: int, floor: float = 0.1,
                            scale: float = 1.0) -> np.ndarray:
    """Random element with Im a ⪰ floor·1."""
    x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    y = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * real_part(x) + 1j * (scale * (y @ y.conj().T) / d + floor * np.eye(d))


def random_selfadjoint(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    """Random selfadjoint matrix with entries of the given scale."""
    x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * real_part(x)


def stack_blocks(blocks: Sequence[Sequence[np.ndarray]]) -> np.ndarray:
    """Assemble an n×n block matrix."""
    return np.block([[np.asarray(b, dtype=complex) for b in row] for row in blocks])
