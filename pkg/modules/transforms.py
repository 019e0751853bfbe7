"""
Moment, Boolean, free and conditionally free transforms of truncated distributions.

Every transform is an NCSeries tagged with its kind. Extraction runs the
registered triangular equations in the transform direction; the inverse
maps run them in the moment direction.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .algebra import InclusionSpec, adjoint_index, tolerance_for
from .config import config
from .distribution import (
    DistPair,
    OVDistribution,
    distribution_from_tensors,
    least_block_eigenvalue,
    moment_tensors_from_series,
    word_block_matrix,
)
from .guardrails import (
    DimensionException,
    PreconditionException,
    SeriesTypeException,
    StructureException,
    UsageException,
)
from .ncseries import (
    MultiMap,
    NCSeries,
    product_tensor,
    series_mul,
    series_reciprocal,
    solve_triangular,
)
from .types import FactorizationReport, PositivityReport, TransformKind, validate_transform_kind

logger = logging.getLogger(__name__)


# ========== Moment series ==========

def M_series(d: OVDistribution) -> NCSeries:
    """M(b) = 1 + Σ_k μ(X b_1 X ⋯ X b_k), the trailing b_k acting on the right."""
    units = d.inclusion.units
    coeffs = [np.eye(d.d_D, dtype=complex)]
    for k in range(1, d.order + 1):
        coeffs.append(product_tensor(d.moment_tensor(k), units))
    return NCSeries.from_tensors(d.inclusion, coeffs, kind="M")


def distribution_from_series(M: NCSeries, formal: bool = False, bound: Optional[float] = None) -> OVDistribution:
    """Moment maps of a moment series."""
    if np.max(np.abs(M.coeffs[0] - np.eye(M.d_D))) > tolerance_for(M.coeffs[0]):
        raise PreconditionException("moment series must start with 1")
    return distribution_from_tensors(M.inclusion, moment_tensors_from_series(M), formal=formal, bound=bound)


# ========== Transforms ==========

def B_series(d: OVDistribution) -> NCSeries:
    """Boolean transform B = (M − 1)·M⁻¹, so that M − 1 = B·M."""
    M = M_series(d)
    B = series_mul(M - NCSeries.one(d.inclusion, d.order), series_reciprocal(M))
    return B.tagged("B")


def R_series(d: OVDistribution) -> NCSeries:
    """Free transform: the solution of M − 1 = R(b·M(b)).

    Raises:
        SeriesTypeException: If the distribution is not B-valued
    """
    if not d.inclusion.is_identity:
        raise SeriesTypeException("R-transform needs a B-valued distribution (D = B)")
    return solve_triangular("free", [M_series(d)], d.order).tagged("R")


def cR_series(pair: DistPair) -> NCSeries:
    """Conditionally free transform: the solution of (M_μ − 1)·M_ν = M_μ·cR(b·M_ν(b))."""
    return solve_triangular("cfree", [M_series(pair.mu), M_series(pair.nu)], pair.order).tagged("cR")


def transform_of(kind: TransformKind, d) -> NCSeries:
    """Dispatch by transform kind; cR takes a pair."""
    validate_transform_kind(kind)
    if kind == "cR":
        if not isinstance(d, DistPair):
            raise SeriesTypeException("cR-transform needs a pair")
        return cR_series(d)
    d = d.mu if isinstance(d, DistPair) else d
    return {"M": M_series, "B": B_series, "R": R_series}[kind](d)


def moments_from_transform(kind: TransformKind, t: NCSeries, R_nu: Optional[NCSeries] = None,
                           formal: bool = False, bound: Optional[float] = None) -> OVDistribution:
    """Invert a transform back to moments.

    Args:
        kind: 'B', 'R' or 'cR'
        t: Transform series with zero constant term
        R_nu: Free transform of the second coordinate (cR only)
        formal: Flag the result as formal
        bound: Declared uniform bound of the result

    Returns:
        The distribution whose transform is t (first coordinate for cR)

    Raises:
        PreconditionException: If t has a nonzero constant term
    """
    validate_transform_kind(kind)
    if kind == "B":
        M = solve_triangular("boolean", [t], t.order, direction="moments")
    elif kind == "R":
        M = solve_triangular("free", [t], t.order, direction="moments")
    elif kind == "cR":
        if R_nu is None:
            raise UsageException("cR inversion needs the free transform of the second coordinate")
        M_nu = solve_triangular("free", [R_nu], t.order, direction="moments")
        M = solve_triangular("cfree", [t, M_nu], t.order, direction="moments")
    else:
        raise UsageException("moment series is not a transform to invert")
    return distribution_from_series(M, formal=formal, bound=bound)


def pair_from_transforms(cR: NCSeries, R_nu: NCSeries, formal: bool = False) -> DistPair:
    """Both coordinates of a pair from (cR_{μ,ν}, R_ν)."""
    nu = moments_from_transform("R", R_nu, formal=formal)
    mu = moments_from_transform("cR", cR, R_nu=R_nu, formal=formal)
    return DistPair(mu, nu)


# ========== Generating pairs ==========

@dataclass(frozen=True, eq=False)
class GeneratingPair:
    """(γ, σ) with B(b) = [γ + σ(b + bXb + bXbXb + ⋯)]·b.

    sigma[k-1] holds σ(b_1 X b_2 ⋯ X b_k) as a k-linear tensor, k = 1..N−1.
    """
    inclusion: InclusionSpec
    order: int
    gamma: np.ndarray
    sigma: Tuple[np.ndarray, ...]
    residual: float = 0.0

    def __post_init__(self):
        t = self.inclusion.d_D
        if np.shape(self.gamma) != (t, t):
            raise DimensionException("gamma has the wrong shape")
        if len(self.sigma) != self.order - 1:
            raise DimensionException(f"expected {self.order - 1} sigma maps, got {len(self.sigma)}")

    def sigma_map(self, k: int) -> MultiMap:
        return MultiMap(self.sigma[k - 1], self.inclusion.d_B)

    def is_gamma_selfadjoint(self, tol: Optional[float] = None) -> bool:
        tol = tolerance_for(self.gamma) if tol is None else tol
        return float(np.max(np.abs(self.gamma - self.gamma.conj().T))) <= tol

    def hermitian_residual(self) -> float:
        """Max of ‖σ(b_1 X ⋯ X b_k)* − σ(b_k* X ⋯ X b_1*)‖."""
        d = self.inclusion.d_B
        perm = np.array([adjoint_index(a, d) for a in range(d * d)])
        worst = 0.0
        for s in self.sigma:
            slots = s.ndim - 2
            flipped = s.transpose(tuple(reversed(range(slots))) + (slots, slots + 1))
            for axis in range(slots):
                flipped = np.take(flipped, perm, axis=axis)
            worst = max(worst, float(np.max(np.abs(flipped - np.swapaxes(s.conj(), -1, -2)))))
        return worst

    def factorization_report(self) -> FactorizationReport:
        return {"residual": self.residual, "orders": self.order}


def split_trailing_slot(F: NCSeries) -> Tuple[List[np.ndarray], float]:
    """Heads h_k with c_k(b_1..b_k) = h_k(b_1..b_{k-1})·b_k, k = 1..N, and the factorization residual."""
    units = F.inclusion.units
    one = np.eye(F.d_B, dtype=complex).reshape(-1)
    heads = [np.tensordot(F.coeffs[k], one, axes=([k - 1], [0])) for k in range(1, F.order + 1)]
    residual = 0.0
    for k, head in enumerate(heads, start=1):
        residual = max(residual, float(np.max(np.abs(product_tensor(head, units) - F.coeffs[k]))))
    return heads, residual


def extract_generating_pair(B: NCSeries) -> GeneratingPair:
    """Read (γ, σ) off a transform by splitting off its trailing linear slot.

    Raises:
        PreconditionException: If B has a nonzero constant term
        StructureException: If some coefficient does not factor as σ(…)·b_{k+1}
    """
    if np.max(np.abs(B.coeffs[0])) > tolerance_for(B.coeffs[0]):
        raise PreconditionException("transform must have zero constant term")
    split, residual = split_trailing_slot(B)
    if residual > config.structure_tolerance * (1.0 + B.norm()):
        raise StructureException(
            f"transform does not factor with a free trailing slot (residual {residual:.3e})"
        )
    logger.debug(f"Extracted generating pair at order {B.order}, factorization residual {residual:.3e}")
    return GeneratingPair(B.inclusion, B.order, split[0], tuple(split[1:]), residual)


def B_from_pair(p: GeneratingPair, order: Optional[int] = None) -> NCSeries:
    """Expand [γ + σ(b(1 − Xb)⁻¹)]·b to order N."""
    order = p.order if order is None else order
    units = p.inclusion.units
    q, t = p.inclusion.d_B ** 2, p.inclusion.d_D
    coeffs = [np.zeros((t, t), dtype=complex)]
    heads = [p.gamma] + list(p.sigma)
    for k in range(1, order + 1):
        if k - 1 < len(heads):
            coeffs.append(product_tensor(heads[k - 1], units))
        else:
            coeffs.append(np.zeros((q,) * k + (t, t), dtype=complex))
    return NCSeries.from_tensors(p.inclusion, coeffs, kind="B")


def check_generating_pair_cp(p: GeneratingPair, cutoff: int) -> PositivityReport:
    """Truncated complete-positivity test of σ on monomials of degree ≤ cutoff.

    Raises:
        PreconditionException: If σ is not known up to the needed word degree
    """
    if 2 * cutoff + 1 > p.order - 1:
        raise PreconditionException(
            f"cutoff {cutoff} needs σ on words with {2 * cutoff + 1} coefficients, have {p.order - 1}"
        )
    matrix = word_block_matrix(lambda s: p.sigma[s], p.inclusion.d_B, p.inclusion.d_D, cutoff)
    return least_block_eigenvalue(matrix, cutoff)


def largest_cp_cutoff(order: int) -> int:
    """Largest cutoff the generating pair of an order-N transform supports."""
    return max((order - 2) // 2, 0)
