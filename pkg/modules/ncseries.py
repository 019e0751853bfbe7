"""
Truncated noncommutative power series over matrix algebras.

A series F(b) = c_0 + Σ_{k≤N} c_k(b,…,b) stores its order-k coefficient as a
dense tensor of shape (d_B²,)*k + (d_D, d_D): entry [α_1,…,α_k] is the value
c_k(E_{α_1},…,E_{α_k}) on matrix units. Evaluation on general arguments is the
multilinear basis expansion, and evaluation on n×n block matrices is the
canonical fully matricial extension (sum over index paths).
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .algebra import InclusionSpec, as_matrix, matrix_units, tolerance_for
from .config import config
from .guardrails import (
    DimensionException,
    PreconditionException,
    SeriesTypeException,
    SingularityException,
    UsageException,
    ResourceGuard,
    enforce,
)
from .types import EquationShape, SolveDirection, validate_equation_shape

logger = logging.getLogger(__name__)


def _frozen(tensor: np.ndarray) -> np.ndarray:
    arr = np.array(tensor, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MultiMap:
    """k-linear map M_{d_B}^k → M_{d_D} stored on matrix-unit tuples."""
    tensor: np.ndarray
    d_B: int

    def __post_init__(self):
        object.__setattr__(self, "tensor", _frozen(self.tensor))
        q = self.d_B * self.d_B
        if self.tensor.ndim < 2 or any(s != q for s in self.tensor.shape[:-2]):
            raise DimensionException(f"tensor shape {self.tensor.shape} does not match d_B={self.d_B}")

    @property
    def arity(self) -> int:
        return self.tensor.ndim - 2

    @property
    def d_D(self) -> int:
        return self.tensor.shape[-1]

    @classmethod
    def zeros(cls, arity: int, d_B: int, d_D: int) -> "MultiMap":
        return cls(np.zeros((d_B * d_B,) * arity + (d_D, d_D), dtype=complex), d_B)

    def __call__(self, *args: np.ndarray) -> np.ndarray:
        """Evaluate on arbitrary arguments by multilinear expansion."""
        if len(args) != self.arity:
            raise DimensionException(f"expected {self.arity} arguments, got {len(args)}")
        result = self.tensor
        for b in args:
            b = as_matrix(b, "argument")
            if b.shape != (self.d_B, self.d_B):
                raise DimensionException(f"argument has shape {b.shape}, expected ({self.d_B}, {self.d_B})")
            result = np.tensordot(b.reshape(-1), result, axes=(0, 0))
        return np.array(result)

    def norm(self) -> float:
        """Max entrywise absolute value."""
        return float(np.max(np.abs(self.tensor))) if self.tensor.size else 0.0


def product_tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficient product (b_1..b_i, b_{i+1}..b_k) ↦ A(b_1..b_i)·B(b_{i+1}..b_k)."""
    t = a.shape[-1]
    lead = a.shape[:-2] + b.shape[:-2]
    out = np.einsum("xij,yjk->xyik", a.reshape(-1, t, t), b.reshape(-1, t, t))
    return out.reshape(lead + (t, t))


@lru_cache(maxsize=None)
def compositions(total: int, parts: int) -> Tuple[Tuple[int, ...], ...]:
    """All ordered compositions of total into the given number of positive parts."""
    if parts == 1:
        return ((total,),) if total >= 1 else ()
    out = []
    for first in range(1, total - parts + 2):
        for rest in compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


def plug_slots(coefficient: np.ndarray, inner: Sequence[np.ndarray]) -> np.ndarray:
    """Substitute B-valued multilinear maps into the slots of a coefficient tensor.

    Args:
        coefficient: Tensor of arity j (shape (q,)*j + (t, t))
        inner: j tensors, the l-th of shape (q,)*k_l + (q,) giving coordinates
            of a B-valued k_l-linear map

    Returns:
        Tensor of arity Σ k_l
    """
    result = coefficient
    pos = 0
    for w in inner:
        k = w.ndim - 1
        result = np.tensordot(result, w, axes=([pos], [k]))
        result = np.moveaxis(result, list(range(result.ndim - k, result.ndim)), list(range(pos, pos + k)))
        pos += k
    return result


@dataclass(frozen=True, eq=False)
class NCSeries:
    """Truncated noncommutative power series with coefficients on matrix units."""
    inclusion: InclusionSpec
    order: int
    coeffs: Tuple[np.ndarray, ...]
    kind: str = "series"

    def __post_init__(self):
        if len(self.coeffs) != self.order + 1:
            raise DimensionException(f"expected {self.order + 1} coefficients, got {len(self.coeffs)}")
        q, t = self.inclusion.d_B ** 2, self.inclusion.d_D
        for k, c in enumerate(self.coeffs):
            if c.shape != (q,) * k + (t, t):
                raise DimensionException(f"coefficient {k} has shape {c.shape}")
        object.__setattr__(self, "coeffs", tuple(_frozen(c) for c in self.coeffs))

    # ----- constructors -----

    @classmethod
    def from_tensors(cls, inclusion: InclusionSpec, tensors: Sequence[np.ndarray], kind: str = "series") -> "NCSeries":
        enforce(ResourceGuard.check_series(inclusion.d_B, inclusion.d_D, len(tensors) - 1))
        return cls(inclusion, len(tensors) - 1, tuple(tensors), kind)

    @classmethod
    def zero(cls, inclusion: InclusionSpec, order: int, kind: str = "series") -> "NCSeries":
        q, t = inclusion.d_B ** 2, inclusion.d_D
        return cls.from_tensors(inclusion, [np.zeros((q,) * k + (t, t), dtype=complex) for k in range(order + 1)], kind)

    @classmethod
    def constant(cls, inclusion: InclusionSpec, order: int, value: np.ndarray) -> "NCSeries":
        zero = cls.zero(inclusion, order)
        return zero.with_coefficient(0, value)

    @classmethod
    def one(cls, inclusion: InclusionSpec, order: int) -> "NCSeries":
        return cls.constant(inclusion, order, np.eye(inclusion.d_D, dtype=complex))

    @classmethod
    def variable(cls, inclusion: InclusionSpec, order: int) -> "NCSeries":
        """The series W(b) = ι(b)."""
        zero = cls.zero(inclusion, order)
        return zero.with_coefficient(1, inclusion.units) if order >= 1 else zero

    # ----- accessors -----

    @property
    def d_B(self) -> int:
        return self.inclusion.d_B

    @property
    def d_D(self) -> int:
        return self.inclusion.d_D

    def coefficient(self, k: int) -> MultiMap:
        return MultiMap(self.coeffs[k], self.d_B)

    def with_coefficient(self, k: int, tensor: np.ndarray) -> "NCSeries":
        coeffs = list(self.coeffs)
        coeffs[k] = np.asarray(tensor, dtype=complex)
        return NCSeries(self.inclusion, self.order, tuple(coeffs), self.kind)

    def tagged(self, kind: str) -> "NCSeries":
        return NCSeries(self.inclusion, self.order, self.coeffs, kind)

    def truncate(self, order: int) -> "NCSeries":
        return NCSeries(self.inclusion, order, self.coeffs[: order + 1], self.kind)

    # ----- linear structure -----

    def _check_compatible(self, other: "NCSeries") -> None:
        if self.order != other.order:
            raise DimensionException(f"series orders differ: {self.order} vs {other.order}")
        if not self.inclusion.same_as(other.inclusion):
            raise DimensionException("series have different inclusions")

    def __add__(self, other: "NCSeries") -> "NCSeries":
        self._check_compatible(other)
        return NCSeries(self.inclusion, self.order, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.kind)

    def __sub__(self, other: "NCSeries") -> "NCSeries":
        self._check_compatible(other)
        return NCSeries(self.inclusion, self.order, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)), self.kind)

    def scale(self, t: complex) -> "NCSeries":
        return NCSeries(self.inclusion, self.order, tuple(t * c for c in self.coeffs), self.kind)

    def max_difference(self, other: "NCSeries") -> float:
        """Max over coefficient tensors of the entrywise absolute difference."""
        self._check_compatible(other)
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.coeffs, other.coeffs))

    def norm(self) -> float:
        return max(float(np.max(np.abs(c))) for c in self.coeffs)

    def allclose(self, other: "NCSeries", tol: Optional[float] = None) -> bool:
        if tol is None:
            tol = config.tolerance * (1.0 + max(self.norm(), other.norm()))
        return self.max_difference(other) <= tol

    # ----- B-valued views -----

    def pulled_back(self) -> "NCSeries":
        """The same series viewed as B-valued (identity inclusion).

        Raises:
            SeriesTypeException: If some coefficient is not valued in ι(B)
        """
        if self.inclusion.is_identity:
            return self
        tensors = []
        for c in self.coeffs:
            pulled, residual = self.inclusion.pullback_values(c)
            if residual > tolerance_for(c):
                raise SeriesTypeException("series is not valued in ι(B)")
            tensors.append(pulled)
        return NCSeries(InclusionSpec.identity(self.d_B), self.order, tuple(tensors), self.kind)

    def is_into_B(self) -> bool:
        try:
            self.pulled_back()
            return True
        except SeriesTypeException:
            return False

    def embedded(self, inclusion: InclusionSpec) -> "NCSeries":
        """Push a B-valued series into D through ι."""
        if not self.inclusion.is_identity or self.d_B != inclusion.d_B:
            raise SeriesTypeException("only B-valued series can be embedded")
        if inclusion.is_identity:
            return self
        return NCSeries(inclusion, self.order, tuple(inclusion.embed_values(c) for c in self.coeffs), self.kind)

    def slot_coordinates(self) -> List[np.ndarray]:
        """B-valued coefficients with their value axes flattened to matrix-unit coordinates."""
        series = self.pulled_back()
        q = self.d_B * self.d_B
        return [c.reshape(c.shape[:-2] + (q,)) for c in series.coeffs]

    # ----- evaluation -----

    def evaluate(self, b: np.ndarray) -> np.ndarray:
        """Truncated sum Σ_k c_k(b,…,b) at a level-1 point."""
        return evaluate_amplified(self, as_matrix(b), 1)


# ========== Products and inverses ==========

def series_mul(F: NCSeries, G: NCSeries) -> NCSeries:
    """Cauchy product (F·G)_k = Σ_{i+j=k} c_i^F(b_1..b_i)·c_j^G(b_{i+1}..b_k), truncated at N."""
    F._check_compatible(G)
    coeffs = []
    for k in range(F.order + 1):
        acc = np.zeros_like(F.coeffs[k])
        for i in range(k + 1):
            acc = acc + product_tensor(F.coeffs[i], G.coeffs[k - i])
        coeffs.append(acc)
    return NCSeries(F.inclusion, F.order, tuple(coeffs))


def series_reciprocal(F: NCSeries) -> NCSeries:
    """Right inverse G with F·G = 1 up to order N.

    Raises:
        SingularityException: If the constant term is singular
    """
    c0 = F.coeffs[0]
    cond = np.linalg.cond(c0)
    if not np.isfinite(cond) or cond > config.singular_condition:
        raise SingularityException(f"constant term is singular (condition {cond:.3e})")
    c0_inv = np.linalg.inv(c0)
    coeffs = [c0_inv]
    for k in range(1, F.order + 1):
        acc = np.zeros_like(F.coeffs[k])
        for i in range(1, k + 1):
            acc = acc + product_tensor(F.coeffs[i], coeffs[k - i])
        coeffs.append(-np.einsum("ij,...jk->...ik", c0_inv, acc))
    return NCSeries(F.inclusion, F.order, tuple(coeffs))


# ========== Composition ==========

def _compose_order(F: NCSeries, inner: Sequence[np.ndarray], k: int, max_arity: Optional[int] = None) -> np.ndarray:
    """Order-k coefficient of F∘W from W's slot coordinates (inner[m] for m ≥ 1)."""
    q, t = F.d_B ** 2, F.d_D
    top = k if max_arity is None else min(k, max_arity)
    acc = np.zeros((q,) * k + (t, t), dtype=complex)
    for j in range(1, top + 1):
        if not np.any(F.coeffs[j]):
            continue
        for parts in compositions(k, j):
            acc = acc + plug_slots(F.coeffs[j], [inner[p] for p in parts])
    return acc


def series_compose(F: NCSeries, W: NCSeries) -> NCSeries:
    """Substitution F∘W for W with zero constant term and values in ι(B).

    Raises:
        PreconditionException: If W has a nonzero constant term
        SeriesTypeException: If W is not into-B
    """
    if F.order != W.order or F.d_B != W.d_B:
        raise DimensionException("composition requires equal order and source dimension")
    if np.max(np.abs(W.coeffs[0])) > tolerance_for(W.coeffs[0]):
        raise PreconditionException("inner series must have zero constant term")
    inner = W.slot_coordinates()
    coeffs = [np.array(F.coeffs[0])]
    for k in range(1, F.order + 1):
        coeffs.append(_compose_order(F, inner, k))
    return NCSeries(F.inclusion, F.order, tuple(coeffs))


def right_multiplied_variable(M: NCSeries) -> NCSeries:
    """The B-valued series W(b) = b·M(b) for a B-valued M with M(0) = 1."""
    if not M.inclusion.is_identity:
        raise SeriesTypeException("b·M(b) needs a B-valued series")
    units = matrix_units(M.d_B)
    coeffs = [np.zeros_like(M.coeffs[0])]
    for k in range(1, M.order + 1):
        coeffs.append(product_tensor(units, M.coeffs[k - 1]))
    return NCSeries(M.inclusion, M.order, tuple(coeffs))


# ========== Triangular functional equations ==========

def _require_identity(series: NCSeries, what: str) -> None:
    if not series.inclusion.is_identity:
        raise SeriesTypeException(f"{what} must be B-valued (D = B)")


def solve_triangular(shape: EquationShape, knowns: Sequence[NCSeries], order: int,
                     direction: SolveDirection = "transform") -> NCSeries:
    """Solve one of the registered lowest-order-first functional equations.

    Shapes (H the transform, M moment series):
        boolean: M − 1 = H·M
        free:    M − 1 = H(b·M)
        cfree:   (M_μ − 1)·M_ν = M_μ·H(b·M_ν)

    Args:
        shape: Equation shape name
        knowns: [M] for boolean/free transform direction, [H] for their moment
            direction, [M_μ, M_ν] or [H, M_ν] for cfree
        order: Truncation order N
        direction: 'transform' solves for H, 'moments' solves for M

    Returns:
        The unique truncated solution

    Raises:
        UsageException: For unregistered shapes or directions
    """
    try:
        validate_equation_shape(shape)
    except ValueError as e:
        raise UsageException(str(e))
    if direction not in ("transform", "moments"):
        raise UsageException(f"Invalid direction '{direction}'. Must be 'transform' or 'moments'")
    expected = 2 if shape == "cfree" else 1
    if len(knowns) != expected:
        raise UsageException(f"equation '{shape}' needs {expected} known series, got {len(knowns)}")
    for s in knowns:
        if s.order != order:
            raise DimensionException(f"known series has order {s.order}, expected {order}")

    logger.debug(f"Solving {shape} equation for {direction} at order {order}")
    solver = _SOLVERS[(shape, direction)]
    return solver(*knowns)


def _boolean_transform(M: NCSeries) -> NCSeries:
    H = [np.zeros_like(M.coeffs[0])]
    for k in range(1, M.order + 1):
        acc = np.array(M.coeffs[k])
        for i in range(1, k):
            acc = acc - product_tensor(H[i], M.coeffs[k - i])
        H.append(acc)
    return NCSeries(M.inclusion, M.order, tuple(H))


def _boolean_moments(H: NCSeries) -> NCSeries:
    _check_zero_constant(H)
    M = [np.eye(H.d_D, dtype=complex)]
    for k in range(1, H.order + 1):
        acc = np.zeros_like(H.coeffs[k])
        for i in range(1, k + 1):
            acc = acc + product_tensor(H.coeffs[i], M[k - i])
        M.append(acc)
    return NCSeries(H.inclusion, H.order, tuple(M))


def _free_transform(M: NCSeries) -> NCSeries:
    _require_identity(M, "free moment series")
    inner = right_multiplied_variable(M).slot_coordinates()
    H = NCSeries.zero(M.inclusion, M.order)
    for k in range(1, M.order + 1):
        H = H.with_coefficient(k, M.coeffs[k] - _compose_order(H, inner, k, max_arity=k - 1))
    return H


def _free_moments(H: NCSeries) -> NCSeries:
    _require_identity(H, "free transform")
    _check_zero_constant(H)
    M = NCSeries.one(H.inclusion, H.order)
    for k in range(1, H.order + 1):
        inner = right_multiplied_variable(M).slot_coordinates()
        M = M.with_coefficient(k, _compose_order(H, inner, k))
    return M


def _cfree_transform(M_mu: NCSeries, M_nu: NCSeries) -> NCSeries:
    _require_identity(M_nu, "second coordinate")
    if M_mu.d_B != M_nu.d_B:
        raise DimensionException("pair coordinates must share d_B")
    inc = M_mu.inclusion
    inner = right_multiplied_variable(M_nu).slot_coordinates()
    nu_D = M_nu.embedded(inc)
    L = series_mul(M_mu - NCSeries.one(inc, M_mu.order), nu_D)
    H = NCSeries.zero(inc, M_mu.order)
    C = [np.zeros_like(M_mu.coeffs[0])]
    for k in range(1, M_mu.order + 1):
        lower = _compose_order(H, inner, k, max_arity=k - 1)
        acc = L.coeffs[k] - lower
        for i in range(1, k):
            acc = acc - product_tensor(M_mu.coeffs[i], C[k - i])
        H = H.with_coefficient(k, acc)
        C.append(acc + lower)
    return H


def _cfree_moments(H: NCSeries, M_nu: NCSeries) -> NCSeries:
    _require_identity(M_nu, "second coordinate")
    _check_zero_constant(H)
    inc = H.inclusion
    W = right_multiplied_variable(M_nu)
    C = series_compose(H, W)
    nu_D = M_nu.embedded(inc)
    M = [np.eye(inc.d_D, dtype=complex)]
    for k in range(1, H.order + 1):
        acc = np.zeros_like(H.coeffs[k])
        for i in range(0, k):
            acc = acc + product_tensor(M[i], C.coeffs[k - i])
        for i in range(1, k):
            acc = acc - product_tensor(M[i], nu_D.coeffs[k - i])
        M.append(acc)
    return NCSeries(inc, H.order, tuple(M))


def _check_zero_constant(H: NCSeries) -> None:
    if np.max(np.abs(H.coeffs[0])) > tolerance_for(H.coeffs[0]):
        raise PreconditionException("transform must have zero constant term")


_SOLVERS = {
    ("boolean", "transform"): _boolean_transform,
    ("boolean", "moments"): _boolean_moments,
    ("free", "transform"): _free_transform,
    ("free", "moments"): _free_moments,
    ("cfree", "transform"): _cfree_transform,
    ("cfree", "moments"): _cfree_moments,
}


# ========== Fully matricial evaluation ==========

def block_coordinates(a: np.ndarray, d: int) -> np.ndarray:
    """View an (n·d)×(n·d) matrix as A[i, j, α] = coordinate α of block (i, j)."""
    n = a.shape[0] // d
    if a.shape != (n * d, n * d):
        raise DimensionException(f"matrix of shape {a.shape} is not an n×n block matrix over M_{d}")
    return a.reshape(n, d, n, d).transpose(0, 2, 1, 3).reshape(n, n, d * d)


def assemble_blocks(blocks: np.ndarray) -> np.ndarray:
    """Inverse of a (n, n, t, t) block array to an (n·t)×(n·t) matrix."""
    n, _, t, _ = blocks.shape
    return blocks.transpose(0, 2, 1, 3).reshape(n * t, n * t)


def evaluate_amplified(F: NCSeries, a: np.ndarray, n: int) -> np.ndarray:
    """Truncated value of the fully matricial extension of F at a ∈ M_n(M_{d_B})."""
    A = block_coordinates(a, F.d_B)
    if A.shape[0] != n:
        raise DimensionException(f"argument is at level {A.shape[0]}, expected {n}")
    t = F.d_D
    out = np.zeros((n, n, t, t), dtype=complex)
    out[np.arange(n), np.arange(n)] = F.coeffs[0]
    for k in range(1, F.order + 1):
        T = F.coeffs[k]
        if not np.any(T):
            continue
        P = np.einsum("ija,a...->ij...", A, T)
        for _ in range(k - 1):
            P = np.einsum("ija...,jla->il...", P, A)
        out = out + P
    return assemble_blocks(out)


def is_tensor_nilpotent(a: np.ndarray, d: int, power: int, trials: int = 3,
                        rng: Optional[np.random.Generator] = None) -> bool:
    """Check a^{power} = 0 over the tensor algebra.

    Each slot of the tensor power is paired with an independent random
    functional on M_d; the resulting scalar matrix product vanishes for all
    functionals iff the tensor power vanishes.
    """
    A = block_coordinates(a, d)
    rng = rng or np.random.default_rng(config.seed)
    scale = max(float(np.max(np.abs(A))), 1.0) if A.size else 1.0
    for _ in range(trials):
        prod = np.eye(A.shape[0], dtype=complex)
        for _ in range(power):
            v = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
            prod = prod @ np.tensordot(A, v, axes=(2, 0))
        if np.max(np.abs(prod)) > config.tolerance * scale ** power * (d * d) ** power:
            return False
    return True


def eval_nilpotent(F: NCSeries, a) -> np.ndarray:
    """Exact value of F at a nilpotent block matrix a ∈ M_n(M_{d_B}).

    Raises:
        PreconditionException: If a^{N+1} ≠ 0 over the tensor algebra
    """
    a = as_matrix(a, "nilpotent argument")
    n = a.shape[0] // F.d_B
    if not is_tensor_nilpotent(a, F.d_B, F.order + 1):
        raise PreconditionException(f"argument is not nilpotent of index ≤ {F.order + 1}")
    return evaluate_amplified(F, a, n)


def superdiagonal(blocks: Sequence[np.ndarray]) -> np.ndarray:
    """(n+1)×(n+1) block matrix with b_1,…,b_n on the first superdiagonal."""
    d = blocks[0].shape[0]
    n = len(blocks) + 1
    a = np.zeros((n * d, n * d), dtype=complex)
    for i, b in enumerate(blocks):
        a[i * d:(i + 1) * d, (i + 1) * d:(i + 2) * d] = b
    return a
