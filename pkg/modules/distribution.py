"""
Operator-valued distributions as truncated moment data and concrete operator models.

A distribution μ over a unital inclusion B ⊆ D is stored through its mean
μ(X) ∈ D and the multilinear moments m_k(b_1,…,b_{k-1}) = μ(X b_1 X ⋯ b_{k-1} X)
on matrix units of B. An OperatorModel realizes a distribution as
a ↦ map(a) on a finite matrix algebra containing a selfadjoint X.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg, special

from .algebra import (
    InclusionSpec,
    adjoint_index,
    as_matrix,
    is_selfadjoint,
    matrix_units,
    op_norm,
    random_selfadjoint,
)
from .config import config
from .guardrails import (
    DimensionException,
    ModelException,
    PositivityException,
    PreconditionException,
    SeriesTypeException,
    ResourceGuard,
    enforce,
)
from .ncseries import NCSeries, product_tensor, solve_triangular
from .types import MapWhich, PositivityReport, validate_map_which

logger = logging.getLogger(__name__)


def _frozen(tensor: np.ndarray) -> np.ndarray:
    arr = np.array(tensor, dtype=complex)
    arr.setflags(write=False)
    return arr


# ========== Distributions ==========

@dataclass(frozen=True, eq=False)
class OVDistribution:
    """Truncated B-valued distribution with values in D."""
    inclusion: InclusionSpec
    order: int
    mean: np.ndarray
    moments: Tuple[np.ndarray, ...]
    formal: bool = False
    bound: Optional[float] = None

    def __post_init__(self):
        q, t = self.inclusion.d_B ** 2, self.inclusion.d_D
        if self.order < 1:
            raise DimensionException("distribution order must be at least 1")
        if np.shape(self.mean) != (t, t):
            raise DimensionException(f"mean has shape {np.shape(self.mean)}, expected ({t}, {t})")
        if len(self.moments) != self.order - 1:
            raise DimensionException(f"expected {self.order - 1} moment maps, got {len(self.moments)}")
        for k, m in enumerate(self.moments, start=2):
            if m.shape != (q,) * (k - 1) + (t, t):
                raise DimensionException(f"moment m_{k} has shape {m.shape}")
        enforce(ResourceGuard.check_series(self.inclusion.d_B, t, self.order))
        object.__setattr__(self, "mean", _frozen(self.mean))
        object.__setattr__(self, "moments", tuple(_frozen(m) for m in self.moments))

    @property
    def d_B(self) -> int:
        return self.inclusion.d_B

    @property
    def d_D(self) -> int:
        return self.inclusion.d_D

    def moment_tensor(self, k: int) -> np.ndarray:
        """m_k as a tensor of arity k−1 (m_1 is the mean)."""
        if k < 1 or k > self.order:
            raise DimensionException(f"moment order {k} outside 1..{self.order}")
        return self.mean if k == 1 else self.moments[k - 2]

    def moment_tensors(self) -> List[np.ndarray]:
        return [self.moment_tensor(k) for k in range(1, self.order + 1)]

    def truncate(self, order: int) -> "OVDistribution":
        return OVDistribution(self.inclusion, order, self.mean, self.moments[: order - 1], self.formal, self.bound)

    def with_flags(self, formal: Optional[bool] = None, bound: Optional[float] = None) -> "OVDistribution":
        return OVDistribution(self.inclusion, self.order, self.mean, self.moments,
                              self.formal if formal is None else formal,
                              self.bound if bound is None else bound)

    def hermitian_residual(self) -> float:
        """Max of ‖m_k(b_1..b_{k-1})* − m_k(b_{k-1}*..b_1*)‖ over matrix units."""
        perm = np.array([adjoint_index(a, self.d_B) for a in range(self.d_B ** 2)])
        worst = float(np.max(np.abs(self.mean - self.mean.conj().T)))
        for m in self.moments:
            slots = m.ndim - 2
            flipped = m.transpose(tuple(reversed(range(slots))) + (slots, slots + 1))
            for axis in range(slots):
                flipped = np.take(flipped, perm, axis=axis)
            worst = max(worst, float(np.max(np.abs(flipped - np.swapaxes(m.conj(), -1, -2)))))
        return worst

    def is_hermitian(self, tol: Optional[float] = None) -> bool:
        tol = config.tolerance * (1.0 + self.norm()) if tol is None else tol
        return self.hermitian_residual() <= tol

    def norm(self) -> float:
        return max(float(np.max(np.abs(m))) for m in self.moment_tensors())


@dataclass(frozen=True, eq=False)
class DistPair:
    """Pair (μ, ν) with μ over (B, D) and ν over (B, B)."""
    mu: OVDistribution
    nu: OVDistribution

    def __post_init__(self):
        if self.mu.d_B != self.nu.d_B:
            raise DimensionException("pair coordinates must share d_B")
        if self.mu.order != self.nu.order:
            raise DimensionException("pair coordinates must share the truncation order")
        if not self.nu.inclusion.is_identity:
            raise SeriesTypeException("second coordinate of a pair must be B-valued")

    @property
    def order(self) -> int:
        return self.mu.order

    @property
    def d_B(self) -> int:
        return self.mu.d_B


Distribution = Union[OVDistribution, DistPair]


def distribution_from_tensors(inclusion: InclusionSpec, tensors: Sequence[np.ndarray],
                              formal: bool = False, bound: Optional[float] = None) -> OVDistribution:
    """Build a distribution from [m_1, m_2, …, m_N] tensors."""
    return OVDistribution(inclusion, len(tensors), tensors[0], tuple(tensors[1:]), formal, bound)


def zero_distribution(inclusion: InclusionSpec, order: int) -> OVDistribution:
    """The point mass at 0 (all moments vanish)."""
    q, t = inclusion.d_B ** 2, inclusion.d_D
    return distribution_from_tensors(
        inclusion, [np.zeros((q,) * (k - 1) + (t, t), dtype=complex) for k in range(1, order + 1)]
    )


def full_moment_tensor(d: OVDistribution, s: int) -> np.ndarray:
    """(w_0,…,w_s) ↦ μ(w_0 X w_1 ⋯ X w_s) = ι(w_0)·m_s(w_1..w_{s-1})·ι(w_s)."""
    units = d.inclusion.units
    if s == 0:
        return units
    left = np.einsum("aij,...jk->a...ik", units, d.moment_tensor(s))
    return np.einsum("...ij,bjk->...bik", left, units)


def moment_distance(x: OVDistribution, y: OVDistribution, k: Optional[int] = None) -> Union[float, Dict[int, float]]:
    """Max over matrix-unit tuples of ‖m_k^x − m_k^y‖ (operator norm).

    Args:
        x: First distribution
        y: Second distribution
        k: Single order to compare; all orders when omitted

    Returns:
        Distance at order k, or a dict order → distance

    Raises:
        DimensionException: If the shapes or orders differ
    """
    if x.order != y.order or x.d_B != y.d_B or x.d_D != y.d_D:
        raise DimensionException(f"cannot compare distributions of orders {x.order} and {y.order}")

    def _at(order: int) -> float:
        diff = x.moment_tensor(order) - y.moment_tensor(order)
        t = x.d_D
        return float(np.max(np.linalg.norm(diff.reshape(-1, t, t), ord=2, axis=(1, 2))))

    if k is not None:
        return _at(k)
    return {order: _at(order) for order in range(1, x.order + 1)}


def max_moment_distance(x: OVDistribution, y: OVDistribution) -> float:
    """Largest per-order moment distance."""
    return max(moment_distance(x, y).values())


def check_uniform_bound(d: OVDistribution, bound: Optional[float] = None) -> Dict[str, object]:
    """Verify ‖m_k(E_α…)‖ ≤ M^k on the stored moments.

    Args:
        d: Distribution to check
        bound: Declared constant M (defaults to the distribution's own)

    Returns:
        Dict with 'valid', 'bound' and 'worst_ratio' (max ‖m_k‖ / M^k)
    """
    bound = d.bound if bound is None else bound
    if bound is None:
        return {"valid": True, "bound": None, "worst_ratio": 0.0}
    t = d.d_D
    worst = 0.0
    for k in range(1, d.order + 1):
        norms = np.linalg.norm(d.moment_tensor(k).reshape(-1, t, t), ord=2, axis=(1, 2))
        worst = max(worst, float(np.max(norms)) / max(bound, 1e-300) ** k)
    return {"valid": worst <= 1.0 + config.tolerance, "bound": bound, "worst_ratio": worst}


# ========== Positivity ==========

def _structure_constants(d: int) -> np.ndarray:
    """S[α, γ, δ] = 1 iff E_α·E_γ = E_δ."""
    q = d * d
    S = np.zeros((q, q, q))
    for i in range(d):
        for j in range(d):
            for l in range(d):
                S[i * d + j, j * d + l, i * d + l] = 1.0
    return S


def word_block_matrix(word_tensor: Callable[[int], np.ndarray], d_B: int, t: int, cutoff: int) -> np.ndarray:
    """Block matrix [φ(f_i* f_j)] over monomials f = b_0 X b_1 ⋯ X b_p, p ≤ cutoff, b's matrix units.

    Args:
        word_tensor: s ↦ tensor of (w_0,…,w_s) ↦ φ(w_0 X w_1 ⋯ X w_s)
        d_B: Dimension of B
        t: Dimension of the target algebra
        cutoff: Largest monomial degree p
    """
    q = d_B ** 2
    perm = np.array([adjoint_index(a, d_B) for a in range(q)])
    S = _structure_constants(d_B)[perm]
    rows = []
    for p in range(cutoff + 1):
        row = []
        for r in range(cutoff + 1):
            s = p + r
            T = word_tensor(s)
            for axis in range(p):
                T = np.take(T, perm, axis=axis)
            # labels: β_0..β_p = 0..p, γ_0..γ_r = p+1..p+r+1, δ, value axes
            delta, v1, v2 = p + r + 2, p + r + 3, p + r + 4
            labels = [p - l for l in range(p)] + [delta] + [p + 1 + l for l in range(1, r + 1)] + [v1, v2]
            out = list(range(p + 1)) + [p + 1 + l for l in range(r + 1)] + [v1, v2]
            block = np.einsum(T, labels, S, [0, p + 1, delta], out)
            block = block.reshape(q ** (p + 1), q ** (r + 1), t, t).transpose(0, 2, 1, 3)
            row.append(block.reshape(q ** (p + 1) * t, q ** (r + 1) * t))
        rows.append(row)
    return np.block(rows)


def moment_block_matrix(d: OVDistribution, cutoff: int) -> np.ndarray:
    """Block matrix [μ(f_i* f_j)] of a distribution."""
    return word_block_matrix(lambda s: full_moment_tensor(d, s), d.d_B, d.d_D, cutoff)


def least_block_eigenvalue(matrix: np.ndarray, cutoff: int) -> PositivityReport:
    """Positivity report for a block moment matrix."""
    hermitian = (matrix + matrix.conj().T) / 2
    least = float(linalg.eigvalsh(hermitian)[0])
    slack = config.positivity_slack
    logger.debug(f"Block matrix of size {matrix.shape[0]}: least eigenvalue {least:.3e}")
    return {
        "passed": least >= -slack,
        "min_eigenvalue": least,
        "matrix_size": int(matrix.shape[0]),
        "cutoff": cutoff,
        "slack": slack,
    }


def check_moment_positivity(d: OVDistribution, cutoff: int) -> PositivityReport:
    """Least eigenvalue of the block moment matrix over b-spaced words of degree ≤ cutoff.

    Raises:
        PreconditionException: If 2·cutoff exceeds the truncation order
    """
    if 2 * cutoff > d.order:
        raise PreconditionException(f"cutoff {cutoff} needs moments up to order {2 * cutoff}, have {d.order}")
    return least_block_eigenvalue(moment_block_matrix(d, cutoff), cutoff)


# ========== Operator models ==========

def map_matrix(func: Callable[[np.ndarray], np.ndarray], m: int, out: int) -> np.ndarray:
    """Matrix (out², m²) of a linear map M_m → M_out on row-major vectorizations."""
    return np.stack([np.asarray(func(e), dtype=complex).reshape(out * out) for e in matrix_units(m)], axis=1)


def apply_map(L: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Apply a map given by its matrix to the trailing two axes of a."""
    out = int(round(np.sqrt(L.shape[0])))
    lead = a.shape[:-2]
    flat = a.reshape(lead + (a.shape[-1] * a.shape[-2],))
    return np.tensordot(flat, L, axes=(-1, 1)).reshape(lead + (out, out))


def choi_matrix(L: np.ndarray, m: int) -> np.ndarray:
    """Choi matrix Σ_ij E_ij ⊗ Φ(E_ij) of the map with matrix L."""
    out = int(round(np.sqrt(L.shape[0])))
    return L.reshape(out, out, m, m).transpose(2, 0, 3, 1).reshape(m * out, m * out)


def choi_is_completely_positive(choi: np.ndarray, limit: float = 1e-9) -> bool:
    """Checks complete positivity through the least eigenvalue of the Choi matrix."""
    hermitian = (choi + choi.conj().T) / 2
    if np.max(np.abs(choi - choi.conj().T)) > limit * (1.0 + np.max(np.abs(choi))):
        return False
    return bool(linalg.eigvalsh(hermitian)[0] >= -limit * (1.0 + op_norm(hermitian)))


def partial_state_map(rho: np.ndarray, d: int) -> np.ndarray:
    """Matrix of a ↦ Σ_ij ρ_ji a_(ij block) from M_r ⊗ M_d to M_d."""
    r = rho.shape[0]

    def _apply(a: np.ndarray) -> np.ndarray:
        blocks = a.reshape(r, d, r, d)
        return np.einsum("ji,iajb->ab", rho, blocks)

    return map_matrix(_apply, r * d, d)


@dataclass(frozen=True, eq=False)
class OperatorModel:
    """Finite-dimensional realization (M_m, X, E_B, θ) of a pair of distributions."""
    X: np.ndarray
    E_B: np.ndarray
    theta: np.ndarray
    iota_A: InclusionSpec
    inclusion: InclusionSpec
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "X", _frozen(as_matrix(self.X, "X")))
        object.__setattr__(self, "E_B", _frozen(self.E_B))
        object.__setattr__(self, "theta", _frozen(self.theta))

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def d_B(self) -> int:
        return self.iota_A.d_B

    @property
    def bound(self) -> float:
        """Moment growth constant ‖X‖."""
        return op_norm(self.X)

    def map_for(self, which: MapWhich) -> np.ndarray:
        validate_map_which(which)
        return self.E_B if which == "E_B" else self.theta

    def apply(self, which: MapWhich, a: np.ndarray) -> np.ndarray:
        return apply_map(self.map_for(which), a)

    def validate(self, samples: int = 3) -> None:
        """Check the model invariants.

        Raises:
            ModelException: If X, ι_A, E_B or θ violates its invariants
        """
        m, d, t = self.m, self.d_B, self.inclusion.d_D
        if not is_selfadjoint(self.X):
            raise ModelException("X must be selfadjoint")
        if self.iota_A.d_D != m:
            raise ModelException(f"ι_A maps into M_{self.iota_A.d_D}, model has m={m}")
        if self.E_B.shape != (d * d, m * m) or self.theta.shape != (t * t, m * m):
            raise ModelException("map matrices have wrong shapes")
        try:
            self.iota_A.validate()
        except DimensionException as e:
            raise ModelException(f"ι_A is not a unital *-homomorphism: {e}")

        tol = 1e-10
        if np.max(np.abs(self.apply("E_B", np.eye(m)) - np.eye(d))) > tol:
            raise ModelException("E_B is not unital")
        if np.max(np.abs(self.apply("theta", np.eye(m)) - np.eye(t))) > tol:
            raise ModelException("theta is not unital")

        rng = np.random.default_rng(config.seed)
        units = matrix_units(d)
        for _ in range(samples):
            a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
            Ea, Ta = self.apply("E_B", a), self.apply("theta", a)
            scale = tol * (1.0 + np.max(np.abs(a)))
            for b1 in units:
                for b2 in units:
                    inner = self.iota_A.embed(b1) @ a @ self.iota_A.embed(b2)
                    if np.max(np.abs(self.apply("E_B", inner) - b1 @ Ea @ b2)) > scale:
                        raise ModelException("E_B is not a B-bimodule map")
                    expected = self.inclusion.embed(b1) @ Ta @ self.inclusion.embed(b2)
                    if np.max(np.abs(self.apply("theta", inner) - expected)) > scale:
                        raise ModelException("theta is not a B-bimodule map")

        if not choi_is_completely_positive(choi_matrix(self.E_B, m)):
            raise ModelException("E_B is not positive")
        if not choi_is_completely_positive(choi_matrix(self.theta, m)):
            raise ModelException("theta is not completely positive")


def moments_from_model(model: OperatorModel, which: MapWhich, order: int) -> OVDistribution:
    """Moments map(X ι_A(b_1) X ⋯ X) on matrix units by direct matrix products.

    Raises:
        ModelException: If the model violates its invariants
    """
    validate_map_which(which)
    model.validate()
    inclusion = model.inclusion if which == "theta" else InclusionSpec.identity(model.d_B)
    enforce(ResourceGuard.check_series(model.d_B, inclusion.d_D, order))
    L = model.map_for(which)
    UX = np.einsum("aij,jk->aik", model.iota_A.units, model.X)
    words = np.array(model.X)
    tensors = [apply_map(L, words)]
    for _ in range(2, order + 1):
        words = np.einsum("...ij,ajk->...aik", words, UX)
        tensors.append(apply_map(L, words))
    logger.debug(f"Computed {order} moments of model '{model.name}' under {which}")
    return distribution_from_tensors(inclusion, tensors, bound=model.bound)


def model_pair(model: OperatorModel, order: int) -> DistPair:
    """The pair (θ-distribution, E_B-distribution) of a model."""
    return DistPair(moments_from_model(model, "theta", order), moments_from_model(model, "E_B", order))


def _inclusion_matrix(inclusion: InclusionSpec) -> np.ndarray:
    q = inclusion.d_B ** 2
    return inclusion.units.reshape(q, -1).T


def standard_model(name: str, d_B: int = 1, inclusion: Optional[InclusionSpec] = None,
                   beta: Optional[np.ndarray] = None, a: Optional[np.ndarray] = None,
                   size: int = 8, rng: Optional[np.random.Generator] = None,
                   copies: int = 2, scale: float = 1.0) -> OperatorModel:
    """Built-in operator models.

    Args:
        name: point_mass, rademacher, semicircle, two_state or random
        d_B: Dimension of B
        inclusion: B ⊆ D for θ (identity by default)
        beta: Selfadjoint element of B for point_mass
        a: Selfadjoint element of B for semicircle (η(b) = a b a)
        size: Jacobi truncation size for semicircle (moments exact below 2·size)
        rng: Generator for random models
        copies: Ambient multiplicity r for random models (A = M_r ⊗ B)
        scale: Norm scale of X for random models

    Returns:
        Validated OperatorModel
    """
    inclusion = inclusion or InclusionSpec.identity(d_B)
    if inclusion.d_B != d_B:
        raise DimensionException("inclusion source dimension differs from d_B")
    embed = _inclusion_matrix(inclusion)

    if name == "point_mass":
        beta = np.zeros((d_B, d_B)) if beta is None else as_matrix(beta, "beta")
        model = OperatorModel(beta, np.eye(d_B * d_B, dtype=complex), embed,
                              InclusionSpec.identity(d_B), inclusion, name)
    elif name == "rademacher":
        X = np.kron(np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(d_B))
        E = partial_state_map(np.eye(2) / 2, d_B)
        model = OperatorModel(X, E, embed @ E, InclusionSpec.block_diagonal(d_B, 2), inclusion, name)
    elif name == "semicircle":
        a = np.eye(d_B) if a is None else as_matrix(a, "a")
        jacobi = np.diag(np.ones(size - 1), 1) + np.diag(np.ones(size - 1), -1)
        rho = np.zeros((size, size))
        rho[0, 0] = 1.0
        E = partial_state_map(rho, d_B)
        model = OperatorModel(np.kron(jacobi, a), E, embed @ E,
                              InclusionSpec.block_diagonal(d_B, size), inclusion, name)
    elif name == "two_state":
        X = np.kron(np.array([[0.5, 1.0], [1.0, -0.25]]), np.eye(d_B))
        E = partial_state_map(np.eye(2) / 2, d_B)
        rho = np.array([[0.8, 0.0], [0.0, 0.2]])
        model = OperatorModel(X, E, embed @ partial_state_map(rho, d_B),
                              InclusionSpec.block_diagonal(d_B, 2), inclusion, name)
    elif name == "random":
        rng = rng or np.random.default_rng(config.seed)
        X = random_selfadjoint(rng, copies * d_B)
        X = scale * X / op_norm(X)
        E = partial_state_map(_random_density(rng, copies), d_B)
        T = embed @ partial_state_map(_random_density(rng, copies), d_B)
        model = OperatorModel(X, E, T, InclusionSpec.block_diagonal(d_B, copies), inclusion, name)
    else:
        raise ModelException(f"unknown model '{name}'")
    model.validate()
    return model


def _random_density(rng: np.random.Generator, r: int) -> np.ndarray:
    g = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_distribution(rng: np.random.Generator, d_B: int, order: int,
                        copies: int = 3, scale: float = 1.0) -> OVDistribution:
    """Moments of a random positive model (E_B coordinate)."""
    model = standard_model("random", d_B=d_B, rng=rng, copies=copies, scale=scale)
    return moments_from_model(model, "E_B", order)


def random_pair(rng: np.random.Generator, d_B: int, order: int, copies: int = 3,
                scale: float = 1.0, inclusion: Optional[InclusionSpec] = None) -> DistPair:
    """(θ, E_B) moments of a random model; θ and E_B use different states."""
    model = standard_model("random", d_B=d_B, inclusion=inclusion, rng=rng, copies=copies, scale=scale)
    return model_pair(model, order)


# ========== Standard families ==========

def _point_mass_tensors(beta: np.ndarray, order: int) -> List[np.ndarray]:
    d = beta.shape[0]
    units = matrix_units(d)
    tensors = [np.array(beta, dtype=complex)]
    for _ in range(2, order + 1):
        tensors.append(product_tensor(product_tensor(tensors[-1], units), beta))
    return tensors


def _rademacher_tensors(d: int, order: int) -> List[np.ndarray]:
    units = matrix_units(d)
    words = [np.eye(d, dtype=complex)]
    for _ in range(2, order + 1):
        words.append(product_tensor(words[-1], units))
    return [words[k - 1] if k % 2 == 0 else np.zeros_like(words[k - 1]) for k in range(1, order + 1)]


def _scalar_tensors(inclusion: InclusionSpec, values: Sequence[float]) -> List[np.ndarray]:
    if inclusion.d_B != 1:
        raise DimensionException("scalar families need d_B = 1")
    eye = np.eye(inclusion.d_D, dtype=complex)
    return [v * eye.reshape((1,) * (k - 1) + eye.shape) for k, v in enumerate(values, start=1)]


def check_cp_map(eta: np.ndarray, d: int) -> bool:
    """Complete positivity of a map B → B given by its images of matrix units (shape (d², d, d))."""
    L = eta.reshape(d * d, d * d).T
    return choi_is_completely_positive(choi_matrix(L, d))


def conjugation_map(a: np.ndarray) -> np.ndarray:
    """Images of matrix units under b ↦ a* b a."""
    a = as_matrix(a, "a")
    return np.einsum("ji,ajk,kl->ail", a.conj(), matrix_units(a.shape[0]), a)


def make_standard(family: str, inclusion: InclusionSpec, order: int, beta: Optional[np.ndarray] = None,
                  eta: Optional[np.ndarray] = None, lam: float = 1.0) -> OVDistribution:
    """Truncated moments of a built-in family.

    Args:
        family: point_mass, rademacher, ov_semicircle, scalar_arcsine or scalar_free_poisson
        inclusion: B ⊆ D
        order: Truncation order N
        beta: Selfadjoint element of B for point_mass
        eta: Completely positive map B → B for ov_semicircle, as images of matrix units
            (shape (d², d, d)); identity by default
        lam: Rate of the free Poisson law

    Returns:
        The truncated distribution

    Raises:
        PositivityException: If eta is not completely positive
    """
    d = inclusion.d_B
    if family == "point_mass":
        beta = np.zeros((d, d)) if beta is None else as_matrix(beta, "beta")
        tensors = [inclusion.embed_values(t) for t in _point_mass_tensors(beta, order)]
        bound = op_norm(beta)
    elif family == "rademacher":
        tensors = [inclusion.embed_values(t) for t in _rademacher_tensors(d, order)]
        bound = 1.0
    elif family == "ov_semicircle":
        eta = matrix_units(d) if eta is None else np.asarray(eta, dtype=complex)
        if eta.shape != (d * d, d, d):
            raise DimensionException(f"eta must have shape ({d * d}, {d}, {d})")
        if not check_cp_map(eta, d):
            raise PositivityException("eta is not completely positive")
        identity = InclusionSpec.identity(d)
        R = NCSeries.zero(identity, order).with_coefficient(2, product_tensor(eta, matrix_units(d))) \
            if order >= 2 else NCSeries.zero(identity, order)
        M = solve_triangular("free", [R], order, direction="moments")
        tensors = [inclusion.embed_values(t) for t in moment_tensors_from_series(M)]
        # ‖η‖ = ‖η(1)‖ for completely positive η
        bound = 2.0 * np.sqrt(op_norm(np.tensordot(np.eye(d).reshape(-1), eta, axes=(0, 0))))
    elif family == "scalar_arcsine":
        values = [special.comb(k, k // 2, exact=True) if k % 2 == 0 else 0 for k in range(1, order + 1)]
        tensors = _scalar_tensors(inclusion, values)
        bound = 2.0
    elif family == "scalar_free_poisson":
        values = [sum(special.comb(k, j, exact=True) * special.comb(k, j - 1, exact=True) / k * lam ** j
                      for j in range(1, k + 1)) for k in range(1, order + 1)]
        tensors = _scalar_tensors(inclusion, values)
        bound = (1.0 + np.sqrt(lam)) ** 2
    else:
        raise ModelException(f"unknown family '{family}'")
    logger.debug(f"Built standard family {family} at order {order}")
    return distribution_from_tensors(inclusion, tensors, bound=bound)


def moment_tensors_from_series(M: NCSeries) -> List[np.ndarray]:
    """Recover [m_1..m_N] from a moment series by setting the trailing slot to 1."""
    one = np.eye(M.d_B, dtype=complex).reshape(-1)
    return [np.tensordot(M.coeffs[k], one, axes=([k - 1], [0])) for k in range(1, M.order + 1)]


def dilate(d: OVDistribution, c: float) -> OVDistribution:
    """Distribution of c·X: m_k is scaled by c^k."""
    tensors = [c ** k * d.moment_tensor(k) for k in range(1, d.order + 1)]
    bound = None if d.bound is None else abs(c) * d.bound
    return distribution_from_tensors(d.inclusion, tensors, formal=d.formal, bound=bound)


def mixture_with_zero(d: OVDistribution, p: float) -> OVDistribution:
    """(1 − p)·δ_0 + p·d at the level of moments."""
    tensors = [p * d.moment_tensor(k) for k in range(1, d.order + 1)]
    return distribution_from_tensors(d.inclusion, tensors, formal=d.formal, bound=d.bound)
