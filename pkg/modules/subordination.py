"""
Matrix-valued Cauchy transforms of operator models and subordination.

Everything here is numerical: G, F = G⁻¹ and h = F − b are evaluated by
inverting (b − X) inside a model, the subordination functions are found by
damped fixed-point iteration, and the truncated moment series of the
transform-convolved distributions serve as ground truth with an explicit
tail bound.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft

from .algebra import (
    InclusionSpec,
    as_matrix,
    imag_part,
    in_upper_half_plane,
    invert_half_plane,
    min_eigenvalue,
    op_norm,
)
from .config import config
from .convolution import convolve, power
from .distribution import OperatorModel, OVDistribution, apply_map, model_pair, moments_from_model
from .guardrails import (
    ConvergenceException,
    DimensionException,
    DomainException,
    GridException,
    PreconditionException,
    ResourceGuard,
    enforce,
)
from .ncseries import NCSeries, assemble_blocks, block_coordinates, evaluate_amplified
from .transforms import M_series, R_series, split_trailing_slot
from .types import MapWhich, SubordinationRow, validate_map_which

logger = logging.getLogger(__name__)

# Allowance for fixed-point and rounding error on top of the series tail bounds
IDENTITY_SLACK = 1e-9


@dataclass
class FixedPointConfig:
    """Damped Picard iteration settings."""
    damping: float = field(default_factory=lambda: config.damping)
    max_iters: int = field(default_factory=lambda: config.max_iters)
    tol: float = field(default_factory=lambda: config.fixed_point_tol)
    start: str = "b"
    start_scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise DomainException(f"damping must be in (0, 1], got {self.damping}")
        if self.max_iters < 1:
            raise DomainException("max_iters must be at least 1")
        if self.tol <= 0:
            raise DomainException("fixed-point tolerance must be positive")
        if self.start not in ("b", "it"):
            raise DomainException(f"unknown start '{self.start}' (expected 'b' or 'it')")
        if self.start_scale <= 0:
            raise DomainException("start_scale must be positive")

    def initial(self, b: np.ndarray) -> np.ndarray:
        if self.start == "b":
            return np.array(b, dtype=complex)
        return 1j * self.start_scale * np.eye(b.shape[0], dtype=complex)


@dataclass(frozen=True)
class OmegaResult:
    """A solved fixed point with its iteration count and final residual."""
    omega: np.ndarray
    iterations: int
    residual: float


# ========== Levels and amplification ==========

def _level(b: np.ndarray, d: int) -> int:
    n = b.shape[0] // d
    if b.shape != (n * d, n * d) or n < 1:
        raise DimensionException(f"argument of shape {b.shape} is not in M_n(M_{d})")
    enforce(ResourceGuard.check_level(n))
    return n


def amplify(inclusion: InclusionSpec, b: np.ndarray) -> np.ndarray:
    """ι applied blockwise to b ∈ M_n(M_{d_B})."""
    A = block_coordinates(b, inclusion.d_B)
    return assemble_blocks(np.tensordot(A, inclusion.units, axes=(2, 0)))


def _target_inclusion(model: OperatorModel, which: MapWhich) -> InclusionSpec:
    return model.inclusion if which == "theta" else InclusionSpec.identity(model.d_B)


def _reciprocal(G: np.ndarray) -> np.ndarray:
    # G has negative imaginary part, so −G is a half-plane point
    return -invert_half_plane(-G)


# ========== Transforms of models ==========

def cauchy_G(model: OperatorModel, which: MapWhich, b, level: Optional[int] = None,
             eps: Optional[float] = None) -> np.ndarray:
    """G(b) = map_n[(b − X ⊗ 1_n)⁻¹] at amplification level n.

    Args:
        model: Operator model
        which: 'E_B' or 'theta'
        b: Point of the upper half-plane of M_n(B)
        level: Expected level n (inferred from b when omitted)
        eps: Required lower bound on Im b

    Raises:
        PreconditionException: If b is not in the upper half-plane
        ResourceException: If n exceeds the level guardrail
    """
    validate_map_which(which)
    b = as_matrix(b, "b")
    n = _level(b, model.d_B)
    if level is not None and level != n:
        raise DimensionException(f"argument is at level {n}, expected {level}")
    eps = config.tolerance if eps is None else eps
    if not in_upper_half_plane(b, eps):
        raise PreconditionException(
            f"b is not in the upper half-plane (least eigenvalue of Im b is {min_eigenvalue(imag_part(b)):.3e})"
        )
    m = model.m
    resolvent = invert_half_plane(amplify(model.iota_A, b) - np.kron(np.eye(n), model.X))
    blocks = resolvent.reshape(n, m, n, m).transpose(0, 2, 1, 3)
    return assemble_blocks(apply_map(model.map_for(which), blocks))


def reciprocal_F(model: OperatorModel, which: MapWhich, b) -> np.ndarray:
    """F = G⁻¹."""
    return _reciprocal(cauchy_G(model, which, b))


def h_transform(model: OperatorModel, which: MapWhich, b) -> np.ndarray:
    """h(b) = F(b) − b, with b embedded into the target algebra."""
    b = as_matrix(b, "b")
    return reciprocal_F(model, which, b) - amplify(_target_inclusion(model, which), b)


def boolean_power_F(model: OperatorModel, t: float, b, which: MapWhich = "E_B") -> np.ndarray:
    """F of the t-th Boolean power: t·F(b) + (1 − t)·b."""
    if t < 0:
        raise DomainException(f"Boolean power must be nonnegative, got {t}")
    b = as_matrix(b, "b")
    return t * reciprocal_F(model, which, b) + (1 - t) * amplify(_target_inclusion(model, which), b)


def half_plane_report(model: OperatorModel, which: MapWhich, b) -> dict:
    """Largest eigenvalue of Im G(b) and least eigenvalue of Im F(b) − Im b."""
    b = as_matrix(b, "b")
    G = cauchy_G(model, which, b)
    F = _reciprocal(G)
    lifted = amplify(_target_inclusion(model, which), b)
    return {
        "g_max_imag_eigenvalue": -min_eigenvalue(-imag_part(G)),
        "f_min_excess_eigenvalue": min_eigenvalue(imag_part(F) - imag_part(lifted)),
    }


# ========== Fixed points ==========

def _iterate(step, start: np.ndarray, cfg: FixedPointConfig, label: str) -> OmegaResult:
    w = start
    for iteration in range(1, cfg.max_iters + 1):
        target = step(w)
        residual = op_norm(target - w)
        w = (1 - cfg.damping) * w + cfg.damping * target
        if residual < cfg.tol:
            final = op_norm(step(w) - w)
            logger.debug(f"{label}: converged in {iteration} iterations, residual {final:.3e}")
            return OmegaResult(w, iteration, final)
    logger.error(f"{label}: no convergence after {cfg.max_iters} iterations (residual {residual:.3e})")
    raise ConvergenceException(f"{label} did not converge", residual=residual, iterations=cfg.max_iters)


def omega_fixed_point(model: OperatorModel, n_fold: int, b, cfg: Optional[FixedPointConfig] = None) -> OmegaResult:
    """Subordination function of the n-fold free self-convolution of the E_B distribution.

    Solves ω = b/n + (1 − 1/n)·F(ω) by damped Picard iteration.

    Raises:
        DomainException: If n_fold < 2
        ConvergenceException: If the iteration limit is reached
    """
    if n_fold < 2:
        raise DomainException(f"n_fold must be at least 2, got {n_fold}")
    b = as_matrix(b, "b")
    cfg = cfg or FixedPointConfig()
    weight = 1.0 - 1.0 / n_fold

    def step(w: np.ndarray) -> np.ndarray:
        return b / n_fold + weight * reciprocal_F(model, "E_B", w)

    return _iterate(step, cfg.initial(b), cfg, f"ω_{n_fold}")


def two_variable_omegas(model_x: OperatorModel, model_y: OperatorModel, b,
                        cfg: Optional[FixedPointConfig] = None) -> Tuple[OmegaResult, OmegaResult]:
    """ω₁ = b + h_Y(ω₂) and ω₂ = b + h_X(ω₁) for free X and Y, each solved on its own."""
    if model_x.d_B != model_y.d_B:
        raise DimensionException("models act over different algebras B")
    b = as_matrix(b, "b")
    cfg = cfg or FixedPointConfig()

    def step_1(w: np.ndarray) -> np.ndarray:
        return b + h_transform(model_y, "E_B", b + h_transform(model_x, "E_B", w))

    def step_2(w: np.ndarray) -> np.ndarray:
        return b + h_transform(model_x, "E_B", b + h_transform(model_y, "E_B", w))

    return _iterate(step_1, cfg.initial(b), cfg, "ω₁"), _iterate(step_2, cfg.initial(b), cfg, "ω₂")


def voiculescu_phi(model: OperatorModel, b, cfg: Optional[FixedPointConfig] = None) -> np.ndarray:
    """φ(b) = F⁻¹(b) − b for the E_B distribution, solving F(w) = b by w ← b − h(w)."""
    b = as_matrix(b, "b")
    cfg = cfg or FixedPointConfig()

    def step(w: np.ndarray) -> np.ndarray:
        return b - h_transform(model, "E_B", w)

    return _iterate(step, cfg.initial(b), cfg, "φ").omega - b


# ========== Series ground truth ==========

def series_G(d: OVDistribution, b) -> np.ndarray:
    """Truncated G(b) = w·M(w) with w = b⁻¹, at the level of b."""
    b = as_matrix(b, "b")
    n = _level(b, d.d_B)
    w = invert_half_plane(b)
    return amplify(d.inclusion, w) @ evaluate_amplified(M_series(d), w, n)


def phi_series(d: OVDistribution, b) -> np.ndarray:
    """Truncated φ(b) = 𝓡(b⁻¹), where R(b) = 𝓡(b)·b."""
    b = as_matrix(b, "b")
    n = _level(b, d.d_B)
    heads, _ = split_trailing_slot(R_series(d))
    cumulants = NCSeries.from_tensors(d.inclusion, heads, kind="cumulants")
    return evaluate_amplified(cumulants, invert_half_plane(b), n)


def tail_bound(M: float, b, order: int) -> float:
    """Bound ‖b⁻¹‖(M‖b⁻¹‖)^{N+1}/(1 − M‖b⁻¹‖) on the order-N truncation error of G(b).

    Raises:
        GridException: If M‖b⁻¹‖ ≥ 1
    """
    b = as_matrix(b, "b")
    inv_norm = op_norm(invert_half_plane(b))
    ratio = M * inv_norm
    if ratio >= 1:
        raise GridException(
            f"series does not converge at this point (M‖b⁻¹‖ = {ratio:.3f}); increase ‖Im b‖",
            point=b, tail_bound=float("inf"),
        )
    return inv_norm * ratio ** (order + 1) / (1 - ratio)


def scale_to_tail(b, M: float, order: int, target: Optional[float] = None) -> np.ndarray:
    """Scale b by powers of two until its tail bound drops below target."""
    target = config.tail_target if target is None else target
    b = as_matrix(b, "b")
    for _ in range(64):
        try:
            if tail_bound(M, b, order) < target:
                return b
        except GridException:
            pass
        b = 2 * b
    raise GridException("could not reach the tail target by scaling", point=b)


def asymptotic_moments(model: OperatorModel, which: MapWhich, order: int, radius: Optional[float] = None,
                       samples: int = 64) -> List[np.ndarray]:
    """Moments map(X^k), k = 0..N, read off G(w⁻¹·1) on the circle |w| = r.

    The trapezoidal rule on the circle is a discrete Fourier transform; the
    lower half of the circle uses G(b*) = G(b)*.

    Raises:
        GridException: If r·‖X‖ ≥ 1
    """
    norm = max(model.bound, 1e-12)
    r = 0.5 / norm if radius is None else radius
    if r * norm >= 1:
        raise GridException(f"radius {r} is outside the disc of convergence 1/‖X‖ = {1 / norm:.3f}")
    if samples <= order + 1:
        raise DomainException("need more contour samples than moments")
    one = np.eye(model.d_B, dtype=complex)
    values = []
    for j in range(samples):
        w = r * np.exp(2j * np.pi * (j + 0.5) / samples)
        point = one / w
        if (1 / w).imag > 0:
            values.append(cauchy_G(model, which, point))
        else:
            values.append(cauchy_G(model, which, point.conj().T).conj().T)
    spectrum = fft.fft(np.stack(values), axis=0)
    out = []
    for k in range(order + 1):
        phase = r ** (k + 1) * np.exp(1j * np.pi * (k + 1) / samples)
        out.append(spectrum[k + 1] / (samples * phase))
    return out


def identity_direction_moments(d: OVDistribution) -> List[np.ndarray]:
    """μ(X^k), k = 0..N: every slot set to 1."""
    one = np.eye(d.d_B, dtype=complex).reshape(-1)
    out = [np.eye(d.d_D, dtype=complex)]
    for k in range(1, d.order + 1):
        T = d.moment_tensor(k)
        for _ in range(k - 1):
            T = np.tensordot(one, T, axes=(0, 0))
        out.append(T)
    return out


# ========== Identity suite ==========

def grid_points(grid: Sequence[Union[float, np.ndarray]], d: int) -> List[np.ndarray]:
    """Scalars y become i·y·1; matrices are taken as given."""
    points = []
    for y in grid:
        if np.isscalar(y):
            points.append(1j * float(y) * np.eye(d, dtype=complex))
        else:
            points.append(as_matrix(y, "grid point"))
    return points


def format_point(b: np.ndarray) -> str:
    """Short text form of a grid point: the scalar for multiples of 1, else the nested entries."""
    c = b[0, 0]
    if np.allclose(b, c * np.eye(b.shape[0])):
        return f"{complex(c):.12g}"
    return str([[f"{complex(z):.12g}" for z in row] for row in b])


def verify_subordination_suite(model: OperatorModel, grid: Sequence, order: int, n_fold: int = 2,
                               other: Optional[OperatorModel] = None, boolean_t: float = 0.5,
                               cfg: Optional[FixedPointConfig] = None,
                               auto_scale: bool = False) -> List[SubordinationRow]:
    """Check the subordination identities at every grid point.

    Per point: G of the n-fold free power against G∘ω; the n-fold c-free h
    through θ-Cauchy transforms; F of X + Y against ω₁ + ω₂ − b; the series
    G(b) against the model's G(b); the Boolean power F; and additivity of φ.

    Args:
        model: Operator model (its θ is used for the c-free check)
        grid: Scalars y (for b = i·y·1) or matrices in M_{d_B}
        order: Truncation order of the series ground truth
        n_fold: Number of free (and c-free) copies
        other: Model for Y in the two-variable check (a copy of the model by default)
        boolean_t: Boolean power in (0, 1]
        cfg: Fixed-point settings
        auto_scale: Scale each point until its tail bound is below the configured target

    Returns:
        One SubordinationRow per grid point

    Raises:
        GridException: If a point is too close to the real axis for the series to converge
    """
    if not 0 < boolean_t <= 1:
        raise DomainException(f"Boolean power must be in (0, 1], got {boolean_t}")
    other = other or model
    cfg = cfg or FixedPointConfig()
    M = model.bound
    nu = moments_from_model(model, "E_B", order)
    pair = model_pair(model, order)
    nu_y = moments_from_model(other, "E_B", order)
    free_power = power("free", nu, n_fold)
    cfree_power = power("cfree", pair, n_fold)
    free_sum = convolve("free", nu, nu_y)
    boolean = power("boolean", nu, boolean_t)
    logger.info(f"Subordination suite on model '{model.name}': {len(grid)} points, order {order}, n={n_fold}")

    rows: List[SubordinationRow] = []
    for b in grid_points(grid, model.d_B):
        if auto_scale:
            b = scale_to_tail(b, max(n_fold * M, M + other.bound), order)
        tail_power = tail_bound(n_fold * M, b, order)
        tail_model = tail_bound(M, b, order)
        tail_sum = tail_bound(M + other.bound, b, order)
        iota_b = amplify(model.inclusion, b)

        solved = omega_fixed_point(model, n_fold, b, cfg)
        omega = solved.omega
        F_omega = reciprocal_F(model, "E_B", omega)
        g_residual = op_norm(series_G(free_power, b) - cauchy_G(model, "E_B", omega))

        F_series = _reciprocal(series_G(cfree_power.mu, b))
        h_sub = n_fold * (reciprocal_F(model, "theta", omega) - amplify(model.inclusion, omega))
        h_residual = op_norm((F_series - iota_b) - h_sub)
        h_bound = tail_power * op_norm(F_series) * op_norm(h_sub + iota_b)

        omega_1, omega_2 = two_variable_omegas(model, other, b, cfg)
        bv = omega_1.omega + omega_2.omega - b
        F_sum_series = _reciprocal(series_G(free_sum, b))
        bv_residual = op_norm(F_sum_series - bv)
        bv_bound = tail_sum * op_norm(F_sum_series) * op_norm(bv)

        frak_h = max(op_norm(series_G(nu, b) - cauchy_G(model, "E_B", b)),
                     op_norm(series_G(pair.mu, b) - cauchy_G(model, "theta", b)))

        F_boolean = boolean_power_F(model, boolean_t, b)
        F_boolean_series = _reciprocal(series_G(boolean, b))
        boolean_residual = op_norm(F_boolean_series - F_boolean)
        boolean_bound = tail_model * op_norm(F_boolean_series) * op_norm(F_boolean)

        # φ of the n-fold power at z = F(b) is b − z; additivity makes it n·φ(z)
        z = F_omega
        phi_residual = op_norm((b - z) - n_fold * voiculescu_phi(model, z, cfg))

        excess = min_eigenvalue(imag_part(omega) - imag_part(b))
        passed = (
            solved.residual < cfg.tol * 100
            and excess > -config.tolerance
            and g_residual <= tail_power + IDENTITY_SLACK
            and h_residual <= h_bound + IDENTITY_SLACK
            and bv_residual <= bv_bound + IDENTITY_SLACK
            and frak_h <= tail_model + IDENTITY_SLACK
            and boolean_residual <= boolean_bound + IDENTITY_SLACK
            and phi_residual <= IDENTITY_SLACK * (1 + op_norm(b))
        )
        rows.append({
            "b": format_point(b),
            "n_fold": n_fold,
            "iterations": solved.iterations,
            "residual": solved.residual,
            "min_eig_im_omega_minus_im_b": excess,
            "tail_bound": tail_power,
            "g_subordination_residual": g_residual,
            "h_cfree_residual": h_residual,
            "h_cfree_bound": h_bound,
            "two_variable_residual": bv_residual,
            "two_variable_bound": bv_bound,
            "frak_h_residual": frak_h,
            "boolean_power_residual": boolean_residual,
            "boolean_power_bound": boolean_bound,
            "phi_additivity_residual": phi_residual,
            "passed": bool(passed),
            "model": model.name,
        })
        logger.debug(f"Point {rows[-1]['b']}: {solved.iterations} iterations, passed={rows[-1]['passed']}")
    return rows
