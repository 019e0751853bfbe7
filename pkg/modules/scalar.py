"""
Scalar distributions and the multiplicative T- and cT-transforms.

A scalar series is a complex coefficient vector c[0..N]. With 𝓜 = M − 1 the
transforms are

- B = 𝓜/M,
- R with 𝓜(z) = R(z·M(z)),
- cR with (M_μ − 1)·M_ν = M_μ·cR(z·M_ν(z)),
- T = z/R⁻¹(z) and cT = cR(R_ν⁻¹(z))/R_ν⁻¹(z), where ⁻¹ is compositional.

T and cT of order-N moments are known up to z^{N−1}.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg, special

from .config import config
from .guardrails import DimensionException, DomainException
from .types import ScalarHomomorphismReport

logger = logging.getLogger(__name__)


# ========== Truncated scalar series ==========

def _vec(c: Sequence[complex], order: int) -> np.ndarray:
    out = np.zeros(order + 1, dtype=complex)
    c = np.asarray(c, dtype=complex)[: order + 1]
    out[: len(c)] = c
    return out


def smul(f: np.ndarray, g: np.ndarray, order: Optional[int] = None) -> np.ndarray:
    """Product truncated at z^order."""
    order = len(f) - 1 if order is None else order
    return _vec(P.polymul(f, g), order)


def sreciprocal(f: np.ndarray) -> np.ndarray:
    """1/f for f(0) ≠ 0."""
    if abs(f[0]) == 0:
        raise DomainException("series with zero constant term has no reciprocal")
    g = np.zeros_like(f, dtype=complex)
    g[0] = 1 / f[0]
    for k in range(1, len(f)):
        g[k] = -np.dot(f[1:k + 1], g[k - 1::-1][:k]) / f[0]
    return g


def scompose(f: np.ndarray, g: np.ndarray, order: Optional[int] = None) -> np.ndarray:
    """f∘g for g(0) = 0, by Horner's rule."""
    order = len(f) - 1 if order is None else order
    if abs(g[0]) > 0:
        raise DomainException("inner series must vanish at zero")
    g = _vec(g, order)
    out = _vec([f[-1]], order)
    for c in f[-2::-1]:
        out = smul(out, g, order)
        out[0] += c
    return out


def sderivative(f: np.ndarray) -> np.ndarray:
    return _vec(P.polyder(f), len(f) - 1)


def sreversion(f: np.ndarray) -> np.ndarray:
    """Compositional inverse of f with f(0) = 0, f′(0) ≠ 0, by Newton iteration.

    Raises:
        DomainException: If the linear coefficient vanishes
    """
    order = len(f) - 1
    if abs(f[0]) > 0:
        raise DomainException("series to invert must vanish at zero")
    if order < 1 or abs(f[1]) < config.tolerance:
        raise DomainException("linear coefficient vanishes; no compositional inverse near zero")
    z = _vec([0, 1], order)
    g = _vec([0, 1 / f[1]], order)
    df = sderivative(f)
    # each step doubles the number of correct coefficients
    for _ in range(int(np.ceil(np.log2(order + 1))) + 1):
        g = g - smul(scompose(f, g) - z, sreciprocal(scompose(df, g)))
    return g


def shift_down(f: np.ndarray) -> np.ndarray:
    """f(z)/z for f(0) = 0, one order shorter."""
    return np.array(f[1:], dtype=complex)


def shift_up(f: np.ndarray) -> np.ndarray:
    """z·f(z), one order longer."""
    return np.concatenate([[0], f]).astype(complex)


def boolean_shift(order: int) -> np.ndarray:
    """z/(1 − z)."""
    return _vec([0] + [1] * order, order)


# ========== Distributions ==========

@dataclass(frozen=True)
class ScalarDist:
    """Moments m_1..m_N of a scalar distribution."""
    moments: Tuple[complex, ...]
    measure: bool = False

    def __post_init__(self):
        if len(self.moments) < 1:
            raise DimensionException("scalar distribution needs at least one moment")
        object.__setattr__(self, "moments", tuple(complex(m) for m in self.moments))

    @property
    def order(self) -> int:
        return len(self.moments)

    @property
    def mean(self) -> complex:
        return self.moments[0]

    def M(self) -> np.ndarray:
        return np.array((1,) + self.moments, dtype=complex)

    def truncate(self, order: int) -> "ScalarDist":
        return ScalarDist(self.moments[:order], self.measure)

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(np.imag(self.moments))) <= tol)

    def hankel_least_eigenvalue(self) -> float:
        """Least eigenvalue of the Hankel matrix [m_{i+j}], i, j ≤ N/2."""
        m = np.concatenate([[1.0], np.real(self.moments)])
        h = self.order // 2
        return float(linalg.eigvalsh(linalg.hankel(m[: h + 1], m[h: 2 * h + 1]))[0])

    def hankel_psd(self, tol: Optional[float] = None) -> bool:
        tol = config.positivity_slack if tol is None else tol
        return self.is_real() and self.hankel_least_eigenvalue() >= -tol


@dataclass(frozen=True)
class ScalarPair:
    """(μ, ν) with a shared order."""
    mu: ScalarDist
    nu: ScalarDist

    def __post_init__(self):
        if self.mu.order != self.nu.order:
            raise DimensionException(f"pair orders differ: {self.mu.order} vs {self.nu.order}")

    @property
    def order(self) -> int:
        return self.mu.order


def from_M(M: np.ndarray, measure: bool = False) -> ScalarDist:
    return ScalarDist(tuple(M[1:]), measure)


def scalar_distance(x: ScalarDist, y: ScalarDist) -> float:
    if x.order != y.order:
        raise DimensionException(f"orders differ: {x.order} vs {y.order}")
    return float(np.max(np.abs(np.subtract(x.moments, y.moments))))


def pair_distance(x: ScalarPair, y: ScalarPair) -> float:
    return max(scalar_distance(x.mu, y.mu), scalar_distance(x.nu, y.nu))


# ========== Additive transforms ==========

def scalar_B(d: ScalarDist) -> np.ndarray:
    M = d.M()
    return smul(M - _vec([1], d.order), sreciprocal(M))


def scalar_R(d: ScalarDist) -> np.ndarray:
    """R = 𝓜∘(z·M)⁻¹."""
    M = d.M()
    W = shift_up(M)
    return _vec(scompose(_vec(M - _vec([1], d.order), d.order + 1), sreversion(W)), d.order)


def scalar_cR(pair: ScalarPair) -> np.ndarray:
    """cR = [𝓜_μ·M_ν/M_μ]∘(z·M_ν)⁻¹."""
    N = pair.order
    M_mu, M_nu = pair.mu.M(), pair.nu.M()
    inner = smul(smul(M_mu - _vec([1], N), M_nu), sreciprocal(M_mu))
    return _vec(scompose(_vec(inner, N + 1), sreversion(shift_up(M_nu))), N)


def moments_from_B(B: np.ndarray) -> ScalarDist:
    N = len(B) - 1
    calM = smul(B, sreciprocal(_vec([1], N) - B))
    return ScalarDist(tuple(calM[1:]))


def moments_from_R(R: np.ndarray) -> ScalarDist:
    """z·M(z) is the compositional inverse of w/(1 + R(w))."""
    N = len(R) - 1
    W = sreversion(shift_up(sreciprocal(_vec([1], N) + R)))
    return ScalarDist(tuple(shift_down(W)[1:]))


def moments_from_cR(cR: np.ndarray, nu: ScalarDist) -> ScalarDist:
    """𝓜_μ = u/(M_ν − u) with u = cR(z·M_ν)."""
    N = nu.order
    M_nu = nu.M()
    u = scompose(cR, _vec(shift_up(M_nu), N))
    calM = smul(u, sreciprocal(M_nu - u))
    return ScalarDist(tuple(calM[1:]))


def scalar_convolve(kind: str, x, y):
    """Additive free, Boolean or c-free convolution of scalar distributions (pairs for cfree)."""
    if kind == "boolean":
        return moments_from_B(scalar_B(x) + scalar_B(y))
    if kind == "free":
        return moments_from_R(scalar_R(x) + scalar_R(y))
    if kind == "cfree":
        nu = moments_from_R(scalar_R(x.nu) + scalar_R(y.nu))
        return ScalarPair(moments_from_cR(scalar_cR(x) + scalar_cR(y), nu), nu)
    raise DomainException(f"unknown convolution kind '{kind}'")


def scalar_bp(x):
    """Bercovici–Pata image: R_{ν′} = B_ν, and cR_{μ′,ν′} = B_μ for pairs."""
    if isinstance(x, ScalarPair):
        nu = moments_from_R(scalar_B(x.nu))
        return ScalarPair(moments_from_cR(scalar_B(x.mu), nu), nu)
    return moments_from_R(scalar_B(x))


# ========== Multiplicative transforms ==========

def _require_mean(d: ScalarDist) -> None:
    if abs(d.mean) < config.tolerance:
        raise DomainException("mean is zero; the T-transform needs a nonzero first moment")


def scalar_T(nu: ScalarDist) -> np.ndarray:
    """T(z) = z/R⁻¹(z), coefficients up to z^{N−1}.

    Raises:
        DomainException: If the mean vanishes
    """
    _require_mean(nu)
    R_inv = sreversion(scalar_R(nu))
    return sreciprocal(shift_down(R_inv))


def scalar_cT(pair: ScalarPair) -> np.ndarray:
    """cT(z) = cR(R_ν⁻¹(z))/R_ν⁻¹(z), coefficients up to z^{N−1}."""
    _require_mean(pair.nu)
    g = sreversion(scalar_R(pair.nu))
    return smul(shift_down(scompose(scalar_cR(pair), g)), sreciprocal(shift_down(g)))


def scalar_cT_via_boolean(pair: ScalarPair) -> np.ndarray:
    """cT(z) = B_μ(𝓜_ν⁻¹(z))/𝓜_ν⁻¹(z), the second path to cT."""
    _require_mean(pair.nu)
    N = pair.order
    g = sreversion(pair.nu.M() - _vec([1], N))
    return smul(shift_down(scompose(scalar_B(pair.mu), g)), sreciprocal(shift_down(g)))


def moments_from_T(T: np.ndarray) -> ScalarDist:
    """Invert T (order N−1) back to N moments."""
    R_inv = shift_up(sreciprocal(T))
    return moments_from_R(sreversion(R_inv))


def moments_from_cT(cT: np.ndarray, nu: ScalarDist) -> ScalarDist:
    """cR = (cT·R_ν⁻¹)∘R_ν."""
    R_nu = scalar_R(nu)
    g = sreversion(R_nu)
    cR = scompose(smul(shift_up(cT), shift_down(g), nu.order), R_nu)
    return moments_from_cR(cR, nu)


def mult_convolve(kind: str, x, y):
    """Multiplicative free (⊠) or c-free (⊠_c) convolution by multiplying T (and cT).

    For pairs, free convolution reads the second coordinates only and
    returns ν_x ⊠ ν_y.

    Raises:
        DomainException: If some mean vanishes, or a pair meets a single law
    """
    if kind == "free":
        if isinstance(x, ScalarPair) != isinstance(y, ScalarPair):
            raise DomainException("free multiplicative convolution needs two pairs or two laws")
        if isinstance(x, ScalarPair):
            x, y = x.nu, y.nu
        return moments_from_T(smul(scalar_T(x), scalar_T(y)))
    if kind == "cfree":
        if not isinstance(x, ScalarPair) or not isinstance(y, ScalarPair):
            raise DomainException("c-free multiplicative convolution needs pairs")
        nu = moments_from_T(smul(scalar_T(x.nu), scalar_T(y.nu)))
        return ScalarPair(moments_from_cT(smul(scalar_cT(x), scalar_cT(y)), nu), nu)
    raise DomainException(f"unknown multiplicative kind '{kind}'")


def verify_bp_homomorphism(pairs: Sequence[Tuple[ScalarPair, ScalarPair]],
                           threshold: float = 1e-9) -> ScalarHomomorphismReport:
    """Shift lemma and homomorphism property of the Bercovici–Pata map under ⊠_c.

    Args:
        pairs: (x, y) couples of pairs with nonzero means
        threshold: Pass threshold on the largest residual

    Returns:
        Residuals of cT_{BP(x)}(z) = cT_x(z/(1−z)), of T_{BP(ν)}(z) = T_ν(z/(1−z))
        and of BP(x ⊠_c y) = BP(x) ⊠_c BP(y)
    """
    shift_residual = single_residual = hom_residual = 0.0
    for x, y in pairs:
        for p in (x, y):
            s = boolean_shift(p.order - 1)
            shifted = scompose(scalar_cT(p), s)
            shift_residual = max(shift_residual, float(np.max(np.abs(scalar_cT(scalar_bp(p)) - shifted))))
            single = scompose(scalar_T(p.nu), s)
            single_residual = max(single_residual, float(np.max(np.abs(scalar_T(scalar_bp(p.nu)) - single))))
        lhs = scalar_bp(mult_convolve("cfree", x, y))
        rhs = mult_convolve("cfree", scalar_bp(x), scalar_bp(y))
        hom_residual = max(hom_residual, pair_distance(lhs, rhs))

    logger.info(f"BP homomorphism over {len(pairs)} couples: shift {shift_residual:.3e}, "
                f"homomorphism {hom_residual:.3e}")
    return {
        "shift_lemma_residual": shift_residual,
        "homomorphism_residual": hom_residual,
        "single_shift_residual": single_residual,
        "passed": bool(max(shift_residual, hom_residual, single_residual) <= threshold),
    }


# ========== Families ==========

def scalar_point_mass(c: float, order: int) -> ScalarDist:
    return ScalarDist(tuple(c ** k for k in range(1, order + 1)), measure=True)


def shifted_rademacher(shift: float, order: int) -> ScalarDist:
    """shift + ε with ε = ±1 equally likely."""
    return ScalarDist(tuple(((shift + 1) ** k + (shift - 1) ** k) / 2 for k in range(1, order + 1)), measure=True)


def _semicircle_moment(j: int) -> float:
    return 0.0 if j % 2 else float(special.comb(j, j // 2, exact=True)) / (j // 2 + 1)


def shifted_semicircle(shift: float, order: int, variance: float = 1.0) -> ScalarDist:
    """shift + √variance·s for a standard semicircular s."""
    sigma = np.sqrt(variance)
    moments = []
    for k in range(1, order + 1):
        moments.append(sum(special.comb(k, j) * shift ** (k - j) * sigma ** j * _semicircle_moment(j)
                           for j in range(k + 1)))
    return ScalarDist(tuple(moments), measure=True)


def free_poisson(lam: float, order: int) -> ScalarDist:
    """Moments Σ_j Narayana(k, j)·λ^j."""
    moments = []
    for k in range(1, order + 1):
        moments.append(sum(special.comb(k, j) * special.comb(k, j - 1) / k * lam ** j for j in range(1, k + 1)))
    return ScalarDist(tuple(moments), measure=True)


def random_discrete(rng: np.random.Generator, order: int, atoms: int = 4, shift: float = 1.0,
                    spread: float = 0.5) -> ScalarDist:
    """Discrete measure with atoms in shift + spread·[−1, 1] and Dirichlet weights."""
    points = shift + spread * rng.uniform(-1.0, 1.0, atoms)
    weights = rng.dirichlet(np.ones(atoms))
    return ScalarDist(tuple(float(weights @ points ** k) for k in range(1, order + 1)), measure=True)


def random_scalar_pair(rng: np.random.Generator, order: int, atoms: int = 4, shift: float = 1.0,
                       spread: float = 0.5) -> ScalarPair:
    return ScalarPair(random_discrete(rng, order, atoms, shift, spread), random_discrete(rng, order, atoms, shift, spread))


def scalar_family(name: str, order: int, shift: float = 1.0, lam: float = 1.0) -> ScalarDist:
    """Built-in families by name."""
    if name == "point_mass":
        return scalar_point_mass(shift, order)
    if name == "shifted_rademacher":
        return shifted_rademacher(shift, order)
    if name == "shifted_semicircle":
        return shifted_semicircle(shift, order)
    if name == "free_poisson":
        return free_poisson(lam, order)
    raise DomainException(f"unknown scalar family '{name}'")


SCALAR_FAMILIES: List[str] = ["point_mass", "shifted_rademacher", "shifted_semicircle", "free_poisson"]
