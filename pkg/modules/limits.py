"""
Limit theorems for infinitesimal triangular arrays.

A row of an array is k_n identically distributed copies of μ_n (or of a pair
(μ_n, ν_n)). The harness computes the Boolean and the free (c-free for pairs)
k_n-fold convolutions by transform scaling and reports, per row and for the
limit, the four equivalent conditions of the main limit theorem.
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .algebra import InclusionSpec
from .config import config
from .convolution import bp_map, power
from .distribution import (
    DistPair,
    OVDistribution,
    check_uniform_bound,
    dilate,
    make_standard,
    max_moment_distance,
    mixture_with_zero,
    moment_distance,
)
from .guardrails import PreconditionException, ResourceGuard, enforce
from .transforms import B_series, check_generating_pair_cp, extract_generating_pair, largest_cp_cutoff
from .types import ConvolutionKind, LimitReport, LimitRow, validate_convolution_kind

logger = logging.getLogger(__name__)

Distribution = Union[OVDistribution, DistPair]

# bp_map of the Boolean target against the free target
BP_TOLERANCE = 1e-8

LIMIT_COLUMNS = ["n", "k_n", "order", "boolean_distance", "free_distance", "bp_residual", "cp_min_eigenvalue"]


@dataclass
class ArraySpec:
    """Parametrized triangular array: n ↦ (row distribution, row length k_n)."""
    generator: Callable[[int], Tuple[Distribution, int]]
    bound: float
    kind: ConvolutionKind = "free"
    boolean_target: Optional[Distribution] = None
    free_target: Optional[Distribution] = None
    name: str = "custom"

    def rows(self, n_values: Sequence[int]) -> List[Tuple[int, Distribution, int]]:
        """Generate the rows and check the array metadata.

        Row powers are taken by scaling transforms, so their cost does not grow
        with k_n; the guardrail only bounds k_n itself.

        Raises:
            PreconditionException: If k_n is not strictly increasing
            ResourceException: If some k_n exceeds the row-length guardrail
        """
        validate_convolution_kind(self.kind)
        out = []
        previous = 0
        for n in n_values:
            d, k_n = self.generator(n)
            enforce(ResourceGuard.check_row_length(k_n, n_values[-1]))
            if k_n <= previous:
                raise PreconditionException(f"row lengths must increase strictly (k_{n} = {k_n})")
            if (self.kind == "cfree") != isinstance(d, DistPair):
                raise PreconditionException("c-free arrays need pair rows, other arrays single rows")
            previous = k_n
            out.append((n, d, k_n))
        return out


def _distance(x: Distribution, y: Distribution, k: Optional[int] = None) -> float:
    if isinstance(x, DistPair):
        return max(_distance(x.mu, y.mu, k), _distance(x.nu, y.nu, k))
    if k is None:
        return max_moment_distance(x, y)
    return moment_distance(x, y, k)


def _coordinates(d: Distribution) -> List[OVDistribution]:
    return [d.mu, d.nu] if isinstance(d, DistPair) else [d]


def _scaled_moment_distance(row: Distribution, limit: Distribution, k_n: int) -> float:
    """Distance of k_n·μ_n(X), k_n·μ_n(X b_1 ⋯ X) to the generating pair of the limit's B-transform."""
    worst = 0.0
    for mu_n, target in zip(_coordinates(row), _coordinates(limit)):
        pair = extract_generating_pair(B_series(target))
        worst = max(worst, float(np.max(np.abs(k_n * mu_n.mean - pair.gamma))))
        for p, sigma in enumerate(pair.sigma, start=1):
            worst = max(worst, float(np.max(np.abs(k_n * mu_n.moment_tensor(p + 1) - sigma))))
    return worst


def _cp_min_eigenvalue(d: Distribution, cutoff: int) -> Tuple[float, bool]:
    least, passed = np.inf, True
    for coordinate in _coordinates(d):
        report = check_generating_pair_cp(extract_generating_pair(B_series(coordinate)), cutoff)
        least = min(least, report["min_eigenvalue"])
        passed = passed and report["passed"]
    return float(least), passed


def _decay(distances: Sequence[float], tol: float) -> Tuple[float, bool]:
    """Geometric mean of successive distance ratios and monotonicity over the last five rows."""
    tail = list(distances[-5:])
    monotone = all(b <= a + tol for a, b in zip(tail, tail[1:]))
    ratios = [b / a for a, b in zip(distances, distances[1:]) if a > tol and b > tol]
    ratio = float(np.exp(np.mean(np.log(ratios[-4:])))) if ratios else 0.0
    return ratio, monotone


def _converged(final: float, ratio: float, monotone: bool) -> bool:
    tol = config.convergence_tol
    return final < tol or (monotone and 0.0 < ratio <= 0.9)


def limit_harness(spec: ArraySpec, n_max: int, n_values: Optional[Sequence[int]] = None,
                  focus_order: Optional[int] = None) -> LimitReport:
    """Run a triangular array through its Boolean and free (or c-free) row convolutions.

    Args:
        spec: Array specification
        n_max: Largest row index
        n_values: Row indices to compute (powers of two up to n_max by default)
        focus_order: Moment order whose distance drives the decay statistics

    Returns:
        LimitReport with per-row table and convergence scoreboard

    Raises:
        PreconditionException: If fewer than two rows can be scored against the limit
    """
    if n_values is None:
        if n_max < 1:
            raise PreconditionException(f"n_max must be at least 1, got {n_max}")
        n_values = [2 ** j for j in range(int(np.log2(n_max)) + 1)]
    if not n_values:
        raise PreconditionException("limit harness needs at least one row index")
    # without a target the last row is the candidate and cannot score itself
    needed = 2 + (spec.free_target is None or spec.boolean_target is None)
    if len(n_values) < needed:
        raise PreconditionException(f"limit harness needs at least {needed} rows for this array, got {len(n_values)}")
    rows = spec.rows(n_values)
    order = _coordinates(rows[0][1])[0].order
    focus = min(focus_order or 4, order)
    cutoff = largest_cp_cutoff(order)
    free_kind = "cfree" if spec.kind == "cfree" else "free"
    logger.info(f"Limit harness '{spec.name}' ({spec.kind}): {len(rows)} rows up to n={n_values[-1]}, order {order}")

    boolean_rows, free_rows = [], []
    for n, d, k_n in rows:
        boolean_rows.append(power("boolean", d, k_n))
        free_rows.append(power(free_kind, d, k_n))

    boolean_limit = spec.boolean_target or boolean_rows[-1]
    free_limit = spec.free_target or free_rows[-1]

    table: List[LimitRow] = []
    for (n, d, k_n), b_row, f_row in zip(rows, boolean_rows, free_rows):
        cp_least, _ = _cp_min_eigenvalue(b_row, cutoff)
        table.append({
            "n": n,
            "k_n": k_n,
            "order": order,
            "boolean_distance": _distance(b_row, boolean_limit, focus),
            "free_distance": _distance(f_row, free_limit, focus),
            "bp_residual": _distance(bp_map(b_row), f_row),
            "cp_min_eigenvalue": cp_least,
            "scaled_moment_distance": _scaled_moment_distance(d, boolean_limit, k_n),
            "uniform_bound_ok": all(check_uniform_bound(c, spec.bound)["valid"] for c in _coordinates(f_row)),
        })
        logger.debug(f"Row n={n}: free distance {table[-1]['free_distance']:.3e}")

    # the last row is its own candidate when no target is given
    scored = table if spec.free_target is not None else table[:-1]
    free_ratio, free_monotone = _decay([r["free_distance"] for r in scored], 1e-14)
    boolean_scored = table if spec.boolean_target is not None else table[:-1]
    boolean_ratio, boolean_monotone = _decay([r["boolean_distance"] for r in boolean_scored], 1e-14)
    scaled_ratio, scaled_monotone = _decay([r["scaled_moment_distance"] for r in table], 1e-14)

    final_free = scored[-1]["free_distance"]
    final_boolean = boolean_scored[-1]["boolean_distance"]
    _, limit_cp = _cp_min_eigenvalue(boolean_limit, cutoff)
    boolean_converged = _converged(final_boolean, boolean_ratio, boolean_monotone)
    free_converged = _converged(final_free, free_ratio, free_monotone)

    # row residuals are k_n·|B_{μ_n} − R_{μ_n}|: they vanish in the limit, not per row
    bp_ratio, bp_monotone = _decay([r["bp_residual"] for r in table], 1e-14)
    bp_rows_vanish = _converged(table[-1]["bp_residual"], bp_ratio, bp_monotone)
    if spec.boolean_target is not None and spec.free_target is not None:
        bp_residual = _distance(bp_map(spec.boolean_target), spec.free_target)
        bp_consistent = bp_rows_vanish and bp_residual < BP_TOLERANCE
    else:
        bp_residual = table[-1]["bp_residual"]
        bp_consistent = bp_rows_vanish and boolean_converged == free_converged

    return {
        "kind": spec.kind,
        "rows": table,
        "boolean_converged": boolean_converged,
        "free_converged": free_converged,
        "scaled_moments_converged": _converged(table[-1]["scaled_moment_distance"], scaled_ratio, scaled_monotone),
        "generating_pair_cp": limit_cp,
        "monotone_decay": free_monotone,
        "decay_ratio": free_ratio,
        "final_distance": final_free,
        "bp_residual": bp_residual,
        "bp_consistent": bool(bp_consistent),
    }


# ========== Built-in arrays ==========

def clt_array(inclusion: InclusionSpec, order: int, kind: ConvolutionKind = "free") -> ArraySpec:
    """Rademacher rows scaled by k_n^{-1/2}, k_n = n.

    The Boolean limit is the rademacher law and the free limit the semicircle law.
    """
    base = make_standard("rademacher", inclusion, order)

    def generator(n: int):
        return dilate(base, n ** -0.5), n

    free_target = make_standard("ov_semicircle", inclusion, order) if inclusion.is_identity else None
    return ArraySpec(generator, bound=2.0, kind=kind, boolean_target=base, free_target=free_target, name="clt")


def point_mass_array(beta: np.ndarray, inclusion: InclusionSpec, order: int) -> ArraySpec:
    """Rows δ_{β/k_n}; both limits are δ_β."""
    target = make_standard("point_mass", inclusion, order, beta=beta)

    def generator(n: int):
        return make_standard("point_mass", inclusion, order, beta=np.asarray(beta) / n), n

    bound = float(np.linalg.norm(beta, 2))
    return ArraySpec(generator, bound=max(bound, 1e-12), boolean_target=target, free_target=target, name="point_mass")


def poisson_array(beta: np.ndarray, lam: float, inclusion: InclusionSpec, order: int) -> ArraySpec:
    """Rows (1 − λ/k_n)δ_0 + (λ/k_n)δ_β; the free limit is a compound free Poisson law."""
    jump = make_standard("point_mass", inclusion, order, beta=beta)

    def generator(n: int):
        return mixture_with_zero(jump, lam / n), n

    norm = float(np.linalg.norm(beta, 2))
    bound = norm * (1.0 + np.sqrt(lam)) ** 2
    return ArraySpec(generator, bound=max(bound, 1e-12), name="poisson")


def cfree_clt_array(d_B: int, order: int, variance: float = 2.0) -> ArraySpec:
    """Pair rows (√variance·rademacher, rademacher) scaled by k_n^{-1/2}."""
    inclusion = InclusionSpec.identity(d_B)
    rad = make_standard("rademacher", inclusion, order)
    mu = dilate(rad, np.sqrt(variance))

    def generator(n: int):
        return DistPair(dilate(mu, n ** -0.5), dilate(rad, n ** -0.5)), n

    return ArraySpec(generator, bound=2.0 * np.sqrt(variance), kind="cfree",
                     boolean_target=DistPair(mu, rad), name="cfree_clt")
