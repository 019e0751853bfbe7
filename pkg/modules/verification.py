"""
Verification suites behind the `verify` command.

Each suite returns CheckResult rows (suite, check, residual, threshold,
status). Random inputs come from one seeded generator per suite so a suite
gives the same rows whether it runs alone or inside 'all'.
"""
import functools
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .algebra import (
    InclusionSpec,
    direct_sum,
    inverse_via_imaginary_part,
    invert_half_plane,
    op_norm,
    random_half_plane_point,
)
from .config import config
from .convolution import (
    bp_map,
    convolve,
    free_power_divisibility_check,
    power,
    verify_bbp_identity,
    verify_cfree_bbp_identity,
)
from .distribution import (
    DistPair,
    OVDistribution,
    check_moment_positivity,
    distribution_from_tensors,
    make_standard,
    max_moment_distance,
    random_distribution,
    random_pair,
    standard_model,
)
from .limits import clt_array, limit_harness, point_mass_array
from .monitoring import metrics_collector
from .ncseries import eval_nilpotent, superdiagonal
from .oracle import oracle_convolve
from .scalar import ScalarPair, random_scalar_pair, scalar_point_mass, verify_bp_homomorphism
from .subordination import half_plane_report, verify_subordination_suite
from .transforms import B_series, M_series, R_series, cR_series
from .types import CheckResult, SubordinationRow, validate_suite_name

logger = logging.getLogger(__name__)

SEMICIRCLE_A = 0.5 * np.array([[1.0, 0.5], [0.5, 1.0]])


# (order, sample count) per oracle kind; dimensions 1 and 2
ORACLE_PROTOCOL: Dict[str, Tuple[int, int]] = {"free": (6, 50), "boolean": (8, 50), "cfree": (5, 30)}
ORACLE_DIMS = (1, 2)


@dataclass(frozen=True)
class VerifySettings:
    """Knobs shared by all suites.

    order, samples and dims are overrides: left as None, each suite runs at
    its own defaults (the oracle suite at ORACLE_PROTOCOL).
    """
    order: Optional[int] = None
    dims: Optional[Tuple[int, ...]] = None
    seed: int = 20240611
    samples: Optional[int] = None
    tol: float = 1e-9
    grid: Tuple[float, ...] = (4.0, 6.0, 8.0)
    n_max: int = 256
    half_plane_points: int = 200
    scalar_order: int = 8
    scalar_pairs: int = 20

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])

    def order_for(self, default: int) -> int:
        return self.order if self.order is not None else default

    def count(self, default: int) -> int:
        return self.samples if self.samples is not None else default

    def dims_for(self, default: Tuple[int, ...] = (1,)) -> Tuple[int, ...]:
        return self.dims if self.dims is not None else default


def _row(suite: str, check: str, residual: float, threshold: float, detail: str = "") -> CheckResult:
    residual = float(residual)
    row: CheckResult = {
        "suite": suite,
        "check": check,
        "residual": residual,
        "threshold": float(threshold),
        "status": "pass" if residual <= threshold else "fail",
    }
    if detail:
        row["detail"] = detail
    return row


def _pair_distance(x, y) -> float:
    if isinstance(x, DistPair):
        return max(max_moment_distance(x.mu, y.mu), max_moment_distance(x.nu, y.nu))
    return max_moment_distance(x, y)


# ========== Suites ==========

def suite_oracle(s: VerifySettings) -> List[CheckResult]:
    """Transform convolutions against the word-expansion oracle."""
    rng = s.rng(1)
    rows = []
    for d in s.dims_for(ORACLE_DIMS):
        for kind, (default_order, default_count) in ORACLE_PROTOCOL.items():
            order, count = s.order_for(default_order), s.count(default_count)
            draw = random_pair if kind == "cfree" else random_distribution
            worst = 0.0
            for _ in range(count):
                x, y = draw(rng, d, order), draw(rng, d, order)
                worst = max(worst, _pair_distance(convolve(kind, x, y), oracle_convolve(kind, x, y)))
            rows.append(_row("oracle", f"{kind}_d{d}", worst, s.tol, f"{count} random inputs, order {order}"))
    return rows


def suite_linearization(s: VerifySettings) -> List[CheckResult]:
    """Transforms of oracle outputs are sums of the input transforms."""
    rng = s.rng(2)
    order, count = s.order_for(6), s.count(10)
    rows = []
    for d in s.dims_for():
        r_worst = b_worst = c_worst = 0.0
        for _ in range(count):
            x, y = random_distribution(rng, d, order), random_distribution(rng, d, order)
            r_worst = max(r_worst, R_series(oracle_convolve("free", x, y)).max_difference(R_series(x) + R_series(y)))
            b_worst = max(b_worst, B_series(oracle_convolve("boolean", x, y)).max_difference(B_series(x) + B_series(y)))
            p, q = random_pair(rng, d, order), random_pair(rng, d, order)
            c_worst = max(c_worst, cR_series(oracle_convolve("cfree", p, q)).max_difference(cR_series(p) + cR_series(q)))
        rows.append(_row("linearization", f"R_d{d}", r_worst, s.tol))
        rows.append(_row("linearization", f"B_d{d}", b_worst, s.tol))
        rows.append(_row("linearization", f"cR_d{d}", c_worst, s.tol))
    return rows


def suite_clt(s: VerifySettings) -> List[CheckResult]:
    """Free central limit theorem: distance halves per doubling of n."""
    rows = []
    order = max(s.order_for(6), 4)
    for d in s.dims_for():
        report = limit_harness(clt_array(InclusionSpec.identity(d), order), s.n_max)
        rows.append(_row("clt", f"decay_ratio_d{d}", abs(report["decay_ratio"] - 0.5), 0.1,
                         f"ratio {report['decay_ratio']:.4f}"))
        rows.append(_row("clt", f"final_distance_d{d}", report["final_distance"], 1e-2))
        rows.append(_row("clt", f"scoreboard_d{d}", 0.0 if report["free_converged"] and report["boolean_converged"] else 1.0, 0.5))
    return rows


def suite_bercovici_pata(s: VerifySettings) -> List[CheckResult]:
    """bp_map of the Boolean limit equals the free limit."""
    rows = []
    order = s.order_for(6)
    for d in s.dims_for():
        inc = InclusionSpec.identity(d)
        rademacher = make_standard("rademacher", inc, order)
        semicircle = make_standard("ov_semicircle", inc, order)
        rows.append(_row("bercovici_pata", f"clt_limits_d{d}", max_moment_distance(bp_map(rademacher), semicircle), 1e-8))
        beta = np.diag(np.linspace(-0.5, 0.5, d)) if d > 1 else np.array([[0.5]])
        point = make_standard("point_mass", inc, order, beta=beta)
        rows.append(_row("bercovici_pata", f"point_mass_d{d}", max_moment_distance(bp_map(point), point), 1e-8))
        report = limit_harness(point_mass_array(beta, inc, order), 64)
        rows.append(_row("bercovici_pata", f"harness_consistent_d{d}", 0.0 if report["bp_consistent"] else 1.0, 0.5))
    return rows


def _nilpotent_samples(rng: np.random.Generator, d: int, order: int, count: int = 2) -> List[np.ndarray]:
    blocks = [[0.5 * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) for _ in range(min(order, 3))]
              for _ in range(count)]
    return [superdiagonal(b) for b in blocks]


def suite_bp_identities(s: VerifySettings) -> List[CheckResult]:
    """Series forms of the Bercovici–Pata identities on random inputs."""
    rng = s.rng(3)
    order, count = s.order_for(6), s.count(20)
    rows = []
    for d in s.dims_for():
        free_worst = cfree_worst = 0.0
        for _ in range(count):
            samples = _nilpotent_samples(rng, d, order)
            free_worst = max(free_worst, verify_bbp_identity(random_distribution(rng, d, order), samples)["max_residual"])
            cfree_worst = max(cfree_worst,
                              verify_cfree_bbp_identity(random_pair(rng, d, order), samples)["max_residual"])
        rows.append(_row("bp_identities", f"free_d{d}", free_worst, s.tol))
        rows.append(_row("bp_identities", f"cfree_d{d}", cfree_worst, s.tol))
    return rows


@functools.lru_cache(maxsize=4)
def _subordination_rows(s: VerifySettings) -> Tuple[Tuple[str, Tuple[SubordinationRow, ...]], ...]:
    d = s.dims_for()[0]
    models = [
        standard_model("rademacher", d_B=d),
        standard_model("semicircle", d_B=2, a=SEMICIRCLE_A),
        standard_model("two_state", d_B=d),
    ]
    return tuple((m.name, tuple(verify_subordination_suite(m, list(s.grid), s.order_for(6)))) for m in models)


def suite_subordination(s: VerifySettings) -> List[CheckResult]:
    """Fixed points on the grid and G of the free square against G∘ω."""
    rows = []
    for name, table in _subordination_rows(s):
        rows.append(_row("subordination", f"{name}_fixed_point", max(r["residual"] for r in table), 1e-10))
        rows.append(_row("subordination", f"{name}_iterations", max(r["iterations"] for r in table), 200))
        rows.append(_row("subordination", f"{name}_g_excess",
                         max(r["g_subordination_residual"] - r["tail_bound"] for r in table), 1e-9))
        rows.append(_row("subordination", f"{name}_im_omega", max(-r["min_eig_im_omega_minus_im_b"] for r in table),
                         1e-10))
    return rows


def suite_identities(s: VerifySettings) -> List[CheckResult]:
    """h-subordination, the two-variable identity, the series bridge and φ additivity."""
    rows = []
    for name, table in _subordination_rows(s):
        rows.append(_row("identities", f"{name}_h_cfree_excess",
                         max(r["h_cfree_residual"] - r["h_cfree_bound"] for r in table), 1e-9))
        rows.append(_row("identities", f"{name}_two_variable_excess",
                         max(r["two_variable_residual"] - r["two_variable_bound"] for r in table), 1e-9))
        rows.append(_row("identities", f"{name}_frak_h_excess",
                         max(r["frak_h_residual"] - r["tail_bound"] for r in table), 1e-9))
        rows.append(_row("identities", f"{name}_boolean_power_excess",
                         max(r["boolean_power_residual"] - r["boolean_power_bound"] for r in table), 1e-9))
        rows.append(_row("identities", f"{name}_phi_additivity", max(r["phi_additivity_residual"] for r in table),
                         s.tol * 10))
        rows.append(_row("identities", f"{name}_all_points", sum(not r["passed"] for r in table), 0))
    return rows


def suite_half_plane(s: VerifySettings) -> List[CheckResult]:
    """Im G ≺ 0 and Im F ⪰ Im b on random half-plane points."""
    rng = s.rng(4)
    rows = []
    for d in s.dims_for():
        model = standard_model("random", d_B=d, rng=rng)
        g_worst = f_worst = inv_worst = -np.inf
        for _ in range(s.half_plane_points):
            b = random_half_plane_point(rng, d)
            report = half_plane_report(model, "E_B", b)
            g_worst = max(g_worst, report["g_max_imag_eigenvalue"])
            f_worst = max(f_worst, -report["f_min_excess_eigenvalue"])
            direct = invert_half_plane(b)
            inv_worst = max(inv_worst, op_norm(direct - inverse_via_imaginary_part(b)) / max(op_norm(direct), 1.0))
        rows.append(_row("half_plane", f"im_G_negative_d{d}", g_worst, 1e-10))
        rows.append(_row("half_plane", f"im_F_dominates_d{d}", f_worst, 1e-10))
        rows.append(_row("half_plane", f"inverse_paths_d{d}", inv_worst, s.tol))
    return rows


def suite_nc_axioms(s: VerifySettings) -> List[CheckResult]:
    """Direct sums and similarities pass through M-series evaluation."""
    rng = s.rng(5)
    order, count = s.order_for(6), s.count(10)
    rows = []
    for d in s.dims_for():
        sum_worst = sim_worst = 0.0
        for _ in range(count):
            M = M_series(random_distribution(rng, d, order))
            a, c = _nilpotent_samples(rng, d, order, count=2)
            lhs = eval_nilpotent(M, direct_sum(a, c))
            sum_worst = max(sum_worst, float(np.max(np.abs(lhs - direct_sum(eval_nilpotent(M, a), eval_nilpotent(M, c))))))
            n = a.shape[0] // d
            S = rng.standard_normal((n, n)) + np.eye(n) * n
            S_inv = np.linalg.inv(S)
            moved = np.kron(S, np.eye(d)) @ a @ np.kron(S_inv, np.eye(d))
            t = M.d_D
            expected = np.kron(S, np.eye(t)) @ eval_nilpotent(M, a) @ np.kron(S_inv, np.eye(t))
            sim_worst = max(sim_worst, float(np.max(np.abs(eval_nilpotent(M, moved) - expected))))
        rows.append(_row("nc_axioms", f"direct_sum_d{d}", sum_worst, s.tol))
        rows.append(_row("nc_axioms", f"similarity_d{d}", sim_worst, s.tol))
    return rows


def indefinite_fixture(order: int) -> OVDistribution:
    """Scalar moment data with m_2 = −1 (not a distribution)."""
    tensors = [np.zeros((1,) * (k - 1) + (1, 1), dtype=complex) for k in range(1, order + 1)]
    tensors[1][...] = -1.0
    return distribution_from_tensors(InclusionSpec.identity(1), tensors)


def suite_positivity(s: VerifySettings) -> List[CheckResult]:
    """Block moment matrices of the built-in families are positive; the indefinite fixture is not."""
    order = max(s.order_for(6), 6)
    cutoff = 3
    slack = config.positivity_slack
    rows = []
    for d in s.dims_for():
        inc = InclusionSpec.identity(d)
        families = ["point_mass", "rademacher", "ov_semicircle"] + (["scalar_arcsine", "scalar_free_poisson"] if d == 1 else [])
        for family in families:
            beta = np.eye(d) * 0.7 if family == "point_mass" else None
            report = check_moment_positivity(make_standard(family, inc, order, beta=beta), cutoff)
            rows.append(_row("positivity", f"{family}_d{d}", -report["min_eigenvalue"], slack))
    report = check_moment_positivity(indefinite_fixture(order), 1)
    rows.append(_row("positivity", "indefinite_fixture_detected", abs(report["min_eigenvalue"] + 1.0), slack,
                     f"least eigenvalue {report['min_eigenvalue']:.6f}"))
    return rows


def suite_scalar(s: VerifySettings) -> List[CheckResult]:
    """Shift lemma and multiplicative homomorphism of the scalar Bercovici–Pata map."""
    rng = s.rng(6)
    N = s.scalar_order
    couples = [(random_scalar_pair(rng, N), random_scalar_pair(rng, N)) for _ in range(s.scalar_pairs)]
    report = verify_bp_homomorphism(couples, threshold=s.tol)
    masses = [(ScalarPair(scalar_point_mass(a, N), scalar_point_mass(b, N)),
               ScalarPair(scalar_point_mass(c, N), scalar_point_mass(e, N)))
              for a, b, c, e in [(0.5, 0.8, 0.6, -0.9), (0.7, 0.7, -0.5, 0.4)]]
    exact = verify_bp_homomorphism(masses, threshold=1e-11)
    return [
        _row("scalar", "shift_lemma", report["shift_lemma_residual"], s.tol),
        _row("scalar", "single_shift", report["single_shift_residual"], s.tol),
        _row("scalar", "homomorphism", report["homomorphism_residual"], s.tol),
        _row("scalar", "point_masses", max(exact["shift_lemma_residual"], exact["homomorphism_residual"],
                                           exact["single_shift_residual"]), 1e-11),
    ]


def suite_corollary(s: VerifySettings) -> List[CheckResult]:
    """The free square of rademacher (arcsine for d = 1) passes the divisibility test at cutoff 2."""
    order = max(s.order_for(6), 6)
    rows = []
    for d in s.dims_for():
        inc = InclusionSpec.identity(d)
        mu = make_standard("scalar_arcsine", inc, order) if d == 1 else power("free", make_standard("rademacher", inc, order), 2)
        report = free_power_divisibility_check(mu, 2, cutoff=2)
        rows.append(_row("corollary", f"boolean_half_cp_d{d}", -report["boolean_power_cp"]["min_eigenvalue"],
                         config.positivity_slack))
        rows.append(_row("corollary", f"reconvolution_d{d}", report["reconvolution_residual"], s.tol))
    return rows


SUITES: Dict[str, Callable[[VerifySettings], List[CheckResult]]] = {
    "oracle": suite_oracle,
    "linearization": suite_linearization,
    "clt": suite_clt,
    "bercovici_pata": suite_bercovici_pata,
    "bp_identities": suite_bp_identities,
    "subordination": suite_subordination,
    "identities": suite_identities,
    "half_plane": suite_half_plane,
    "nc_axioms": suite_nc_axioms,
    "positivity": suite_positivity,
    "scalar": suite_scalar,
    "corollary": suite_corollary,
}


def run_suites(name: str, settings: Optional[VerifySettings] = None) -> List[CheckResult]:
    """Run one suite or all of them, timing each under 'verify.<suite>'."""
    validate_suite_name(name)
    settings = settings or VerifySettings()
    names = list(SUITES) if name == "all" else [name]
    rows: List[CheckResult] = []
    for suite in names:
        logger.info(f"Running verification suite '{suite}'")
        with metrics_collector.timed(f"verify.{suite}"):
            result = SUITES[suite](settings)
        failed = [r["check"] for r in result if r["status"] == "fail"]
        if failed:
            logger.warning(f"Suite '{suite}' failed checks: {failed}")
        rows.extend(result)
    return rows
