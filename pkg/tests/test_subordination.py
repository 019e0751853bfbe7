"""
Tests for model Cauchy transforms, subordination fixed points and the identity suite.
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.algebra import direct_sum
from modules.distribution import standard_model
from modules.guardrails import DomainException, GridException, PreconditionException
from modules.subordination import (
    FixedPointConfig,
    asymptotic_moments,
    cauchy_G,
    format_point,
    grid_points,
    half_plane_report,
    omega_fixed_point,
    reciprocal_F,
    tail_bound,
    verify_subordination_suite,
)

pytestmark = pytest.mark.numeric


def point(z, d=1):
    return z * np.eye(d, dtype=complex)


class TestCauchyTransforms:
    """Test G and F of operator models."""

    @pytest.mark.parametrize("y", [0.5, 1.0, 4.0])
    def test_rademacher_cauchy(self, rademacher_model, y):
        """Test G(iy) = ½[(iy − 1)⁻¹ + (iy + 1)⁻¹] for the rademacher model."""
        z = 1j * y
        expected = 0.5 * (1 / (z - 1) + 1 / (z + 1))
        assert_allclose(cauchy_G(rademacher_model, "E_B", point(z)), [[expected]], atol=1e-12)

    def test_point_mass_reciprocal(self):
        """Test that F(b) = b − β for a point mass."""
        model = standard_model("point_mass", d_B=2, beta=np.diag([0.3, -0.2]))
        b = point(2j, 2)
        assert_allclose(reciprocal_F(model, "E_B", b), b - np.diag([0.3, -0.2]), atol=1e-12)

    def test_outside_half_plane(self, rademacher_model):
        """Test that b = −i is rejected."""
        with pytest.raises(PreconditionException):
            cauchy_G(rademacher_model, "E_B", point(-1j))

    def test_half_plane_report(self, semicircle_model_2):
        """Test Im G ≺ 0 and Im F ⪰ Im b at b = i·1."""
        report = half_plane_report(semicircle_model_2, "E_B", point(1j, 2))
        assert report["g_max_imag_eigenvalue"] < 0
        assert report["f_min_excess_eigenvalue"] > -1e-10

    def test_asymptotic_moments(self, rademacher_model):
        """Test that contour moments of the rademacher model are 1, 0, 1, 0, …"""
        moments = asymptotic_moments(rademacher_model, "E_B", 6)
        assert_allclose([m[0, 0] for m in moments], [1, 0, 1, 0, 1, 0, 1], atol=1e-10)


class TestFixedPoints:
    """Test subordination fixed points."""

    def test_point_mass_omega(self):
        """Test that ω = b − β for a scalar point mass and n = 2."""
        model = standard_model("point_mass", d_B=1, beta=np.array([[0.3]]))
        result = omega_fixed_point(model, 2, point(1j))
        assert_allclose(result.omega, point(1j - 0.3), atol=1e-10)

    def test_zero_point_mass_omega_is_b(self):
        """Test that δ₀ has ω = b."""
        model = standard_model("point_mass", d_B=2)
        b = point(3j, 2)
        assert_allclose(omega_fixed_point(model, 3, b).omega, b, atol=1e-10)

    @pytest.mark.parametrize("y", [4.0, 6.0, 8.0])
    def test_rademacher_convergence(self, rademacher_model, y):
        """Test residual below 1e-10 within 200 iterations on the default grid."""
        result = omega_fixed_point(rademacher_model, 2, point(1j * y))
        assert result.residual < 1e-10
        assert result.iterations <= 200

    def test_omega_respects_direct_sums(self, semicircle_model_2):
        """Test that ω(b ⊕ b′) = ω(b) ⊕ ω(b′) at amplification level 2."""
        b = point(4j, 2) + np.array([[0.3, 0.1], [0.1, -0.2]])
        b_prime = point(6j, 2)
        joint = omega_fixed_point(semicircle_model_2, 2, direct_sum(b, b_prime)).omega
        separate = direct_sum(omega_fixed_point(semicircle_model_2, 2, b).omega,
                              omega_fixed_point(semicircle_model_2, 2, b_prime).omega)
        assert joint.shape == (4, 4)
        assert_allclose(joint, separate, atol=1e-8)

    def test_n_fold_at_least_two(self, rademacher_model):
        """Test that n = 1 raises DomainException."""
        with pytest.raises(DomainException):
            omega_fixed_point(rademacher_model, 1, point(1j))

    def test_bad_damping(self):
        """Test that damping outside (0, 1] is rejected."""
        with pytest.raises(DomainException):
            FixedPointConfig(damping=1.5)


class TestSeriesBridge:
    """Test the tail bound and grid helpers."""

    def test_tail_bound_value(self):
        """Test ‖b⁻¹‖(M‖b⁻¹‖)^{N+1}/(1 − M‖b⁻¹‖) at b = 4i, M = 2, N = 3."""
        assert tail_bound(2.0, point(4j), 3) == pytest.approx(0.25 * 0.5 ** 4 / 0.5)

    def test_tail_bound_diverges(self):
        """Test that M‖b⁻¹‖ ≥ 1 raises GridException."""
        with pytest.raises(GridException):
            tail_bound(1.0, point(0.5j), 6)

    def test_grid_points(self):
        """Test that scalars become i·y·1."""
        points = grid_points([4, 6], 2)
        assert_allclose(points[1], point(6j, 2))
        assert "4j" in format_point(points[0])


@pytest.mark.slow
class TestIdentitySuite:
    """Test the subordination identities on the default grid."""

    def test_rademacher_rows_pass(self, rademacher_model):
        """Test that all rows pass for the rademacher model."""
        rows = verify_subordination_suite(rademacher_model, (4, 6, 8), order=8)
        assert len(rows) == 3
        assert all(r["passed"] for r in rows), rows

    def test_semicircle_rows_pass(self, semicircle_model_2):
        """Test that all rows pass for the semicircle model over M_2."""
        rows = verify_subordination_suite(semicircle_model_2, (4, 6, 8), order=8)
        assert all(r["passed"] for r in rows), rows
        assert all(r["g_subordination_residual"] <= r["tail_bound"] + 1e-9 for r in rows)

    def test_boolean_power_range(self, rademacher_model):
        """Test that a Boolean power outside (0, 1] is rejected."""
        with pytest.raises(DomainException):
            verify_subordination_suite(rademacher_model, (4,), order=4, boolean_t=1.5)

    def test_close_point_raises(self, rademacher_model):
        """Test that a point near the real axis raises GridException without auto scaling."""
        with pytest.raises(GridException):
            verify_subordination_suite(rademacher_model, (1.0,), order=4)

    def test_auto_scale(self, rademacher_model):
        """Test that auto scaling moves the point far enough out."""
        rows = verify_subordination_suite(rademacher_model, (1.0,), order=4, auto_scale=True)
        assert rows[0]["passed"]
        assert rows[0]["tail_bound"] < 1e-8
