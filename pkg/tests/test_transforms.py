"""
Unit tests for moment, Boolean, free and c-free transforms.
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.algebra import InclusionSpec
from modules.distribution import DistPair, make_standard, max_moment_distance, random_distribution, random_pair
from modules.guardrails import PreconditionException, SeriesTypeException, StructureException, UsageException
from modules.ncseries import NCSeries
from modules.transforms import (
    B_from_pair,
    B_series,
    M_series,
    R_series,
    cR_series,
    check_generating_pair_cp,
    distribution_from_series,
    extract_generating_pair,
    largest_cp_cutoff,
    moments_from_transform,
    pair_from_transforms,
    transform_of,
)


def coefficients(series):
    """Scalar coefficients of a series over B = D = C."""
    return np.array([complex(c.reshape(-1)[0]) for c in series.coeffs])


@pytest.mark.unit
class TestTransforms:
    """Test transform extraction on known laws."""

    def test_moment_series(self, rademacher6):
        """Test that M(b) = 1 + Σ m_k b^k over C."""
        assert_allclose(coefficients(M_series(rademacher6)), [1, 0, 1, 0, 1, 0, 1], atol=1e-12)

    def test_rademacher_free_cumulants(self, rademacher6):
        """Test rademacher free cumulants κ₂, κ₄, κ₆ = 1, −1, 2."""
        R = coefficients(R_series(rademacher6))
        assert_allclose(R[[2, 4, 6]], [1, -1, 2], atol=1e-12)
        assert_allclose(R[[1, 3, 5]], 0, atol=1e-12)

    def test_rademacher_boolean_cumulants(self, rademacher6):
        """Test that the Boolean transform of rademacher is b²."""
        assert_allclose(coefficients(B_series(rademacher6)), [0, 0, 1, 0, 0, 0, 0], atol=1e-12)

    def test_semicircle_r_transform(self, semicircle6):
        """Test that the semicircle R-transform is b² over C."""
        assert_allclose(coefficients(R_series(semicircle6)), [0, 0, 1, 0, 0, 0, 0], atol=1e-12)

    def test_cr_of_diagonal_pair_is_r(self, rng):
        """Test that cR of (μ, μ) equals R_μ."""
        mu = random_distribution(rng, 2, 4)
        assert cR_series(DistPair(mu, mu)).max_difference(R_series(mu)) < 1e-10

    @pytest.mark.parametrize("inclusion", [InclusionSpec.identity(2), InclusionSpec.block_diagonal(1, 2)],
                             ids=["identity", "block_diagonal"])
    def test_cr_against_zero_point_mass_is_b(self, rng, inclusion):
        """Test that cR of (μ, δ_0) equals B_μ, also for μ valued in a larger D."""
        mu = random_pair(rng, inclusion.d_B, 4, inclusion=inclusion).mu
        zero = make_standard("point_mass", InclusionSpec.identity(inclusion.d_B), 4)
        assert cR_series(DistPair(mu, zero)).max_difference(B_series(mu)) < 1e-10

    def test_r_needs_b_valued(self):
        """Test that R-transforms refuse D ≠ B."""
        d = make_standard("rademacher", InclusionSpec.block_diagonal(1, 2), 4)
        with pytest.raises(SeriesTypeException):
            R_series(d)

    def test_transform_of_dispatch(self, rademacher6):
        """Test dispatch by kind and that cR needs a pair."""
        assert transform_of("B", rademacher6).kind == "B"
        with pytest.raises(SeriesTypeException):
            transform_of("cR", rademacher6)
        with pytest.raises(ValueError):
            transform_of("S", rademacher6)


@pytest.mark.unit
class TestInversion:
    """Test recovering moments from transforms."""

    @pytest.mark.parametrize("kind", ["B", "R"])
    def test_inverse_recovers_moments(self, rng, kind):
        """Test that inverting B and R recovers the moments at d = 2."""
        mu = random_distribution(rng, 2, 5)
        back = moments_from_transform(kind, transform_of(kind, mu))
        assert max_moment_distance(back, mu) < 1e-10

    def test_pair_recovered(self, rng):
        """Test that (cR, R_ν) recovers both coordinates of a pair."""
        pair = random_pair(rng, 2, 4)
        back = pair_from_transforms(cR_series(pair), R_series(pair.nu))
        assert max_moment_distance(back.mu, pair.mu) < 1e-10
        assert max_moment_distance(back.nu, pair.nu) < 1e-10

    def test_cr_needs_second_coordinate(self, rademacher6):
        """Test that cR inversion without R_ν is a usage error."""
        with pytest.raises(UsageException):
            moments_from_transform("cR", B_series(rademacher6))

    def test_moment_series_must_start_with_one(self, scalar_inclusion):
        """Test that a series with constant 0 is not a moment series."""
        with pytest.raises(PreconditionException):
            distribution_from_series(NCSeries.zero(scalar_inclusion, 3))


@pytest.mark.unit
class TestGeneratingPairs:
    """Test generating pairs of transforms."""

    def test_rademacher_pair(self, rademacher6):
        """Test that B = b² gives γ = 0 and σ(1) = 1."""
        pair = extract_generating_pair(B_series(rademacher6))
        assert_allclose(pair.gamma, 0, atol=1e-12)
        assert_allclose(pair.sigma[0].reshape(-1), [1.0], atol=1e-12)
        assert pair.is_gamma_selfadjoint()
        assert pair.hermitian_residual() < 1e-12

    def test_pair_reassembles_transform(self, rng):
        """Test that expanding (γ, σ) reproduces B."""
        B = B_series(random_distribution(rng, 2, 4))
        assert B_from_pair(extract_generating_pair(B)).max_difference(B) < 1e-10

    def test_nonzero_constant_rejected(self, scalar_inclusion):
        """Test that transforms with a constant term are rejected."""
        with pytest.raises(PreconditionException):
            extract_generating_pair(NCSeries.one(scalar_inclusion, 3))

    def test_non_factoring_series(self):
        """Test that a coefficient without a free trailing slot raises StructureException."""
        inc = InclusionSpec.identity(2)
        F = NCSeries.zero(inc, 2)
        c1 = np.zeros((4, 2, 2), dtype=complex)
        c1[0] = np.eye(2)
        with pytest.raises(StructureException):
            extract_generating_pair(F.with_coefficient(1, c1))

    def test_semicircle_pair_is_cp(self, semicircle6):
        """Test that the R-transform pair of the semicircle passes the CP test."""
        pair = extract_generating_pair(R_series(semicircle6))
        assert check_generating_pair_cp(pair, largest_cp_cutoff(6))["passed"]

    def test_cutoff_precondition(self, rademacher6):
        """Test that the cutoff is limited by the order."""
        pair = extract_generating_pair(B_series(rademacher6))
        with pytest.raises(PreconditionException):
            check_generating_pair_cp(pair, 3)
