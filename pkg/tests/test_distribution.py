"""
Unit tests for distributions, positivity checks and operator models.
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.algebra import InclusionSpec
from modules.distribution import (
    DistPair,
    OperatorModel,
    check_moment_positivity,
    check_uniform_bound,
    dilate,
    distribution_from_tensors,
    make_standard,
    max_moment_distance,
    mixture_with_zero,
    model_pair,
    moment_distance,
    moments_from_model,
    random_distribution,
    standard_model,
)
from modules.guardrails import DimensionException, ModelException, PreconditionException, SeriesTypeException
from tests.conftest import scalar_values


@pytest.mark.unit
class TestStandardFamilies:
    """Test closed-form families over B = C."""

    def test_rademacher(self, rademacher6):
        """Test rademacher moments 0, 1, 0, 1, 0, 1."""
        assert_allclose(scalar_values(rademacher6), [0, 1, 0, 1, 0, 1], atol=1e-12)

    def test_semicircle_catalan(self, semicircle6):
        """Test that even semicircle moments are Catalan numbers 1, 2, 5."""
        assert_allclose(scalar_values(semicircle6), [0, 1, 0, 2, 0, 5], atol=1e-12)

    def test_arcsine(self, scalar_inclusion):
        """Test arcsine moments 2, 6, 20 at orders 2, 4, 6."""
        d = make_standard("scalar_arcsine", scalar_inclusion, 6)
        assert_allclose(scalar_values(d), [0, 2, 0, 6, 0, 20])

    def test_free_poisson(self, scalar_inclusion):
        """Test free Poisson(1) moments 1, 2, 5, 14."""
        d = make_standard("scalar_free_poisson", scalar_inclusion, 4, lam=1.0)
        assert_allclose(scalar_values(d), [1, 2, 5, 14])

    def test_point_mass(self, scalar_inclusion):
        """Test that δ_β has moments β^k."""
        d = make_standard("point_mass", scalar_inclusion, 4, beta=np.array([[0.5]]))
        assert_allclose(scalar_values(d), [0.5, 0.25, 0.125, 0.0625])

    def test_matrix_point_mass(self):
        """Test m_2(b) = β b β for a matrix point mass."""
        beta = np.diag([1.0, -2.0])
        d = make_standard("point_mass", InclusionSpec.identity(2), 2, beta=beta)
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        m2 = np.tensordot(b.reshape(-1), d.moment_tensor(2), axes=(0, 0))
        assert_allclose(m2, beta @ b @ beta)

    def test_unknown_family(self, scalar_inclusion):
        """Test that unknown names raise ModelException."""
        with pytest.raises(ModelException):
            make_standard("cauchy", scalar_inclusion, 4)

    def test_operator_valued_semicircle_variance(self):
        """Test that m_2(b) = η(b) = b for the default η."""
        d = make_standard("ov_semicircle", InclusionSpec.identity(2), 4)
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert_allclose(np.tensordot(b.reshape(-1), d.moment_tensor(2), axes=(0, 0)), b, atol=1e-12)

    def test_hermitian(self):
        """Test that built-in families are hermitian."""
        for family in ("rademacher", "ov_semicircle"):
            assert make_standard(family, InclusionSpec.identity(2), 5).is_hermitian()


@pytest.mark.unit
class TestDistributionHelpers:
    """Test construction helpers and distances."""

    def test_order_mismatch(self, rademacher6, semicircle6):
        """Test that pairs need a shared order."""
        with pytest.raises(DimensionException):
            DistPair(rademacher6, semicircle6.truncate(4))

    def test_pair_second_coordinate_b_valued(self):
        """Test that ν must be B-valued."""
        inc = InclusionSpec.block_diagonal(1, 2)
        mu = make_standard("rademacher", inc, 4)
        with pytest.raises(SeriesTypeException):
            DistPair(mu, mu)

    def test_dilate(self, semicircle6):
        """Test that dilation by c scales m_k by c^k."""
        assert_allclose(scalar_values(dilate(semicircle6, 2.0)), [0, 4, 0, 32, 0, 320], atol=1e-12)

    def test_mixture_with_zero(self, rademacher6):
        """Test that (1 − p)δ₀ + p·μ has moments p·m_k."""
        assert_allclose(scalar_values(mixture_with_zero(rademacher6, 0.25)), 0.25 * scalar_values(rademacher6))

    def test_distance(self, rademacher6, semicircle6):
        """Test the max moment distance between rademacher and semicircle."""
        assert max_moment_distance(rademacher6, semicircle6) == pytest.approx(4.0)

    def test_distance_per_order(self, rademacher6, semicircle6):
        """Test per-order distances, including a single requested order."""
        per_order = moment_distance(rademacher6, semicircle6)
        assert_allclose([per_order[k] for k in range(1, 7)], [0, 0, 0, 1, 0, 4], atol=1e-12)
        assert moment_distance(rademacher6, semicircle6, 4) == pytest.approx(1.0)

    def test_distance_order_mismatch(self, rademacher6, semicircle6):
        """Test that distributions of different orders are not compared."""
        with pytest.raises(DimensionException):
            moment_distance(rademacher6, semicircle6.truncate(4))

    def test_uniform_bound(self, rademacher6):
        """Test that rademacher satisfies ‖m_k‖ ≤ 1."""
        assert check_uniform_bound(rademacher6)["valid"]
        assert not check_uniform_bound(dilate(rademacher6, 2.0), bound=1.0)["valid"]


@pytest.mark.unit
class TestPositivity:
    """Test block moment matrices."""

    def test_families_pass(self):
        """Test that built-in families pass at cutoff 3."""
        for d in (1, 2):
            inc = InclusionSpec.identity(d)
            for family in ("rademacher", "ov_semicircle", "point_mass"):
                report = check_moment_positivity(make_standard(family, inc, 6), 3)
                assert report["passed"], (family, d, report["min_eigenvalue"])

    def test_indefinite_fixture(self, scalar_inclusion):
        """Test that m_2 = −1 gives least eigenvalue −1 at cutoff 1."""
        d = distribution_from_tensors(scalar_inclusion, [np.zeros((1, 1)), -np.ones((1, 1, 1))])
        report = check_moment_positivity(d, 1)
        assert not report["passed"]
        assert report["min_eigenvalue"] == pytest.approx(-1.0)

    def test_cutoff_needs_moments(self, rademacher6):
        """Test that cutoff 4 needs order 8."""
        with pytest.raises(PreconditionException):
            check_moment_positivity(rademacher6, 4)

    def test_random_distribution_positive(self, rng):
        """Test that moments of random models are positive."""
        assert check_moment_positivity(random_distribution(rng, 2, 4), 2)["passed"]


@pytest.mark.unit
class TestOperatorModels:
    """Test operator models and their moments."""

    def test_rademacher_model_matches_family(self, rademacher_model, rademacher6):
        """Test that the model moments equal the closed form."""
        assert max_moment_distance(moments_from_model(rademacher_model, "E_B", 6), rademacher6) < 1e-12

    def test_semicircle_model_matches_family(self):
        """Test that the Jacobi model reproduces semicircle moments below twice its size."""
        model = standard_model("semicircle", d_B=1, size=4)
        d = moments_from_model(model, "E_B", 6)
        assert_allclose(scalar_values(d), [0, 1, 0, 2, 0, 5], atol=1e-12)

    def test_two_state_pair_differs(self):
        """Test that θ and E_B give different distributions for two_state."""
        pair = model_pair(standard_model("two_state", d_B=1), 4)
        assert max_moment_distance(pair.mu, pair.nu) > 1e-3

    def test_model_bound(self, rademacher_model):
        """Test that the model bound is ‖X‖."""
        assert rademacher_model.bound == pytest.approx(1.0)

    def test_non_selfadjoint_rejected(self, rademacher_model):
        """Test that a non-selfadjoint X fails validation."""
        m = rademacher_model
        bad = OperatorModel(np.array([[0.0, 1.0], [0.0, 0.0]]), m.E_B, m.theta, m.iota_A, m.inclusion)
        with pytest.raises(ModelException, match="selfadjoint"):
            bad.validate()

    def test_unknown_model(self):
        """Test that unknown model names raise ModelException."""
        with pytest.raises(ModelException):
            standard_model("gaussian")
