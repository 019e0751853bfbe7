"""
Tests for the triangular-array limit harness.
"""
from dataclasses import replace

import numpy as np
import pytest

from modules.algebra import InclusionSpec
from modules.config import config
from modules.distribution import dilate, make_standard
from modules.guardrails import PreconditionException, ResourceException
from modules.limits import ArraySpec, cfree_clt_array, clt_array, limit_harness, point_mass_array, poisson_array


@pytest.mark.slow
class TestCentralLimit:
    """Test the free and Boolean central limit arrays."""

    @pytest.fixture(scope="class")
    def report(self):
        return limit_harness(clt_array(InclusionSpec.identity(1), 6), 256)

    def test_rows(self, report):
        """Test that rows run over powers of two up to 256."""
        assert [r["n"] for r in report["rows"]] == [2 ** j for j in range(9)]

    def test_decay_ratio(self, report):
        """Test that the order-4 distance halves per doubling of n."""
        assert report["decay_ratio"] == pytest.approx(0.5, abs=0.05)
        assert report["monotone_decay"]

    def test_final_distance(self, report):
        """Test that the free row at n = 256 is within 1e-2 of the semicircle law."""
        assert report["final_distance"] < 1e-2
        assert report["rows"][-1]["free_distance"] == pytest.approx(1 / 256, rel=1e-6)

    def test_scoreboard(self, report):
        """Test that all four limit conditions hold together."""
        assert report["boolean_converged"]
        assert report["free_converged"]
        assert report["scaled_moments_converged"]
        assert report["generating_pair_cp"]
        assert report["bp_consistent"]

    def test_uniform_bound(self, report):
        """Test that every free row respects the declared bound."""
        assert all(r["uniform_bound_ok"] for r in report["rows"])


@pytest.mark.unit
class TestArrays:
    """Test other arrays and metadata checks."""

    def test_point_mass_array(self):
        """Test that δ_{β/n} rows reach δ_β in both limits."""
        report = limit_harness(point_mass_array(0.5 * np.eye(2), InclusionSpec.identity(2), 4), 16)
        assert report["bp_consistent"]
        assert report["free_converged"]
        assert report["final_distance"] < 1e-10

    def test_cfree_clt(self):
        """Test the c-free central limit array of pairs."""
        report = limit_harness(cfree_clt_array(1, 6), 64)
        assert report["kind"] == "cfree"
        assert report["free_converged"]
        assert report["scaled_moments_converged"]

    def test_row_lengths_must_increase(self, rademacher6):
        """Test that a constant k_n is rejected."""
        spec = ArraySpec(lambda n: (rademacher6, 3), bound=1.0)
        with pytest.raises(PreconditionException):
            limit_harness(spec, 4)

    def test_row_length_guardrail(self, rademacher6):
        """Test that k_n beyond the guardrail raises ResourceException."""
        spec = ArraySpec(lambda n: (rademacher6, config.max_row_length + n), bound=1.0)
        with pytest.raises(ResourceException):
            limit_harness(spec, 4)

    def test_cfree_needs_pairs(self, rademacher6):
        """Test that a c-free array of single rows is rejected."""
        spec = ArraySpec(lambda n: (rademacher6, n), bound=1.0, kind="cfree")
        with pytest.raises(PreconditionException):
            limit_harness(spec, 4)

    def test_single_row_without_target(self):
        """Test that an untargeted array needs rows beyond its own candidate."""
        spec = poisson_array(np.eye(1), 1.0, InclusionSpec.identity(1), 4)
        with pytest.raises(PreconditionException):
            limit_harness(spec, 1)
        with pytest.raises(PreconditionException):
            limit_harness(spec, 2)

    def test_empty_row_indices(self):
        """Test that an empty list of row indices is rejected."""
        with pytest.raises(PreconditionException):
            limit_harness(clt_array(InclusionSpec.identity(1), 4), 8, n_values=[])

    def test_untargeted_rows_are_scored(self):
        """Test that three rows without a target score two of them."""
        spec = replace(point_mass_array(np.eye(1), InclusionSpec.identity(1), 4), boolean_target=None, free_target=None)
        report = limit_harness(spec, 4)
        assert len(report["rows"]) == 3


@pytest.mark.unit
class TestBercoviciPataConsistency:
    """Test that the scoreboard separates correct from wrong free limits."""

    def test_true_targets(self):
        """Test that the rademacher and semicircle targets are related by bp_map."""
        report = limit_harness(clt_array(InclusionSpec.identity(1), 6), 64, n_values=[8, 16, 32, 64])
        assert report["bp_residual"] < 1e-8
        assert report["bp_consistent"]

    def test_perturbed_free_target(self):
        """Test that a dilated semicircle target is not accepted as the free limit."""
        spec = clt_array(InclusionSpec.identity(1), 6)
        wrong = dilate(make_standard("ov_semicircle", InclusionSpec.identity(1), 6), 1.1)
        report = limit_harness(replace(spec, free_target=wrong), 16)
        assert report["bp_residual"] > 0.1
        assert not report["bp_consistent"]

    def test_rows_without_targets(self):
        """Test row residuals of an untargeted point-mass array."""
        spec = replace(point_mass_array(0.5 * np.eye(1), InclusionSpec.identity(1), 4),
                       boolean_target=None, free_target=None)
        report = limit_harness(spec, 16)
        assert max(r["bp_residual"] for r in report["rows"]) < 1e-12
        assert report["bp_consistent"]
