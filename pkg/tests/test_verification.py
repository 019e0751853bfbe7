"""
Tests for the verification suites behind the verify command.
"""
import pytest

from modules.cli import build_parser, job_from_args
from modules.distribution import check_moment_positivity
from modules.monitoring import metrics_collector
from modules.verification import (
    ORACLE_DIMS,
    ORACLE_PROTOCOL,
    SUITES,
    VerifySettings,
    indefinite_fixture,
    run_suites,
)

SMALL = VerifySettings(order=4, samples=2, scalar_order=6, scalar_pairs=3, half_plane_points=20)


def failures(rows):
    return [r for r in rows if r["status"] != "pass"]


@pytest.mark.unit
class TestSuites:
    """Test individual suites at small settings."""

    @pytest.mark.parametrize("name", ["positivity", "scalar", "bercovici_pata", "nc_axioms", "half_plane", "corollary"])
    def test_suite_passes(self, name):
        """Test that the suite reports no failures."""
        rows = run_suites(name, SMALL)
        assert rows
        assert not failures(rows), failures(rows)
        assert {r["suite"] for r in rows} == {name}

    @pytest.mark.oracle
    def test_oracle_suite(self):
        """Test transform convolutions against the oracle."""
        assert not failures(run_suites("oracle", SMALL))

    def test_rows_are_reproducible(self):
        """Test that a seeded suite gives the same rows twice."""
        assert run_suites("nc_axioms", SMALL) == run_suites("nc_axioms", SMALL)

    def test_row_shape(self):
        """Test the CheckResult keys."""
        row = run_suites("positivity", SMALL)[0]
        assert {"suite", "check", "residual", "threshold", "status"} <= set(row)

    def test_unknown_suite(self):
        """Test that unknown suite names are rejected."""
        with pytest.raises(ValueError):
            run_suites("everything", SMALL)

    def test_suites_are_timed(self):
        """Test that each suite run is recorded under verify.<suite>."""
        run_suites("positivity", SMALL)
        assert "verify.positivity" in metrics_collector.metrics

    def test_registry(self):
        """Test that every registered suite has a docstring."""
        assert all(fn.__doc__ for fn in SUITES.values())


@pytest.mark.slow
class TestSlowSuites:
    """Test the harness and subordination suites."""

    @pytest.mark.parametrize("name", ["clt", "subordination", "identities"])
    def test_suite_passes(self, name):
        """Test that the suite reports no failures at the default grid."""
        rows = run_suites(name, SMALL)
        assert not failures(rows), failures(rows)


@pytest.mark.unit
class TestIndefiniteFixture:
    """Test the deliberately non-positive moment data."""

    def test_least_eigenvalue(self):
        """Test least eigenvalue −1 at cutoff 1."""
        report = check_moment_positivity(indefinite_fixture(4), 1)
        assert not report["passed"]
        assert report["min_eigenvalue"] == pytest.approx(-1.0)

    def test_order(self):
        """Test that the fixture has the requested order."""
        assert indefinite_fixture(6).order == 6


@pytest.mark.unit
class TestSettings:
    """Test suite defaults and command-line overrides."""

    def test_defaults_are_per_suite(self):
        """Test that unset knobs fall back to the suite's own defaults."""
        s = VerifySettings()
        assert s.order_for(6) == 6 and s.count(20) == 20
        assert s.dims_for() == (1,)
        assert s.dims_for(ORACLE_DIMS) == (1, 2)

    def test_overrides_win(self):
        """Test that explicit order, samples and dims replace every default."""
        s = VerifySettings(order=4, samples=2, dims=(2,))
        assert (s.order_for(8), s.count(50), s.dims_for(ORACLE_DIMS)) == (4, 2, (2,))

    def test_oracle_protocol(self):
        """Test the acceptance protocol per convolution kind."""
        assert ORACLE_PROTOCOL == {"free": (6, 50), "boolean": (8, 50), "cfree": (5, 30)}

    @pytest.mark.oracle
    def test_oracle_orders_per_kind(self):
        """Test that the oracle suite runs each kind at its own order."""
        rows = run_suites("oracle", VerifySettings(samples=1, dims=(1,)))
        details = {r["check"]: r["detail"] for r in rows}
        assert details == {
            "free_d1": "1 random inputs, order 6",
            "boolean_d1": "1 random inputs, order 8",
            "cfree_d1": "1 random inputs, order 5",
        }
        assert not failures(rows)

    def test_cli_leaves_dims_unset(self):
        """Test that verify without --dim keeps the suite dimensions."""
        job = job_from_args(build_parser().parse_args(["verify", "--suite", "oracle"]))
        assert "dim" not in job.model_fields_set
        assert job.samples is None
