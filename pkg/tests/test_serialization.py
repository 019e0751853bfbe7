"""
Unit tests for JSON artifacts and CSV tables.
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.algebra import InclusionSpec
from modules.config import config
from modules.distribution import DistPair, OperatorModel, make_standard, max_moment_distance
from modules.guardrails import ResourceException, UsageException
from modules.scalar import ScalarDist, ScalarPair, scalar_point_mass
from modules.serialization import csv_text, dump, dumps, load, loads, round_float, to_payload


@pytest.mark.unit
class TestJSON:
    """Test deterministic JSON artifacts."""

    def test_dumps_is_deterministic(self, rademacher6):
        """Test that repeated dumps give identical text."""
        assert dumps(rademacher6) == dumps(rademacher6)
        assert dumps({"b": 1, "a": 0.1 + 0.2}) == '{\n  "a": 0.3,\n  "b": 1\n}\n'

    def test_distribution_survives(self, semicircle6):
        """Test that a distribution reloads with the same moments."""
        assert max_moment_distance(loads(dumps(semicircle6)), semicircle6) < 1e-12

    def test_identity_inclusion_label(self):
        """Test that identity and block-diagonal inclusions keep their labels."""
        for inc in (InclusionSpec.identity(2), InclusionSpec.block_diagonal(1, 2)):
            back = loads(dumps(make_standard("rademacher", inc, 3)))
            assert back.inclusion.is_identity == inc.is_identity
            assert back.inclusion.label == inc.label

    def test_pair_and_model(self, rademacher6, semicircle6, rademacher_model):
        """Test that pairs and operator models reload as such."""
        pair = loads(dumps(DistPair(rademacher6, semicircle6)))
        assert isinstance(pair, DistPair)
        model = loads(dumps(rademacher_model))
        assert isinstance(model, OperatorModel)
        assert_allclose(model.X, rademacher_model.X)

    def test_scalar_artifacts(self):
        """Test scalar laws with real and complex moments."""
        d = ScalarDist((1.0, 2 + 1j))
        assert loads(dumps(d)).moments == d.moments
        pair = loads(dumps(ScalarPair(scalar_point_mass(0.5, 3), scalar_point_mass(2.0, 3))))
        assert isinstance(pair, ScalarPair)

    def test_dump_creates_parents(self, tmp_path, rademacher6):
        """Test that dump writes into a new directory and load reads it back."""
        path = tmp_path / "out" / "rad.json"
        dump(rademacher6, path)
        assert max_moment_distance(load(path), rademacher6) == 0.0

    def test_payload_values(self):
        """Test rounding and non-finite floats."""
        assert round_float(0.1 + 0.2) == 0.3
        assert round_float(-0.0) == 0.0
        assert to_payload(float("inf")) == "inf"
        assert to_payload(1 + 2j) == [1.0, 2.0]
        assert to_payload(np.bool_(True)) is True


@pytest.mark.unit
class TestLoadErrors:
    """Test that malformed artifacts become usage errors."""

    def test_invalid_json_location(self):
        """Test that JSON errors name line and column."""
        with pytest.raises(UsageException, match=r"in\.json:1:2"):
            loads("{bad", "in.json")

    def test_schema_error(self):
        """Test that a wrong moment count is reported."""
        with pytest.raises(UsageException, match="expected 2 moments"):
            loads('{"order": 2, "moments": [1.0]}')

    def test_schema_location(self):
        """Test that a schema error names the offending field."""
        with pytest.raises(UsageException, match="order"):
            loads('{"order": "two", "moments": [1.0]}')

    def test_not_an_object(self):
        """Test that a JSON list is rejected."""
        with pytest.raises(UsageException, match="JSON object"):
            loads("[1, 2]")

    def test_unrecognized(self):
        """Test that unknown artifacts are rejected."""
        with pytest.raises(UsageException, match="unrecognized"):
            loads('{"weights": []}')

    def test_missing_file(self, tmp_path):
        """Test that unreadable paths raise UsageException."""
        with pytest.raises(UsageException, match="cannot read"):
            load(tmp_path / "missing.json")

    def test_exit_code(self):
        """Test that load errors exit with status 2."""
        with pytest.raises(UsageException) as info:
            loads("")
        assert info.value.exit_code == 2

    def test_guardrail_keeps_its_class(self, monkeypatch, rademacher6):
        """Test that a guardrail hit while building the object stays a ResourceException."""
        text = dumps(rademacher6)
        monkeypatch.setattr(config, "max_order", 4)
        with pytest.raises(ResourceException) as info:
            loads(text)
        assert info.value.exit_code == 4


@pytest.mark.unit
class TestCSV:
    """Test CSV tables."""

    def test_cells(self):
        """Test lowercase booleans and 12 significant digits."""
        assert csv_text([{"a": 1, "ok": True, "x": 1 / 3}]) == "a,ok,x\n1,true,0.333333333333\n"

    def test_columns(self):
        """Test that given columns fix the order and missing keys stay empty."""
        text = csv_text([{"b": 2}, {"a": 1, "b": 3}], columns=["a", "b"])
        assert text == "a,b\n,2\n1,3\n"

    def test_first_seen_order(self):
        """Test that column order follows first appearance."""
        assert csv_text([{"z": 1}, {"y": 2}]).splitlines()[0] == "z,y"
