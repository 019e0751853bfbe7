"""
Tests for the command-line front end and main entry point.
"""
import io
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from main import main
from modules.algebra import InclusionSpec
from modules.cli import (
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_RESOURCE,
    EXIT_USAGE,
    JobSpec,
    build_parser,
    job_from_args,
    render,
    run,
)
from modules.config import config
from modules.convolution import convolve
from modules.distribution import make_standard
from modules.guardrails import UsageException
from modules.limits import LIMIT_COLUMNS
from modules.scalar import free_poisson, scalar_point_mass
from modules.serialization import dump, loads
from tests.conftest import scalar_values


def invoke(*argv):
    """Parse argv, run the job and return (status, stdout text)."""
    job = job_from_args(build_parser().parse_args([str(a) for a in argv]))
    stream = io.StringIO()
    return run(job, stream), stream.getvalue()


@pytest.fixture
def rademacher_file(tmp_path, rademacher6):
    path = tmp_path / "rad.json"
    dump(rademacher6, path)
    return path


@pytest.mark.integration
class TestCommands:
    """Test each subcommand end to end."""

    def test_convolve(self, rademacher_file):
        """Test that free convolution of two rademacher files gives arcsine moments."""
        status, text = invoke("convolve", "--kind", "free", rademacher_file, rademacher_file)
        assert status == EXIT_OK
        assert_allclose(scalar_values(loads(text))[[1, 3]], [2, 6], atol=1e-10)

    def test_output_matches_engine(self, rademacher_file, rademacher6):
        """Test that CLI output equals rendering the direct engine call."""
        _, text = invoke("convolve", "--kind", "boolean", rademacher_file, rademacher_file)
        assert text == render(convolve("boolean", rademacher6, rademacher6), "json")

    def test_bp(self, rademacher_file, semicircle6):
        """Test that bp of rademacher is the semicircle law."""
        status, text = invoke("bp", rademacher_file)
        assert status == EXIT_OK
        assert_allclose(scalar_values(loads(text)), scalar_values(semicircle6), atol=1e-10)

    def test_order_truncates(self, rademacher_file):
        """Test that --order truncates the inputs."""
        _, text = invoke("bp", rademacher_file, "--order", "4")
        assert loads(text).order == 4

    def test_limits_csv(self):
        """Test that limits writes the row table as CSV by default."""
        status, text = invoke("limits", "--kind", "point_mass", "--order", "4", "--n-max", "8")
        assert status == EXIT_OK
        lines = text.splitlines()
        assert lines[0] == ",".join(LIMIT_COLUMNS)
        assert len(lines) == 1 + 4

    def test_subordinate(self):
        """Test the rademacher model on the default grid."""
        status, text = invoke("subordinate", "--model", "rademacher")
        assert status == EXIT_OK
        assert len(text.splitlines()) == 1 + 3

    def test_scalar_T(self, tmp_path):
        """Test that T of free Poisson(1) is 1 + z."""
        path = tmp_path / "poisson.json"
        dump(free_poisson(1.0, 4), path)
        status, text = invoke("scalar", "--kind", "T", path)
        assert status == EXIT_OK
        payload = json.loads(text)
        assert payload["kind"] == "T"
        assert_allclose([c[0] for c in payload["coefficients"]], [1, 1, 0, 0], atol=1e-10)

    def test_scalar_csv(self, tmp_path):
        """Test CSV output for a scalar distribution."""
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        dump(scalar_point_mass(1.0, 3), a)
        dump(scalar_point_mass(2.0, 3), b)
        status, text = invoke("scalar", "--kind", "free", a, b, "--format", "csv")
        assert status == EXIT_OK
        lines = text.splitlines()
        assert lines[0] == "k,re,im"
        assert float(lines[1].split(",")[1]) == pytest.approx(3.0)

    def test_verify_suite(self, capsys):
        """Test one verification suite with the seed echoed to stderr."""
        status, text = invoke("verify", "--suite", "positivity", "--seed", "7")
        assert status == EXIT_OK
        assert text.startswith("suite,check,residual,threshold,status")
        assert "seed: 7" in capsys.readouterr().err

    def test_out_and_metrics(self, tmp_path, rademacher_file):
        """Test that --out and --metrics create their files."""
        out, metrics = tmp_path / "nested" / "bp.json", tmp_path / "metrics.json"
        status, text = invoke("bp", rademacher_file, "--out", out, "--metrics", metrics)
        assert status == EXIT_OK
        assert text == ""
        assert loads(out.read_text()).order == 6
        assert "cli.bp" in metrics.read_text()


@pytest.mark.integration
class TestExitCodes:
    """Test exit codes and error reports."""

    def test_bad_file(self, tmp_path, capsys):
        """Test that a malformed file exits 2 with a JSON error report."""
        path = tmp_path / "bad.json"
        path.write_text("{bad")
        status, _ = invoke("bp", path)
        assert status == EXIT_USAGE
        lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
        report = json.loads(lines[-1])
        assert report["error"] == "UsageException"

    def test_wrong_type(self, tmp_path, rademacher_file):
        """Test that a scalar law passed to convolve exits 2."""
        path = tmp_path / "scalar.json"
        dump(scalar_point_mass(1.0, 6), path)
        status, _ = invoke("convolve", rademacher_file, path)
        assert status == EXIT_USAGE

    def test_order_mismatch(self, tmp_path, rademacher_file):
        """Test that inputs of different orders need --order."""
        path = tmp_path / "short.json"
        dump(make_standard("rademacher", InclusionSpec.identity(1), 4), path)
        assert invoke("convolve", rademacher_file, path)[0] == EXIT_USAGE
        assert invoke("convolve", rademacher_file, path, "--order", "4")[0] == EXIT_OK

    def test_resource_guard(self):
        """Test that an order above the guardrail exits 4."""
        status, _ = invoke("limits", "--order", "9")
        assert status == EXIT_RESOURCE

    def test_dimension_guard(self):
        """Test that d_B above the guardrail exits 4."""
        status, _ = invoke("limits", "--dim", "4", "--order", "2")
        assert status == EXIT_RESOURCE

    def test_input_over_guardrail(self, monkeypatch, capsys, rademacher_file):
        """Test that an input file above the order guardrail exits 4, not 2."""
        monkeypatch.setattr(config, "max_order", 4)
        status, _ = invoke("convolve", rademacher_file, rademacher_file)
        assert status == EXIT_RESOURCE
        report = json.loads([line for line in capsys.readouterr().err.splitlines() if line.startswith("{")][-1])
        assert report["error"] == "ResourceException"

    def test_linear_algebra_failure(self, monkeypatch, capsys, rademacher_file):
        """Test that a numpy LinAlgError inside a command is a numeric error."""
        def singular(_):
            raise np.linalg.LinAlgError("Singular matrix")

        monkeypatch.setattr("modules.cli.bp_map", singular)
        status, _ = invoke("bp", rademacher_file)
        assert status == EXIT_NUMERIC
        report = json.loads([line for line in capsys.readouterr().err.splitlines() if line.startswith("{")][-1])
        assert report["error"] == "SingularityException"
        assert "Singular matrix" in report["message"]

    def test_grid_too_close(self):
        """Test that a grid point too close to the axis exits 3."""
        status, _ = invoke("subordinate", "--grid", "0.5")
        assert status == EXIT_NUMERIC

    def test_bad_grid(self):
        """Test that non-positive grid values are usage errors."""
        with pytest.raises(UsageException):
            job_from_args(build_parser().parse_args(["subordinate", "--grid", "4,0"]))

    def test_job_defaults(self):
        """Test output format defaults."""
        assert JobSpec(command="verify").output_format == "csv"
        assert JobSpec(command="bp").output_format == "json"
        assert JobSpec(command="bp").effective_order == 6


@pytest.mark.integration
class TestMain:
    """Test the main entry point."""

    @pytest.fixture(autouse=True)
    def _keep_logging(self, monkeypatch):
        monkeypatch.setattr("main.setup_logging", lambda verbose=False: None)

    def test_main_runs(self, rademacher_file, capsys):
        """Test that main returns the command status and prints to stdout."""
        assert main(["bp", str(rademacher_file)]) == EXIT_OK
        assert '"moments"' in capsys.readouterr().out

    def test_main_usage_error(self, capsys):
        """Test that schema violations exit 2."""
        assert main(["subordinate", "--n-fold", "0"]) == EXIT_USAGE

    def test_parser_rejects_unknown_command(self):
        """Test that argparse exits on an unknown subcommand."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["integrate"])
