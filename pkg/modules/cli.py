"""
Command-line front end.

Subcommands load JSON artifacts, call one engine operation and write the
result as JSON (objects) or CSV (tables):

    convolve --kind free a.json b.json
    bp a.json
    limits --kind clt --dim 1 --order 6
    subordinate --model rademacher --grid 4,6,8
    scalar --kind cT pair.json
    verify --suite all --order 5 --dim 1

Exit codes: 0 success, 1 failed verification, 2 usage or parse error,
3 numeric error, 4 resource guardrail.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, TextIO, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .algebra import InclusionSpec
from .config import config
from .convolution import bp_map, convolve
from .distribution import DistPair, OperatorModel, OVDistribution, standard_model
from .guardrails import (
    ConvergenceException,
    GridException,
    OVFreeException,
    SingularityException,
    UsageException,
)
from .limits import LIMIT_COLUMNS, ArraySpec, cfree_clt_array, clt_array, limit_harness, point_mass_array, poisson_array
from .monitoring import metrics_collector
from .scalar import (
    ScalarDist,
    ScalarPair,
    mult_convolve,
    scalar_bp,
    scalar_convolve,
    scalar_cT,
    scalar_T,
)
from .serialization import csv_text, dumps, load
from .subordination import verify_subordination_suite
from .types import OutputFormat, validate_convolution_kind, validate_suite_name
from .verification import VerifySettings, run_suites

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_RESOURCE = 4

Command = Literal["convolve", "bp", "limits", "subordinate", "scalar", "verify"]

LIMIT_KINDS = ("clt", "point_mass", "poisson", "cfree_clt")
SCALAR_KINDS = ("free", "boolean", "cfree", "mult_free", "mult_cfree", "bp", "T", "cT")
MODEL_NAMES = ("point_mass", "rademacher", "semicircle", "two_state", "random")
TABLE_COMMANDS = ("limits", "subordinate", "verify")


class JobSpec(BaseModel):
    """One CLI invocation after argument parsing."""
    model_config = ConfigDict(extra="forbid")

    command: Command
    inputs: List[str] = Field(default_factory=list)
    kind: Optional[str] = None
    order: Optional[int] = Field(default=None, ge=1)
    dim: int = Field(default=1, ge=1)
    n_fold: int = Field(default=2, ge=1)
    n_max: int = Field(default=256, ge=1)
    grid: Tuple[float, ...] = (4.0, 6.0, 8.0)
    seed: int = config.seed
    tol: Optional[float] = Field(default=None, gt=0)
    samples: Optional[int] = Field(default=None, ge=1)
    suite: str = "all"
    model: str = "rademacher"
    out: Optional[str] = None
    format: Optional[OutputFormat] = None
    metrics: Optional[str] = None

    @field_validator("grid")
    @classmethod
    def _positive_grid(cls, grid: Tuple[float, ...]) -> Tuple[float, ...]:
        if not grid or any(y <= 0 for y in grid):
            raise ValueError("grid values must be positive")
        return grid

    @property
    def output_format(self) -> OutputFormat:
        if self.format is not None:
            return self.format
        return "csv" if self.command in TABLE_COMMANDS else "json"

    @property
    def effective_order(self) -> int:
        return self.order if self.order is not None else config.default_order


# ========== Helpers ==========

def _require_inputs(job: JobSpec, count: Sequence[int]) -> List[Any]:
    if len(job.inputs) not in count:
        expected = " or ".join(str(c) for c in count)
        raise UsageException(f"'{job.command}' takes {expected} input file(s), got {len(job.inputs)}")
    return [load(path) for path in job.inputs]


def _require_types(objects: Sequence[Any], types: Tuple[type, ...], what: str) -> None:
    for i, obj in enumerate(objects, start=1):
        if not isinstance(obj, types):
            raise UsageException(f"input {i}: expected {what}, got {type(obj).__name__}")


def _same_order(objects: Sequence[Any], order: Optional[int]) -> List[Any]:
    """Truncate to --order when given; otherwise all inputs must share one order."""
    orders = {obj.order for obj in objects}
    if order is None:
        if len(orders) > 1:
            raise UsageException(f"inputs have different orders {sorted(orders)}; pass --order to truncate")
        return list(objects)
    if order > min(orders):
        raise UsageException(f"--order {order} exceeds the input order {min(orders)}")
    return [_truncate(obj, order) for obj in objects]


def _truncate(obj: Any, order: int) -> Any:
    if isinstance(obj, DistPair):
        return DistPair(obj.mu.truncate(order), obj.nu.truncate(order))
    if isinstance(obj, ScalarPair):
        return ScalarPair(obj.mu.truncate(order), obj.nu.truncate(order))
    return obj.truncate(order)


def moment_rows(d: OVDistribution) -> List[Dict[str, Any]]:
    """One row per stored moment entry: order k, slot multi-index, block entry, value."""
    rows = []
    for k in range(1, d.order + 1):
        tensor = d.moment_tensor(k)
        for index in np.ndindex(*tensor.shape):
            value = complex(tensor[index])
            rows.append({
                "k": k,
                "slots": "-".join(str(i) for i in index[:-2]),
                "row": index[-2],
                "col": index[-1],
                "re": value.real,
                "im": value.imag,
            })
    return rows


def _object_rows(result: Any) -> List[Dict[str, Any]]:
    if isinstance(result, OVDistribution):
        return moment_rows(result)
    if isinstance(result, DistPair):
        return [{"coordinate": name, **row} for name, d in (("mu", result.mu), ("nu", result.nu))
                for row in moment_rows(d)]
    if isinstance(result, ScalarDist):
        return [{"k": k, "re": m.real, "im": m.imag} for k, m in enumerate(result.moments, start=1)]
    if isinstance(result, ScalarPair):
        return [{"coordinate": name, "k": k, "re": m.real, "im": m.imag}
                for name, d in (("mu", result.mu), ("nu", result.nu)) for k, m in enumerate(d.moments, start=1)]
    if isinstance(result, dict) and "coefficients" in result:
        return [{"power": k, "re": c.real, "im": c.imag} for k, c in enumerate(result["coefficients"])]
    raise UsageException(f"no CSV form for {type(result).__name__}")


def render(result: Any, fmt: OutputFormat, columns: Optional[Sequence[str]] = None) -> str:
    """Text of a command result in the requested format."""
    if fmt == "json":
        return dumps(result)
    rows = result if isinstance(result, list) else _object_rows(result)
    return csv_text(rows, columns)


# ========== Commands ==========

def cmd_convolve(job: JobSpec) -> Tuple[Any, int]:
    kind = validate_convolution_kind(job.kind or "free")
    objects = _require_inputs(job, (2,))
    expected = (DistPair,) if kind == "cfree" else (OVDistribution,)
    _require_types(objects, expected, "a distribution pair" if kind == "cfree" else "a distribution")
    x, y = _same_order(objects, job.order)
    return convolve(kind, x, y), EXIT_OK


def cmd_bp(job: JobSpec) -> Tuple[Any, int]:
    objects = _require_inputs(job, (1,))
    _require_types(objects, (OVDistribution, DistPair), "a distribution or pair")
    (x,) = _same_order(objects, job.order)
    return bp_map(x), EXIT_OK


def limit_array(kind: str, d: int, order: int) -> ArraySpec:
    """Built-in triangular arrays by name."""
    inclusion = InclusionSpec.identity(d)
    beta = 0.5 * np.eye(d)
    if kind == "clt":
        return clt_array(inclusion, order)
    if kind == "point_mass":
        return point_mass_array(beta, inclusion, order)
    if kind == "poisson":
        return poisson_array(beta, 1.0, inclusion, order)
    if kind == "cfree_clt":
        return cfree_clt_array(d, order)
    raise UsageException(f"unknown array '{kind}'; choose from {', '.join(LIMIT_KINDS)}")


def cmd_limits(job: JobSpec) -> Tuple[Any, int]:
    spec = limit_array(job.kind or "clt", job.dim, job.effective_order)
    report = limit_harness(spec, job.n_max)
    if job.output_format == "csv":
        return report["rows"], EXIT_OK
    return report, EXIT_OK


def _load_model(path: str) -> OperatorModel:
    model = load(path)
    if not isinstance(model, OperatorModel):
        raise UsageException(f"{path}: expected an operator model, got {type(model).__name__}")
    return model


def cmd_subordinate(job: JobSpec) -> Tuple[Any, int]:
    if len(job.inputs) > 2:
        raise UsageException(f"'subordinate' takes at most 2 model files, got {len(job.inputs)}")
    if job.inputs:
        model = _load_model(job.inputs[0])
    else:
        if job.model not in MODEL_NAMES:
            raise UsageException(f"unknown model '{job.model}'; choose from {', '.join(MODEL_NAMES)}")
        model = standard_model(job.model, d_B=job.dim, rng=np.random.default_rng(job.seed))
    other = _load_model(job.inputs[1]) if len(job.inputs) == 2 else None
    rows = verify_subordination_suite(model, list(job.grid), job.effective_order, n_fold=job.n_fold, other=other)
    return rows, EXIT_OK if all(r["passed"] for r in rows) else EXIT_FAILED


def cmd_scalar(job: JobSpec) -> Tuple[Any, int]:
    kind = job.kind or "free"
    if kind not in SCALAR_KINDS:
        raise UsageException(f"unknown scalar operation '{kind}'; choose from {', '.join(SCALAR_KINDS)}")
    binary = kind in ("free", "boolean", "cfree", "mult_free", "mult_cfree")
    objects = _require_inputs(job, (2,) if binary else (1,))
    pairs = kind in ("cfree", "mult_cfree", "cT")
    if kind != "bp":
        _require_types(objects, (ScalarPair,) if pairs else (ScalarDist,),
                       "a scalar pair" if pairs else "a scalar distribution")
    else:
        _require_types(objects, (ScalarDist, ScalarPair), "a scalar distribution or pair")
    objects = _same_order(objects, job.order)

    if kind in ("free", "boolean", "cfree"):
        return scalar_convolve(kind, *objects), EXIT_OK
    if kind.startswith("mult_"):
        return mult_convolve(kind[len("mult_"):], *objects), EXIT_OK
    if kind == "bp":
        return scalar_bp(objects[0]), EXIT_OK
    transform = scalar_T(objects[0]) if kind == "T" else scalar_cT(objects[0])
    return {"kind": kind, "coefficients": [complex(c) for c in transform]}, EXIT_OK


def cmd_verify(job: JobSpec) -> Tuple[Any, int]:
    suite = validate_suite_name(job.suite)
    overrides = {k: v for k, v in (("order", job.order), ("tol", job.tol)) if v is not None}
    if "dim" in job.model_fields_set:
        overrides["dims"] = (job.dim,)
    settings = VerifySettings(seed=job.seed, samples=job.samples, grid=job.grid, n_max=job.n_max, **overrides)
    print(f"seed: {settings.seed}", file=sys.stderr)
    rows = run_suites(suite, settings)
    failed = [r for r in rows if r["status"] == "fail"]
    for r in failed:
        logger.warning(f"{r['suite']}/{r['check']}: residual {r['residual']:.3e} > {r['threshold']:.1e}")
    return rows, EXIT_FAILED if failed else EXIT_OK


COMMANDS = {
    "convolve": cmd_convolve,
    "bp": cmd_bp,
    "limits": cmd_limits,
    "subordinate": cmd_subordinate,
    "scalar": cmd_scalar,
    "verify": cmd_verify,
}


# ========== Running ==========

def error_report(e: OVFreeException) -> Dict[str, Any]:
    """What the failing module knew when it raised."""
    report: Dict[str, Any] = {"error": type(e).__name__, "message": str(e)}
    if isinstance(e, ConvergenceException):
        report.update(residual=e.residual, iterations=e.iterations)
    if isinstance(e, GridException):
        report["tail_bound"] = e.tail_bound
        if e.point is not None:
            report["point"] = np.asarray(e.point).tolist() if np.ndim(e.point) else e.point
    return report


def run(job: JobSpec, stream: Optional[TextIO] = None) -> int:
    """Execute a job and write its artifact.

    Args:
        job: Parsed job
        stream: Where output goes when job.out is unset (stdout by default)

    Returns:
        Process exit code
    """
    stream = stream or sys.stdout
    logger.info(f"Running {job.command} ({job.output_format})")
    try:
        with metrics_collector.timed(f"cli.{job.command}"):
            result, status = COMMANDS[job.command](job)
        columns = LIMIT_COLUMNS if job.command == "limits" and job.output_format == "csv" else None
        text = render(result, job.output_format, columns)
        if job.out:
            path = Path(job.out)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            logger.info(f"Wrote {path}")
        else:
            stream.write(text)
    except OVFreeException as e:
        logger.error(f"{job.command} failed: {e}")
        print(json.dumps(error_report(e), sort_keys=True, default=str), file=sys.stderr)
        status = e.exit_code
    except np.linalg.LinAlgError as e:
        failure = SingularityException(f"linear algebra failure: {e}")
        logger.error(f"{job.command} failed: {failure}")
        print(json.dumps(error_report(failure), sort_keys=True, default=str), file=sys.stderr)
        status = failure.exit_code
    except ValueError as e:
        logger.error(f"{job.command} failed: {e}")
        print(json.dumps({"error": "UsageException", "message": str(e)}, sort_keys=True), file=sys.stderr)
        status = EXIT_USAGE
    finally:
        if job.metrics:
            metrics_collector.export_to_file(job.metrics)
    return status


# ========== Argument parsing ==========

def _grid(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(y) for y in text.split(",") if y.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be comma-separated numbers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ovfree",
        description="Operator-valued free, Boolean and c-free convolution engine",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s convolve --kind free a.json b.json
  %(prog)s bp a.json --out bp.json
  %(prog)s limits --kind clt --order 6 --format csv
  %(prog)s subordinate --model semicircle --dim 2 --grid 4,6,8
  %(prog)s scalar --kind cT pair.json
  %(prog)s verify --suite all --order 5 --dim 1 --seed 7

Exit codes: 0 ok, 1 verification failure, 2 usage/parse error,
3 numeric error, 4 resource guardrail.
        """
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--order', type=int, help='Truncation order N')
    common.add_argument('--dim', type=int, help='Dimension d of B = M_d (default 1)')
    common.add_argument('--seed', type=int, default=config.seed, help=f'Random seed (default {config.seed})')
    common.add_argument('--tol', type=float, help='Residual threshold override')
    common.add_argument('--out', help='Write the artifact here instead of stdout')
    common.add_argument('--format', choices=['json', 'csv'], help='Output format (tables default to csv)')
    common.add_argument('--metrics', metavar='PATH', help='Export operation metrics as JSON')
    common.add_argument('-v', '--verbose', action='store_true', help='Enable verbose logging (INFO level)')

    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('convolve', parents=[common], help='Additive convolution of two distributions')
    p.add_argument('--kind', choices=['free', 'boolean', 'cfree'], default='free')
    p.add_argument('inputs', nargs=2, metavar='FILE')

    p = sub.add_parser('bp', parents=[common], help='Bercovici–Pata image of a distribution or pair')
    p.add_argument('inputs', nargs=1, metavar='FILE')

    p = sub.add_parser('limits', parents=[common], help='Limit-theorem harness for a built-in array')
    p.add_argument('--kind', choices=list(LIMIT_KINDS), default='clt')
    p.add_argument('--n-max', type=int, default=256, help='Largest row index (default 256)')

    p = sub.add_parser('subordinate', parents=[common], help='Subordination identities on a grid')
    p.add_argument('inputs', nargs='*', metavar='MODEL')
    p.add_argument('--model', choices=list(MODEL_NAMES), default='rademacher')
    p.add_argument('--n-fold', type=int, default=2)
    p.add_argument('--grid', type=_grid, default=(4.0, 6.0, 8.0), help='Values y for b = i·y·1, e.g. "4,6,8"')

    p = sub.add_parser('scalar', parents=[common], help='Scalar convolutions and T-transforms')
    p.add_argument('--kind', choices=list(SCALAR_KINDS), default='free')
    p.add_argument('inputs', nargs='+', metavar='FILE')

    p = sub.add_parser('verify', parents=[common], help='Run verification suites')
    p.add_argument('--suite', default='all', help='Suite name or "all"')
    p.add_argument('--samples', type=int, help='Random samples per check (default: each suite'"'"'s protocol)')
    p.add_argument('--grid', type=_grid, default=(4.0, 6.0, 8.0))
    p.add_argument('--n-max', type=int, default=256)
    return parser


def job_from_args(args: argparse.Namespace) -> JobSpec:
    """Build a JobSpec from parsed arguments.

    Raises:
        UsageException: If the arguments violate the job schema
    """
    fields = {k: v for k, v in vars(args).items() if k in JobSpec.model_fields and v is not None}
    try:
        return JobSpec.model_validate(fields)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise UsageException(f"invalid argument '{where}': {first['msg']}")

