"""
JSON and CSV artifacts.

Every artifact has a pydantic schema. Complex numbers are [re, im] pairs,
tensors carry their shape next to the flattened entries, and all floats are
rounded to the configured number of significant digits before writing so
repeated runs produce identical bytes.
"""
import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from .algebra import InclusionSpec
from .config import config
from .distribution import DistPair, OperatorModel, OVDistribution
from .guardrails import UsageException
from .ncseries import NCSeries
from .scalar import ScalarDist, ScalarPair

logger = logging.getLogger(__name__)

Complex = Tuple[float, float]


def round_float(x: float, digits: Optional[int] = None) -> float:
    digits = config.significant_digits if digits is None else digits
    value = float(f"{float(x):.{digits}g}")
    return 0.0 if value == 0 else value


def _pair(z: complex) -> List[float]:
    z = complex(z)
    return [round_float(z.real), round_float(z.imag)]


def _complex(p: Sequence[float]) -> complex:
    return complex(p[0], p[1])


# ========== Schemas ==========

class _Schema(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MatrixJSON(_Schema):
    """Square matrix as rows of [re, im] pairs."""
    rows: List[List[Complex]]

    @model_validator(mode="after")
    def _square(self):
        n = len(self.rows)
        if any(len(r) != n for r in self.rows):
            raise ValueError("matrix must be square")
        return self

    @classmethod
    def of(cls, a: np.ndarray) -> "MatrixJSON":
        return cls(rows=[[_pair(z) for z in row] for row in np.asarray(a)])

    def to_array(self) -> np.ndarray:
        return np.array([[_complex(p) for p in row] for row in self.rows], dtype=complex).reshape(
            len(self.rows), len(self.rows))


class TensorJSON(_Schema):
    """Tensor as shape plus row-major [re, im] entries."""
    shape: List[int]
    data: List[Complex]

    @model_validator(mode="after")
    def _size(self):
        if int(np.prod(self.shape)) != len(self.data):
            raise ValueError(f"shape {self.shape} does not match {len(self.data)} entries")
        return self

    @classmethod
    def of(cls, t: np.ndarray) -> "TensorJSON":
        t = np.asarray(t)
        return cls(shape=list(t.shape), data=[_pair(z) for z in t.reshape(-1)])

    def to_array(self) -> np.ndarray:
        return np.array([_complex(p) for p in self.data], dtype=complex).reshape(self.shape)


class InclusionJSON(_Schema):
    """B = M_{d_B} ⊆ D = M_{d_D}; without units the inclusion is the identity or block diagonal."""
    d_B: int
    d_D: int
    label: str = "custom"
    units: Optional[List[MatrixJSON]] = None

    @classmethod
    def of(cls, inc: InclusionSpec) -> "InclusionJSON":
        return cls(d_B=inc.d_B, d_D=inc.d_D, label=inc.label, units=[MatrixJSON.of(u) for u in inc.units])

    def to_spec(self) -> InclusionSpec:
        if self.d_B < 1 or self.d_D < self.d_B:
            raise ValueError(f"invalid inclusion dimensions {self.d_B} → {self.d_D}")
        if self.units is None:
            if self.d_D == self.d_B:
                return InclusionSpec.identity(self.d_B)
            if self.d_D % self.d_B:
                raise ValueError("d_D must be a multiple of d_B for the block-diagonal inclusion")
            return InclusionSpec.block_diagonal(self.d_B, self.d_D // self.d_B)
        units = np.stack([u.to_array() for u in self.units])
        if self.d_B == self.d_D and np.allclose(units, InclusionSpec.identity(self.d_B).units):
            return InclusionSpec.identity(self.d_B)
        if self.label == "identity":
            raise ValueError("units labelled 'identity' are not the matrix units")
        inc = InclusionSpec(self.d_B, self.d_D, units, self.label)
        inc.validate()
        return inc


class SeriesJSON(_Schema):
    inclusion: InclusionJSON
    order: int
    kind: str
    coeffs: List[TensorJSON]


class DistributionJSON(_Schema):
    inclusion: InclusionJSON
    order: int
    mean: MatrixJSON
    moments: List[TensorJSON]
    formal: bool = False
    bound: Optional[float] = None


class PairJSON(_Schema):
    mu: DistributionJSON
    nu: DistributionJSON


class ModelJSON(_Schema):
    m: int
    d_B: int
    d_D: int
    X: MatrixJSON
    E_B: TensorJSON
    theta: TensorJSON
    iota_A: InclusionJSON
    inclusion: InclusionJSON
    name: str = "custom"


class ScalarJSON(_Schema):
    """Scalar moments m_1..m_N; real moments may be plain numbers."""
    order: int
    moments: List[Union[float, Complex]]
    measure: bool = False

    @model_validator(mode="after")
    def _length(self):
        if len(self.moments) != self.order:
            raise ValueError(f"expected {self.order} moments, got {len(self.moments)}")
        return self


class ScalarPairJSON(_Schema):
    mu: ScalarJSON
    nu: ScalarJSON


# ========== Conversions ==========

def series_to_json(F: NCSeries) -> SeriesJSON:
    return SeriesJSON(inclusion=InclusionJSON.of(F.inclusion), order=F.order, kind=F.kind,
                      coeffs=[TensorJSON.of(c) for c in F.coeffs])


def series_from_json(s: SeriesJSON) -> NCSeries:
    return NCSeries.from_tensors(s.inclusion.to_spec(), [c.to_array() for c in s.coeffs], kind=s.kind)


def distribution_to_json(d: OVDistribution) -> DistributionJSON:
    return DistributionJSON(
        inclusion=InclusionJSON.of(d.inclusion),
        order=d.order,
        mean=MatrixJSON.of(d.mean),
        moments=[TensorJSON.of(m) for m in d.moments],
        formal=d.formal,
        bound=None if d.bound is None else round_float(d.bound),
    )


def distribution_from_json(s: DistributionJSON) -> OVDistribution:
    return OVDistribution(s.inclusion.to_spec(), s.order, s.mean.to_array(),
                          tuple(m.to_array() for m in s.moments), s.formal, s.bound)


def pair_to_json(p: DistPair) -> PairJSON:
    return PairJSON(mu=distribution_to_json(p.mu), nu=distribution_to_json(p.nu))


def pair_from_json(s: PairJSON) -> DistPair:
    return DistPair(distribution_from_json(s.mu), distribution_from_json(s.nu))


def model_to_json(model: OperatorModel) -> ModelJSON:
    return ModelJSON(m=model.m, d_B=model.d_B, d_D=model.inclusion.d_D, X=MatrixJSON.of(model.X),
                     E_B=TensorJSON.of(model.E_B), theta=TensorJSON.of(model.theta),
                     iota_A=InclusionJSON.of(model.iota_A), inclusion=InclusionJSON.of(model.inclusion),
                     name=model.name)


def model_from_json(s: ModelJSON) -> OperatorModel:
    model = OperatorModel(s.X.to_array(), s.E_B.to_array(), s.theta.to_array(),
                          s.iota_A.to_spec(), s.inclusion.to_spec(), s.name)
    model.validate()
    return model


def scalar_to_json(d: ScalarDist) -> ScalarJSON:
    moments = [round_float(m.real) if m.imag == 0 else _pair(m) for m in d.moments]
    return ScalarJSON(order=d.order, moments=moments, measure=d.measure)


def scalar_from_json(s: ScalarJSON) -> ScalarDist:
    moments = tuple(complex(m) if isinstance(m, (int, float)) else _complex(m) for m in s.moments)
    return ScalarDist(moments, s.measure)


def scalar_pair_to_json(p: ScalarPair) -> ScalarPairJSON:
    return ScalarPairJSON(mu=scalar_to_json(p.mu), nu=scalar_to_json(p.nu))


def scalar_pair_from_json(s: ScalarPairJSON) -> ScalarPair:
    return ScalarPair(scalar_from_json(s.mu), scalar_from_json(s.nu))


_TO_JSON = [
    (NCSeries, series_to_json),
    (OVDistribution, distribution_to_json),
    (DistPair, pair_to_json),
    (OperatorModel, model_to_json),
    (ScalarDist, scalar_to_json),
    (ScalarPair, scalar_pair_to_json),
]


def to_payload(obj: Any) -> Any:
    """Plain JSON-ready data for an engine object, schema or report."""
    for cls, convert in _TO_JSON:
        if isinstance(obj, cls):
            return convert(obj).model_dump()
    if isinstance(obj, BaseModel):
        return obj.model_dump()
    if isinstance(obj, dict):
        return {str(k): to_payload(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_payload(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return TensorJSON.of(obj).model_dump()
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return round_float(obj) if np.isfinite(obj) else str(float(obj))
    if isinstance(obj, complex):
        return _pair(obj)
    return obj


def dumps(obj: Any) -> str:
    """Deterministic JSON text: rounded floats, sorted keys."""
    return json.dumps(to_payload(obj), sort_keys=True, indent=2) + "\n"


def dump(obj: Any, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    logger.info(f"Wrote {path}")


# ========== Loading ==========

def _classify(payload: Dict[str, Any]):
    if "mu" in payload and "nu" in payload:
        if "inclusion" in payload["mu"]:
            return PairJSON, pair_from_json
        return ScalarPairJSON, scalar_pair_from_json
    if "X" in payload:
        return ModelJSON, model_from_json
    if "coeffs" in payload:
        return SeriesJSON, series_from_json
    if "inclusion" in payload:
        return DistributionJSON, distribution_from_json
    if "moments" in payload:
        return ScalarJSON, scalar_from_json
    raise ValueError(f"unrecognized artifact with keys {sorted(payload)}")


def loads(text: str, source: str = "<string>"):
    """Parse an artifact and build the engine object it describes.

    Raises:
        UsageException: On malformed JSON or a schema violation, naming the source
        OVFreeException: Engine errors from building the object keep their own class
    """
    try:
        payload = json.loads(text)
        if not isinstance(payload, dict):
            raise ValueError("artifact must be a JSON object")
        schema, build = _classify(payload)
        return build(schema.model_validate(payload))
    except json.JSONDecodeError as e:
        raise UsageException(f"{source}:{e.lineno}:{e.colno}: invalid JSON ({e.msg})")
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise UsageException(f"{source}: schema error at '{where}': {first['msg']}")
    except ValueError as e:
        raise UsageException(f"{source}: {e}")


def load(path: Union[str, Path]):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageException(f"{path}: cannot read ({e.strerror})")
    return loads(text, str(path))


# ========== CSV ==========

def _cell(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.{config.significant_digits}g}"
    return value


def csv_text(rows: Iterable[Dict[str, Any]], columns: Optional[Sequence[str]] = None) -> str:
    """CSV with a stable column order (given, or first-seen order of keys)."""
    rows = list(rows)
    if columns is None:
        columns = []
        for row in rows:
            columns.extend(k for k in row if k not in columns)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row.get(k, "")) for k in columns})
    return buffer.getvalue()


def write_csv(rows: Iterable[Dict[str, Any]], path: Union[str, Path],
              columns: Optional[Sequence[str]] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(rows, columns), encoding="utf-8")
    logger.info(f"Wrote {path}")
