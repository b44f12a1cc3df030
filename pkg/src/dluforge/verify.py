"""Error measurement, parameter sweeps, and reproducible report files.

Reports are deterministic: a fixed grid specification plus seed produces
byte-identical CSV/JSON output (floats are written with shortest round-trip
precision and no timestamps are recorded).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .constructions import TargetFunction
from .network import Network, ParameterError, ShapeError, StructuralAudit, evaluate, serialize

DEFAULT_SEED = 0x5EED
SEED_ENV_VAR = "DLU_FORGE_SEED"


def default_seed() -> int:
    value = os.environ.get(SEED_ENV_VAR)
    if value is None:
        return DEFAULT_SEED
    return int(value, 0)


@dataclass(frozen=True)
class GridSpec:
    """Sampling plan: uniform and chebyshev grids are deterministic; the
    monte-carlo kind draws from a seeded generator and records the seed."""

    kind: str = "uniform"
    points: int = 10_000
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("uniform", "monte-carlo", "chebyshev"):
            raise ParameterError("grid kind must be uniform, monte-carlo or chebyshev")
        if self.points < 2:
            raise ParameterError("grid needs at least 2 points")
        if self.kind == "monte-carlo" and self.seed is None:
            object.__setattr__(self, "seed", default_seed())

    def to_dict(self) -> dict:
        doc = {"kind": self.kind, "points": self.points}
        if self.seed is not None:
            doc["seed"] = self.seed
        return doc


def default_grid(dim: int) -> GridSpec:
    if dim <= 2:
        return GridSpec("uniform", 10_000)
    return GridSpec("monte-carlo", 100_000, default_seed())


def sample_points(grid: GridSpec, domain) -> np.ndarray:
    """Realize a grid over an axis-aligned box; shape (n, d)."""
    domain = [(float(lo), float(hi)) for lo, hi in domain]
    d = len(domain)
    if grid.kind == "monte-carlo":
        rng = np.random.default_rng(grid.seed)
        U = rng.random((grid.points, d))
        lo = np.array([a for a, _ in domain])
        hi = np.array([b for _, b in domain])
        return lo + U * (hi - lo)
    per_axis = max(2, int(round(grid.points ** (1.0 / d))))
    axes = []
    for lo, hi in domain:
        if grid.kind == "chebyshev":
            theta = (np.arange(per_axis) + 0.5) * np.pi / per_axis
            axes.append((lo + hi) / 2.0 + (hi - lo) / 2.0 * np.cos(theta))
        else:
            axes.append(np.linspace(lo, hi, per_axis))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in mesh])


@dataclass(frozen=True)
class ErrorReport:
    target_name: str
    network_id: str
    norm: str
    measured_error: float
    grid: GridSpec
    theoretical_bound: Optional[float] = None
    p: Optional[float] = None
    audit: Optional[StructuralAudit] = None
    parameter: Optional[float] = None

    def to_dict(self) -> dict:
        doc = {
            "target_name": self.target_name,
            "network_id": self.network_id,
            "norm": self.norm,
            "measured_error": self.measured_error,
            "grid": self.grid.to_dict(),
        }
        if self.p is not None:
            doc["p"] = self.p
        if self.theoretical_bound is not None:
            doc["theoretical_bound"] = self.theoretical_bound
        if self.audit is not None:
            doc["audit"] = self.audit.to_dict()
        if self.parameter is not None:
            doc["parameter"] = self.parameter
        return doc


def report_from_dict(doc: dict) -> ErrorReport:
    grid = GridSpec(doc["grid"]["kind"], doc["grid"]["points"], doc["grid"].get("seed"))
    a = doc.get("audit")
    aud = None
    if a is not None:
        aud = StructuralAudit(a["depth"], a["width"], a["nonzero_weights"],
                              a["claimed_depth"], a["claimed_width"], a["claimed_weights"])
    return ErrorReport(doc["target_name"], doc["network_id"], doc["norm"],
                       doc["measured_error"], grid, doc.get("theoretical_bound"),
                       doc.get("p"), aud, doc.get("parameter"))


def network_id(net: Network) -> str:
    return hashlib.sha256(serialize(net).encode()).hexdigest()[:12]


def _chebyshev_weights(domain, n_per_axis: int) -> float:
    """Quadrature weight per node for the arc-length (weighted) measure."""
    # 2 Integral g(x) (1-x^2)^(-1/2) dx = 2 Integral g(cos t) dt on [0, pi]
    return (2.0 * math.pi / n_per_axis) ** len(domain)


def measure_error(net: Network, target: TargetFunction, norm: str = "sup",
                  grid: Optional[GridSpec] = None, p: Optional[float] = None,
                  weighted: bool = False,
                  theoretical_bound: Optional[float] = None,
                  audit: Optional[StructuralAudit] = None,
                  parameter: Optional[float] = None) -> ErrorReport:
    """Measure ||net - target|| on a grid of the target's domain.

    sup is the grid maximum; the L_p norms integrate |diff|^p with uniform
    cell weights (or Monte-Carlo volume averaging).  weighted applies the
    endpoint-singular weight prod 2 (1 - x_j^2)^(-1/2) via Chebyshev-node
    quadrature, which is exact for that weight and never touches the
    singular endpoints.
    """
    if net.input_dim != target.dim:
        raise ShapeError("network and target dimensions differ")
    norm = norm.lower()
    if norm == "lp":
        if p is None or p < 1:
            raise ParameterError("Lp norm needs p >= 1")
    elif norm == "l1":
        p = 1.0
    elif norm == "l2":
        p = 2.0
    elif norm != "sup":
        raise ParameterError("norm must be sup, l1, l2 or lp")
    if grid is None:
        grid = default_grid(target.dim)
    if weighted:
        if grid.kind != "chebyshev":
            grid = GridSpec("chebyshev", grid.points, grid.seed)
        for lo, hi in target.domain:
            if abs(lo + 1.0) > 1e-12 or abs(hi - 1.0) > 1e-12:
                raise ParameterError("weighted norms are defined on [-1, 1]^d")
    pts = sample_points(grid, target.domain)
    diff = np.abs(evaluate(net, pts) - target(pts))
    if norm == "sup":
        measured = float(np.max(diff))
    else:
        volume = float(np.prod([hi - lo for lo, hi in target.domain]))
        if weighted:
            per_axis = int(round(len(pts) ** (1.0 / target.dim)))
            w = _chebyshev_weights(target.domain, per_axis)
            measured = float((np.sum(diff ** p) * w) ** (1.0 / p))
        else:
            measured = float((np.mean(diff ** p) * volume) ** (1.0 / p))
    return ErrorReport(target.name, network_id(net),
                       norm if norm != "lp" else f"lp({p:g})",
                       measured, grid, theoretical_bound, p if norm != "sup" else None,
                       audit, parameter)


@dataclass(frozen=True)
class SweepResult:
    parameter_name: str
    values: tuple
    reports: tuple
    rate: Optional[float]
    rate_method: str
    failure: Optional[str] = None

    def to_dict(self) -> dict:
        doc = {
            "parameter_name": self.parameter_name,
            "values": list(self.values),
            "reports": [r.to_dict() for r in self.reports],
            "rate_method": self.rate_method,
        }
        if self.rate is not None:
            doc["rate"] = self.rate
        if self.failure is not None:
            doc["failure"] = self.failure
        return doc


def fit_rate(values, errors, method: str) -> Optional[float]:
    """geometric: mean ratio of consecutive errors; algebraic: log-log slope."""
    errors = np.asarray(errors, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if np.any(errors <= 0) or len(errors) < 2:
        return None
    if method == "geometric":
        ratios = errors[1:] / errors[:-1]
        return float(np.exp(np.mean(np.log(ratios))))
    slope = np.polyfit(np.log(values), np.log(errors), 1)[0]
    return float(slope)


def sweep(builder: Callable[[float], Network], parameter_name: str, values,
          target: TargetFunction, norm: str = "sup",
          grid: Optional[GridSpec] = None, rate_method: str = "geometric",
          bound_fn: Optional[Callable[[float], float]] = None,
          claim_fn: Optional[Callable[[float], tuple]] = None) -> SweepResult:
    """Build the family at each parameter value and measure against the target.

    A builder failure aborts the sweep; the partial results are returned with
    the failure recorded.
    """
    values = list(values)
    if len(values) < 3:
        raise ParameterError("a sweep needs at least 3 parameter values")
    reports = []
    failure = None
    from .network import audit as audit_fn
    for v in values:
        try:
            net = builder(v)
        except Exception as exc:  # noqa: BLE001 - reported, not swallowed
            failure = f"builder failed at {parameter_name}={v}: {exc}"
            break
        aud = audit_fn(net, claim_fn(v)) if claim_fn is not None else None
        bound = bound_fn(v) if bound_fn is not None else None
        reports.append(measure_error(net, target, norm, grid,
                                     theoretical_bound=bound, audit=aud,
                                     parameter=float(v)))
    rate = None
    if len(reports) >= 2:
        rate = fit_rate([r.parameter for r in reports],
                        [r.measured_error for r in reports], rate_method)
    return SweepResult(parameter_name, tuple(values[: len(reports)]),
                       tuple(reports), rate, rate_method, failure)


# -- report files --------------------------------------------------------------

CSV_COLUMNS = ("parameter", "measured_error", "theoretical_bound",
               "depth", "width", "weights")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        aud = r.audit
        writer.writerow([
            _fmt(r.parameter), _fmt(r.measured_error), _fmt(r.theoretical_bound),
            _fmt(aud.depth if aud else None), _fmt(aud.width if aud else None),
            _fmt(aud.nonzero_weights if aud else None),
        ])
    return buf.getvalue()


def reports_to_json(payload) -> str:
    if isinstance(payload, SweepResult):
        doc = payload.to_dict()
    elif isinstance(payload, ErrorReport):
        doc = payload.to_dict()
    else:
        doc = [r.to_dict() for r in payload]
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_report(payload, path, fmt: str = "json") -> None:
    if fmt == "json":
        text = reports_to_json(payload)
    elif fmt == "csv":
        if isinstance(payload, SweepResult):
            text = reports_to_csv(payload.reports)
        elif isinstance(payload, ErrorReport):
            text = reports_to_csv([payload])
        else:
            text = reports_to_csv(payload)
    else:
        raise ParameterError("format must be json or csv")
    with open(path, "w", newline="") as fh:
        fh.write(text)


def load_report(path):
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, list):
        return [report_from_dict(d) for d in doc]
    if "reports" in doc:
        reports = tuple(report_from_dict(d) for d in doc["reports"])
        return SweepResult(doc["parameter_name"], tuple(doc["values"]), reports,
                           doc.get("rate"), doc["rate_method"], doc.get("failure"))
    return report_from_dict(doc)
