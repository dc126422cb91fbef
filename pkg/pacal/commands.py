"""
Command drivers shared by the CLI and the HTTP service.

Each driver takes a validated RunConfig plus its own arguments, computes, optionally
writes files under an output directory, and returns a CommandResult whose `data` is
exactly what the service returns and what the CLI prints.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .geometry.affine import relative_residual
from .geometry.applications import MIN_RESIDUAL_SAMPLES, geodesic_residual, geodesic_trace
from .geometry.discrete import PolyPath, transport_steps
from .geometry.gallery import build
from .geometry.infinitesimal import ConnectionMap, curvature_tensors, pseudo_estimate
from .schemas import RunConfig
from .utils.emitters import csv_text, format_float, write_csv, write_json, write_svg
from .utils.errors import PacalError, UsageError
from .utils.limits import max_norm, successive_orders
from .utils.sweep import sweep
from .verify import run_suite

logger = logging.getLogger(__name__)

TENSOR_RANKS = (("Gamma", 3), ("T", 3), ("R", 4), ("C", 4))

OutDir = Optional[Union[str, Path]]


@dataclass
class CommandResult:
    data: Dict[str, Any]
    exit_code: int = 0
    files: List[str] = field(default_factory=list)
    text: Optional[str] = None


def curvature_header(dim: int) -> List[str]:
    header = [f"x{i}" for i in range(dim)]
    for name, rank in TENSOR_RANKS:
        header += [f"{name}_" + "_".join(map(str, idx)) for idx in itertools.product(range(dim), repeat=rank)]
    return header + ["status"]


def _oracle_deviation(sys, p, tensors: Dict[str, np.ndarray]) -> Dict[str, float]:
    basis = np.eye(sys.dim)
    exact = ConnectionMap(at=p, gammas=np.stack([sys.oracle.connection(p, basis[i]) for i in range(sys.dim)]))
    return {
        "Gamma": max_norm(tensors["Gamma"] - exact.coefficients),
        "T": max_norm(tensors["T"] - exact.torsion_components()),
        "R": max_norm(tensors["R"] - exact.riemann_components()),
    }


def cmd_curvature(config: RunConfig, out_dir: OutDir = None, threads: int = 1) -> CommandResult:
    """Γ, T, R and C at every grid point; a point whose limit fails is flagged and the sweep goes on."""
    sys = build(config.space)
    limit = config.limit.to_config()
    points = sys.domain.grid(config.grid_counts())
    n = sys.dim
    logger.info("curvature sweep of %s over %d points on %d thread(s)", config.space.kind, len(points), threads)

    def evaluate(p):
        entry: Dict[str, Any] = {"x": p.tolist()}
        try:
            tensors = curvature_tensors(sys, p, config=limit)
        except PacalError as e:
            logger.warning("curvature failed at %s: %s", p.tolist(), e)
            entry["status"] = type(e).__name__
            entry["error"] = str(e)
            for name, rank in TENSOR_RANKS:
                entry[name] = np.full((n,) * rank, math.nan)
            return entry
        entry["status"] = "ok"
        entry.update(tensors)
        if sys.oracle is not None:
            entry["oracle_deviation"] = _oracle_deviation(sys, p, tensors)
        return entry

    entries = sweep(evaluate, points, threads)
    failed = sum(1 for e in entries if e["status"] != "ok")
    data = {
        "space": config.space.model_dump(),
        "grid": config.grid_counts(),
        "failed": failed,
        "points": [
            {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in e.items()}
            for e in entries
        ],
    }
    result = CommandResult(data=data, exit_code=3 if failed else 0)
    if out_dir is not None:
        fmt = config.output.format
        if fmt in ("csv", "both"):
            rows = []
            for e in entries:
                row = list(e["x"])
                for name, _ in TENSOR_RANKS:
                    row += np.asarray(e[name], dtype=float).ravel().tolist()
                rows.append(row + [e["status"]])
            result.files.append(str(write_csv(out_dir, "curvature.csv", curvature_header(n), rows)))
        if fmt in ("json", "both"):
            result.files.append(str(write_json(out_dir, "curvature.json", data)))
    if failed:
        logger.warning("%d of %d grid points failed", failed, len(points))
    return result


def cmd_geodesic(
    config: RunConfig,
    p0: Sequence[float],
    v: Sequence[float],
    t_end: float,
    steps: int,
    svg: bool = False,
    out_dir: OutDir = None,
) -> CommandResult:
    sys = build(config.space)
    if svg and sys.dim != 2:
        raise UsageError("SVG output is only available for 2-dimensional charts")
    trace = geodesic_trace(sys, p0, v, t_end, steps)
    residual = geodesic_residual(sys, trace) if len(trace.params) >= MIN_RESIDUAL_SAMPLES else None
    data = {
        "space": config.space.model_dump(),
        "start": trace.points[0].tolist(),
        "body_velocity": trace.body_velocity.tolist(),
        "endpoint": trace.endpoint.tolist(),
        "residual": residual,
        "stats": trace.stats,
        "samples": [[t] + pt.tolist() for t, pt in trace.samples()],
    }
    result = CommandResult(data=data)
    result.text = f"endpoint {' '.join(format_float(x) for x in trace.endpoint)}\nresidual {format_float(residual) if residual is not None else 'n/a'}\n"
    if out_dir is not None:
        header = ["t"] + [f"x{i}" for i in range(sys.dim)]
        result.files.append(str(write_csv(out_dir, "geodesic.csv", header, data["samples"])))
        if svg:
            result.files.append(str(write_svg(out_dir, "geodesic.svg", trace.points, sys.domain.min, sys.domain.max)))
    return result


def cmd_transport(config: RunConfig, v: Sequence[float], start: Sequence[float], steps: Sequence[Sequence[float]], out_dir: OutDir = None) -> CommandResult:
    """Transport v along a polygonal path; the loop defect is reported only for a closed path."""
    sys = build(config.space)
    path = PolyPath(start=np.asarray(start, dtype=float), steps=[np.asarray(s, dtype=float) for s in steps])
    trace = transport_steps(sys, v, path)
    initial = np.asarray(v, dtype=float)
    final = trace[-1].vector if trace else initial
    data: Dict[str, Any] = {
        "space": config.space.model_dump(),
        "initial": initial.tolist(),
        "final": final.tolist(),
        "closed": path.closes(),
        "steps": [
            {"index": s.index, "step": s.step.tolist(), "point": s.point.tolist(), "vector": s.vector.tolist()}
            for s in trace
        ],
    }
    if path.closes():
        data["defect"] = (final - initial).tolist()
        data["defect_norm"] = max_norm(final - initial)
    else:
        data["note"] = "path is open; loop defect omitted"
    result = CommandResult(data=data)
    if out_dir is not None:
        result.files.append(str(write_json(out_dir, "transport.json", data)))
    return result


def cmd_flatness(config: RunConfig, samples: int = 200, out_dir: OutDir = None) -> CommandResult:
    sys = build(config.space)
    report = sys.is_affine_flat(sample_count=samples, seed=config.seed)
    data = {"space": config.space.model_dump(), **report.to_dict()}
    result = CommandResult(data=data)
    if out_dir is not None:
        result.files.append(str(write_json(out_dir, "flatness.json", data)))
    return result


def cmd_verify(config: RunConfig, suite: str = "all", out_dir: OutDir = None) -> CommandResult:
    report = run_suite(config, suite)
    result = CommandResult(data=report, exit_code=0 if report["passed"] else 4)
    if out_dir is not None:
        result.files.append(str(write_json(out_dir, "verify.json", report)))
    return result


def limits_table(taus, quotients, diagonals, orders) -> List[List[Any]]:
    rows = []
    for k, tau in enumerate(taus):
        order = orders[k] if k < len(orders) else math.nan
        rows.append([k, tau] + np.ravel(quotients[k]).tolist() + np.ravel(diagonals[k]).tolist() + [order])
    return rows


def cmd_limits(config: RunConfig, p: Sequence[float], u: Sequence[float], v: Sequence[float], out_dir: OutDir = None) -> CommandResult:
    """The difference-quotient table behind Δ_u v(p), from both sides."""
    sys = build(config.space)
    limit = config.limit.to_config()
    forward = pseudo_estimate(sys, u, v, p, limit)
    backward = pseudo_estimate(sys, u, v, p, limit, side=-1)
    orders = successive_orders(forward.quotients, limit.ratio)
    n = sys.dim
    header = ["level", "tau"] + [f"q{i}" for i in range(n)] + [f"d{i}" for i in range(n)] + ["order"]
    rows = limits_table(forward.taus, forward.quotients, forward.diagonals, orders)
    agreement = (
        relative_residual(forward.value, backward.value)
        if forward.converged and backward.converged
        else math.inf
    )
    data = {
        "space": config.space.model_dump(),
        "p": list(map(float, p)),
        "u": list(map(float, u)),
        "v": list(map(float, v)),
        "value": np.asarray(forward.value).tolist(),
        "err": forward.err,
        "converged": forward.converged,
        "orders": orders,
        "table": forward.quotient_table(),
        "backward": {"value": np.asarray(backward.value).tolist(), "err": backward.err, "converged": backward.converged},
        "one_sided_agreement": agreement,
    }
    if not forward.converged:
        logger.warning("pseudo-derivative limit at %s did not converge (err=%.3e)", list(p), forward.err)
    result = CommandResult(data=data)
    text = csv_text(header, rows).replace(",", "\t")
    status = "converged" if forward.converged else "NOT CONVERGED"
    result.text = f"{text}value {' '.join(format_float(x) for x in np.ravel(forward.value))}\nerr {format_float(forward.err)} {status}\none-sided agreement {format_float(agreement)}\n"
    if out_dir is not None:
        fmt = config.output.format
        if fmt in ("csv", "both"):
            result.files.append(str(write_csv(out_dir, "limits.csv", header, rows)))
        if fmt in ("json", "both"):
            result.files.append(str(write_json(out_dir, "limits.json", data)))
    return result
