"""
Deterministic CSV, JSON and SVG writers.

Floats are written in their shortest round-trip form, so a value read back from any
output file has the same bits as the value computed.
"""

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

import numpy as np

from .errors import UsageError

VIEWBOX = 800


def format_float(value: float) -> str:
    return repr(float(value))


def format_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return str(value)


def jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings NaN, Infinity, -Infinity."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return x
    return value


def dumps_json(data: Any) -> str:
    return json.dumps(jsonable(data), sort_keys=True, indent=2) + "\n"


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buffer.getvalue()


def _target(out_dir: Union[str, Path], name: str) -> Path:
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory / name


def write_csv(out_dir: Union[str, Path], name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = _target(out_dir, name)
    path.write_text(csv_text(header, rows), encoding="utf-8")
    return path


def write_json(out_dir: Union[str, Path], name: str, data: Any) -> Path:
    path = _target(out_dir, name)
    path.write_text(dumps_json(data), encoding="utf-8")
    return path


def svg_polyline(points: np.ndarray, lower: Sequence[float], upper: Sequence[float]) -> str:
    """A polyline in a fixed 800×800 viewBox mapped from the box [lower, upper]; y points up."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(lower) != 2 or len(upper) != 2:
        raise UsageError("SVG output is only available for 2-dimensional charts")
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    scaled = (pts - lo) / (hi - lo) * VIEWBOX
    coords: List[str] = [f"{format_float(x)},{format_float(VIEWBOX - y)}" for x, y in scaled]
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {VIEWBOX} {VIEWBOX}" width="{VIEWBOX}" height="{VIEWBOX}">\n'
        f'  <rect x="0" y="0" width="{VIEWBOX}" height="{VIEWBOX}" fill="white" stroke="black"/>\n'
        f'  <polyline fill="none" stroke="black" stroke-width="2" points="{" ".join(coords)}"/>\n'
        "</svg>\n"
    )


def write_svg(out_dir: Union[str, Path], name: str, points: np.ndarray, lower, upper) -> Path:
    text = svg_polyline(points, lower, upper)
    path = _target(out_dir, name)
    path.write_text(text, encoding="utf-8")
    return path
