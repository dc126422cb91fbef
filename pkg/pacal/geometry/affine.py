"""
Exact arithmetic of a single affine system.

Points, translations and ground vectors are n-tuples of doubles held as read-only
numpy arrays. Translations are identified with ambient displacements, so translating
is componentwise addition and the translation between two points is componentwise
subtraction.

Note on directions: vectorize_at(p, q, action) returns action⁻¹(p ← q), i.e. it
inverts the translation taking q to p, not the one taking p to q.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..utils.errors import NumericError, UsageError

GroundVector = NDArray[np.float64]
Translation = NDArray[np.float64]
ChartPoint = NDArray[np.float64]


def as_coordinates(values, dim: Optional[int] = None, name: str = "value") -> NDArray[np.float64]:
    """Validate an n-tuple of reals and freeze it."""
    a = np.array(values, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise UsageError(f"{name} must be a non-empty 1-d tuple of reals, got shape {a.shape}")
    if dim is not None and a.size != dim:
        raise UsageError(f"{name} has dimension {a.size}, expected {dim}")
    a.setflags(write=False)
    return a


def _pair(a, b, names=("a", "b")):
    x = as_coordinates(a, name=names[0])
    y = as_coordinates(b, dim=x.size, name=names[1])
    return x, y


def zero(dim: int) -> Translation:
    return as_coordinates(np.zeros(dim))


def translate(p, t) -> ChartPoint:
    """p + t: the point reached from p by the translation t."""
    x, y = _pair(p, t, ("point", "translation"))
    return as_coordinates(x + y)


def between(q, p) -> Translation:
    """q ← p: the unique translation taking p to q."""
    x, y = _pair(q, p, ("point q", "point p"))
    return as_coordinates(x - y)


def compose(s, t) -> Translation:
    x, y = _pair(s, t, ("translation", "translation"))
    return as_coordinates(x + y)


def scale(factor: float, t) -> Translation:
    return as_coordinates(float(factor) * as_coordinates(t, name="translation"))


def _rounding_error(q: ChartPoint, p: ChartPoint) -> NDArray[np.float64]:
    # TwoSum remainder: (q − p) − fl(q − p), exact for finite inputs.
    a, b = q, -p
    s = a + b
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _exact_sum(pairs: Sequence[Tuple[ChartPoint, ChartPoint]], signs: Sequence[int]) -> Translation:
    """
    Signed sum of the translations between(q, p) over (q, p) pairs. Each translation
    enters together with its rounding remainder, and fsum rounds the total once, so
    identities that cancel exactly in the reals cancel exactly here.
    """
    terms = []
    for (q, p), sign in zip(pairs, signs):
        terms.append((sign, between(q, p)))
        terms.append((sign, _rounding_error(q, p)))
    out = np.empty(pairs[0][0].size)
    for i in range(out.size):
        out[i] = math.fsum(sign * float(t[i]) for sign, t in terms)
    return as_coordinates(out)


def weyl_residual(p, q, r) -> Translation:
    """(r ← q) + (q ← p) − (r ← p), accumulated exactly."""
    p = as_coordinates(p, name="p")
    q = as_coordinates(q, dim=p.size, name="q")
    r = as_coordinates(r, dim=p.size, name="r")
    return _exact_sum([(r, q), (q, p), (r, p)], [1, 1, -1])


def four_point_residual(p, q, r, s) -> Translation:
    """((p ← q) − (s ← r)) − ((p ← s) − (q ← r)), accumulated exactly."""
    p = as_coordinates(p, name="p")
    q = as_coordinates(q, dim=p.size, name="q")
    r = as_coordinates(r, dim=p.size, name="r")
    s = as_coordinates(s, dim=p.size, name="s")
    return _exact_sum([(p, q), (s, r), (p, s), (q, r)], [1, -1, -1, 1])


def solve_action(action, t) -> GroundVector:
    """action⁻¹(t) for an invertible n×n action matrix."""
    m = np.asarray(action, dtype=float)
    t = as_coordinates(t, name="translation")
    if m.shape != (t.size, t.size):
        raise UsageError(f"action has shape {m.shape}, expected {(t.size, t.size)}")
    try:
        return as_coordinates(np.linalg.solve(m, t))
    except np.linalg.LinAlgError as e:
        raise NumericError(f"singular action: {e}") from e


def vectorize_at(p, q, action) -> GroundVector:
    """𝔳(p)(q) = action⁻¹(p ← q)."""
    return solve_action(action, between(p, q))


def relative_residual(a, b, scale: float = 0.0) -> float:
    """|a − b| / max(1, |a|, |b|, scale) in the max norm."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denominator = max(1.0, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), scale)
    return float(np.max(np.abs(a - b), initial=0.0)) / denominator


@dataclass(frozen=True)
class Interval:
    """A pair of points p⋯q; it determines exactly one translation."""

    start: ChartPoint
    end: ChartPoint

    def translation(self) -> Translation:
        return between(self.end, self.start)
