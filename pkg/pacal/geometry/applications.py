"""
Applications: gradients from an inner product, and affine geodesics, i.e. curves
whose body velocity F(γ̄)⁻¹γ̄′ is constant.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from numpy.typing import NDArray

from ..utils.errors import DomainExitError, NumericError, UsageError
from ..utils.limits import DEFAULT_LIMIT, LimitConfig, max_norm
from .affine import as_coordinates
from .derivatives import partial_derivative
from .fields import Field
from .pointwise import MAX_CONDITION, PointwiseSystem

logger = logging.getLogger(__name__)

MIN_RESIDUAL_SAMPLES = 5


@dataclass(frozen=True)
class Metric:
    """A non-degenerate symmetric bilinear form ⟨x, y⟩ = xᵀ·G·y."""

    matrix: NDArray[np.float64]

    def __post_init__(self):
        g = np.array(self.matrix, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise UsageError(f"metric must be a square matrix, got shape {g.shape}")
        if np.max(np.abs(g - g.T), initial=0.0) > 1e-14 * max(1.0, np.max(np.abs(g))):
            raise UsageError("metric must be symmetric")
        cond = np.linalg.cond(g)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise NumericError(f"metric is degenerate (condition {cond:.3e})")
        g.setflags(write=False)
        object.__setattr__(self, "matrix", g)

    @classmethod
    def identity(cls, dim: int) -> "Metric":
        return cls(np.eye(dim))

    def inner(self, x, y) -> float:
        return float(np.asarray(x, dtype=float) @ self.matrix @ np.asarray(y, dtype=float))


def differential(sys: PointwiseSystem, phi: Field, x, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """Components ∂_{e_i}φ(x)."""
    basis = np.eye(sys.dim)
    return np.array([partial_derivative(sys, phi, basis[i], x, config) for i in range(sys.dim)])


def gradient(sys: PointwiseSystem, phi: Field, metric: Metric, x, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """The unique ∇φ(x) with ⟨∇φ(x), u⟩ = ∂_u φ(x) for every u."""
    if metric.matrix.shape != (sys.dim, sys.dim):
        raise UsageError(f"metric has shape {metric.matrix.shape}, expected {(sys.dim, sys.dim)}")
    return as_coordinates(np.linalg.solve(metric.matrix, differential(sys, phi, x, config)))


def gradient_normal_equations(sys: PointwiseSystem, phi: Field, metric: Metric, x, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """The gradient through GᵀG·∇φ = Gᵀ·dφ, an independent solve used as a uniqueness check."""
    g = metric.matrix
    d = differential(sys, phi, x, config)
    return as_coordinates(np.linalg.solve(g.T @ g, g.T @ d))


def gradient_identity_residual(
    sys: PointwiseSystem,
    phi: Field,
    metric: Metric,
    x,
    samples: int = 10,
    seed: int = 0,
    config: LimitConfig = DEFAULT_LIMIT,
) -> float:
    """max |⟨∇φ(x), u⟩ − ∂_u φ(x)| over seeded random directions u."""
    grad = gradient(sys, phi, metric, x, config)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        u = rng.uniform(-1.0, 1.0, sys.dim)
        worst = max(worst, abs(metric.inner(grad, u) - partial_derivative(sys, phi, u, x, config)))
    return worst


@dataclass(frozen=True)
class GeodesicTrace:
    params: NDArray[np.float64]
    points: NDArray[np.float64]
    body_velocity: NDArray[np.float64]
    stats: Dict[str, Any] = field(default_factory=dict)

    @property
    def endpoint(self) -> NDArray[np.float64]:
        return self.points[-1]

    def samples(self) -> List[tuple]:
        return [(float(t), p) for t, p in zip(self.params, self.points)]


def geodesic_trace(sys: PointwiseSystem, p0, v, t_end: float, step_count: int) -> GeodesicTrace:
    """
    Integrate γ̄′ = F(γ̄)·v on [0, t_end] with classical fixed-step RK4.

    Raises:
        DomainExitError: a stage or sample left the chart; carries the parameter.
    """
    if step_count < 1:
        raise UsageError(f"step_count must be at least 1, got {step_count}")
    if not t_end > 0:
        raise UsageError(f"t_end must be positive, got {t_end}")
    y = sys.domain.require(p0, "start point").copy()
    v = as_coordinates(v, dim=sys.dim, name="body velocity")
    h = t_end / step_count
    evaluations = 0

    def rhs(point, t: float):
        nonlocal evaluations
        if not sys.domain.contains(point):
            logger.warning("geodesic leaves the domain near t=%.6g", t)
            raise DomainExitError(
                f"geodesic leaves the domain at parameter {t:.6g}, point {np.asarray(point).tolist()}",
                point=point,
                parameter=t,
            )
        evaluations += 1
        return sys.frame.matrix(point) @ v

    params = np.empty(step_count + 1)
    points = np.empty((step_count + 1, sys.dim))
    params[0] = 0.0
    points[0] = y
    for k in range(step_count):
        t = k * h
        k1 = rhs(y, t)
        k2 = rhs(y + 0.5 * h * k1, t + 0.5 * h)
        k3 = rhs(y + 0.5 * h * k2, t + 0.5 * h)
        k4 = rhs(y + h * k3, t + h)
        y = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not sys.domain.contains(y):
            raise DomainExitError(f"geodesic leaves the domain at parameter {t + h:.6g}", point=y, parameter=t + h)
        params[k + 1] = (k + 1) * h
        points[k + 1] = y
    params.setflags(write=False)
    points.setflags(write=False)
    return GeodesicTrace(
        params=params,
        points=points,
        body_velocity=v,
        stats={"steps": step_count, "step_size": h, "frame_evaluations": evaluations},
    )


def _derivative_samples(values: NDArray[np.float64], h: float) -> NDArray[np.float64]:
    """Fourth-order five-point differences; one-sided stencils at the two ends."""
    y = np.asarray(values, dtype=float)
    n = y.shape[0]
    d = np.empty_like(y)
    d[2:n - 2] = (y[:n - 4] - 8.0 * y[1:n - 3] + 8.0 * y[3:n - 1] - y[4:]) / (12.0 * h)
    d[0] = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h)
    d[1] = (-3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]) / (12.0 * h)
    d[n - 1] = (25.0 * y[n - 1] - 48.0 * y[n - 2] + 36.0 * y[n - 3] - 16.0 * y[n - 4] + 3.0 * y[n - 5]) / (12.0 * h)
    d[n - 2] = (3.0 * y[n - 1] + 10.0 * y[n - 2] - 18.0 * y[n - 3] + 6.0 * y[n - 4] - y[n - 5]) / (12.0 * h)
    return d


def geodesic_residual(sys: PointwiseSystem, trace: GeodesicTrace) -> float:
    """
    Max norm of d/dt[F(γ̄(t))⁻¹·γ̄′(t)] along the trace, both derivatives by finite
    differences on the samples. Zero for an exact affine geodesic.
    """
    n = len(trace.params)
    if n < MIN_RESIDUAL_SAMPLES:
        raise UsageError(f"geodesic residual needs at least {MIN_RESIDUAL_SAMPLES} samples, got {n}")
    steps = np.diff(trace.params)
    h = float(steps[0])
    if not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        raise UsageError("geodesic residual needs uniformly spaced samples")
    tangent = _derivative_samples(trace.points, h)
    body = np.array([np.linalg.solve(sys.frame.matrix(pt), d) for pt, d in zip(trace.points, tangent)])
    return max_norm(_derivative_samples(body, h))
