"""
Pointwise affine systems: a box chart plus a frame field F(p) realizing the affine
action field, p(v) = F(p)·v.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from numpy.typing import NDArray

from ..utils.errors import DomainError, DomainExitError, NumericError, UsageError
from ..utils.limits import LimitConfig, limit_value
from .affine import as_coordinates, solve_action, translate

logger = logging.getLogger(__name__)

# Frames whose condition number exceeds this are treated as singular.
MAX_CONDITION = 1e10

Matrix = NDArray[np.float64]


@dataclass(frozen=True)
class BoxDomain:
    min: NDArray[np.float64]
    max: NDArray[np.float64]

    def __post_init__(self):
        lo = as_coordinates(self.min, name="domain min")
        hi = as_coordinates(self.max, dim=lo.size, name="domain max")
        if not np.all(lo < hi):
            raise UsageError(f"domain min must be below max on every axis, got {lo.tolist()} / {hi.tolist()}")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def cube(cls, dim: int, low: float, high: float) -> "BoxDomain":
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    @property
    def dim(self) -> int:
        return self.min.size

    @property
    def width(self) -> NDArray[np.float64]:
        return self.max - self.min

    def contains(self, p) -> bool:
        x = np.asarray(p, dtype=float)
        return bool(np.all(np.isfinite(x)) and np.all(x >= self.min) and np.all(x <= self.max))

    def require(self, p, what: str = "point") -> NDArray[np.float64]:
        x = as_coordinates(p, dim=self.dim, name=what)
        if not self.contains(x):
            raise DomainError(f"{what} {x.tolist()} lies outside the domain", point=x)
        return x

    def sample(self, rng: np.random.Generator, margin: float = 0.0) -> NDArray[np.float64]:
        """Uniform point, kept `margin`·width away from the faces."""
        lo = self.min + margin * self.width
        hi = self.max - margin * self.width
        return as_coordinates(rng.uniform(lo, hi))

    def axis_samples(self, count: int, margin: float = 0.05) -> List[NDArray[np.float64]]:
        """Per-axis sample positions; a single sample sits at the midpoint."""
        if count < 1:
            raise UsageError(f"grid counts must be at least 1, got {count}")
        axes = []
        for lo, hi in zip(self.min, self.max):
            if count == 1:
                axes.append(np.array([0.5 * (lo + hi)]))
            else:
                pad = margin * (hi - lo)
                axes.append(np.linspace(lo + pad, hi - pad, count))
        return axes

    def grid(self, counts: List[int], margin: float = 0.05) -> List[NDArray[np.float64]]:
        """Grid points in lexicographic index order (last axis fastest)."""
        if len(counts) != self.dim:
            raise UsageError(f"grid needs {self.dim} counts, got {len(counts)}")
        axes = [self.axis_samples(c, margin)[i] for i, c in enumerate(counts)]
        return [as_coordinates(np.array(x)) for x in itertools.product(*axes)]


@dataclass(frozen=True)
class FrameField:
    """
    The affine action field as a matrix field.

    evaluate maps a chart point to F(p); directional_derivative, when present, maps
    (p, w) to the analytic ∂F(p)[w].
    """

    dim: int
    evaluate: Callable[[NDArray[np.float64]], Matrix]
    directional_derivative: Optional[Callable[[NDArray[np.float64], NDArray[np.float64]], Matrix]] = None
    name: str = "frame"
    parameters: Dict[str, Any] = field(default_factory=dict)

    @property
    def has_derivative(self) -> bool:
        return self.directional_derivative is not None

    def matrix(self, p) -> Matrix:
        m = np.asarray(self.evaluate(np.asarray(p, dtype=float)), dtype=float)
        if m.shape != (self.dim, self.dim):
            raise UsageError(f"frame '{self.name}' returned shape {m.shape}, expected {(self.dim, self.dim)}")
        if not np.all(np.isfinite(m)):
            raise NumericError(f"frame '{self.name}' is not finite at {np.asarray(p).tolist()}")
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise NumericError(
                f"frame '{self.name}' is singular at {np.asarray(p).tolist()} (condition {cond:.3e})"
            )
        return m


@dataclass(frozen=True)
class CurvatureOracle:
    """Closed-form connection matrices Γ(u) at a point, and the tensors they induce."""

    connection: Callable[[NDArray[np.float64], NDArray[np.float64]], Matrix]

    def torsion(self, p, u, v) -> NDArray[np.float64]:
        return self.connection(p, u) @ v - self.connection(p, v) @ u

    def riemann(self, p, u, v, w) -> NDArray[np.float64]:
        a = self.connection(p, u)
        b = self.connection(p, v)
        return a @ (b @ w) - b @ (a @ w)

    def connection_coefficients(self, p) -> NDArray[np.float64]:
        """Γ[k, i, j] = k-th component of Δ_{e_i} e_j."""
        n = len(p)
        basis = np.eye(n)
        return np.stack([self.connection(p, basis[i]) for i in range(n)], axis=1)


@dataclass(frozen=True)
class FlatnessReport:
    flat: bool
    max_residual: float
    witness: Optional[Dict[str, Any]]
    samples: int
    resampled: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "flat": self.flat,
            "max_residual": self.max_residual,
            "witness": self.witness,
            "samples": self.samples,
            "resampled": self.resampled,
        }


@dataclass(frozen=True)
class PointwiseSystem:
    domain: BoxDomain
    frame: FrameField
    oracle: Optional[CurvatureOracle] = None

    def __post_init__(self):
        if self.frame.dim != self.domain.dim:
            raise UsageError(f"frame dimension {self.frame.dim} does not match domain dimension {self.domain.dim}")

    @property
    def dim(self) -> int:
        return self.domain.dim

    def frame_at(self, p) -> Matrix:
        return self.frame.matrix(self.domain.require(p))

    def act(self, p, v) -> NDArray[np.float64]:
        """p(v) = F(p)·v."""
        v = as_coordinates(v, dim=self.dim, name="ground vector")
        return as_coordinates(self.frame_at(p) @ v)

    def unact(self, p, t) -> NDArray[np.float64]:
        """p⁻¹(t) = F(p)⁻¹·t."""
        t = as_coordinates(t, dim=self.dim, name="translation")
        return solve_action(self.frame_at(p), t)

    def step(self, p, v, step_index: Optional[int] = None) -> NDArray[np.float64]:
        """p + v̄ = p + p(v); leaving the chart is an error."""
        q = translate(p, self.act(p, v))
        if not self.domain.contains(q):
            raise DomainExitError(
                f"step from {np.asarray(p).tolist()} leaves the domain at {q.tolist()}",
                point=q,
                step_index=step_index,
            )
        return q

    def frame_directional_derivative(self, p, w, config: Optional[LimitConfig] = None) -> Matrix:
        """
        ∂F(p)[w], analytic when the frame provides it, otherwise a Richardson-extrapolated
        central difference with base step 1e-3·(1 + |p|).
        """
        p = self.domain.require(p)
        w = as_coordinates(w, dim=self.dim, name="direction")
        if self.frame.has_derivative:
            return np.asarray(self.frame.directional_derivative(p, w), dtype=float)
        if config is None:
            config = LimitConfig(h0=1e-3 * (1.0 + float(np.max(np.abs(p)))), levels=4, tol=1e-8, symmetric=True)
        base = self.frame.matrix(p)

        def quotient(tau: float) -> Matrix:
            return (self.frame.matrix(p + tau * w) - base) / tau

        return limit_value(quotient, config, f"frame derivative at {p.tolist()}")

    def flatness_residual(self, p, u, v) -> NDArray[np.float64]:
        """p⁻¹∘(p+ū)(v) − v."""
        q = self.step(p, u)
        return as_coordinates(self.unact(p, self.act(q, v)) - np.asarray(v, dtype=float))

    def is_affine_flat(self, sample_count: int = 200, seed: int = 0, tol: float = 1e-12) -> FlatnessReport:
        """
        Sample (p, u, v) triples and report the worst flatness residual. Samples whose
        step leaves the chart are drawn again and counted.
        """
        if sample_count < 1:
            raise UsageError(f"sample_count must be at least 1, got {sample_count}")
        rng = np.random.default_rng(seed)
        reach = 0.25 * float(np.min(self.domain.width))
        worst = 0.0
        witness = None
        taken = 0
        resampled = 0
        while taken < sample_count:
            if resampled > 100 * sample_count:
                raise DomainError("could not draw flatness samples that stay inside the domain")
            p = self.domain.sample(rng)
            u = rng.uniform(-reach, reach, self.dim)
            v = rng.uniform(-1.0, 1.0, self.dim)
            try:
                r = self.flatness_residual(p, u, v)
            except DomainExitError:
                resampled += 1
                continue
            taken += 1
            norm = float(np.max(np.abs(r)))
            if witness is None or norm > worst:
                worst = norm
                witness = {"p": p.tolist(), "u": u.tolist(), "v": v.tolist(), "residual": r.tolist()}
        flat = worst <= tol
        logger.info("flatness of %s: flat=%s max_residual=%.3e", self.frame.name, flat, worst)
        return FlatnessReport(flat=flat, max_residual=worst, witness=witness, samples=taken, resampled=resampled)
