"""
Infinitesimal operators: the pseudo-derivative Δ_u v(p) = lim D_{τu}v(p)/τ, the
connection matrices Γ(u) with Γ(u)·v = Δ_u v(p), second pseudo-derivatives and the
torsion, affine Riemann and cumulative tensors.

In the frame model the limit has the closed form Γ(u) = F(p)⁻¹·∂F(p)[F(p)u], which
the analytic mode uses.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
from numpy.typing import NDArray

from ..utils.errors import DomainExitError, LimitFailure, UsageError
from ..utils.limits import DEFAULT_LIMIT, LimitConfig, LimitEstimate, limit_value, max_norm, richardson_limit, successive_orders
from .affine import as_coordinates, relative_residual
from .discrete import dissociation
from .pointwise import PointwiseSystem

logger = logging.getLogger(__name__)

NUMERIC = "numeric"
ANALYTIC = "analytic"


def _mode(sys: PointwiseSystem, mode: str) -> str:
    if mode not in (NUMERIC, ANALYTIC):
        raise UsageError(f"mode must be '{NUMERIC}' or '{ANALYTIC}', got {mode!r}")
    if mode == ANALYTIC and not sys.frame.has_derivative:
        raise UsageError(f"frame '{sys.frame.name}' has no analytic derivative")
    return mode


def dissociation_matrix(sys: PointwiseSystem, u, p) -> NDArray[np.float64]:
    """The matrix of v ↦ D_u v(p), i.e. F(p)⁻¹F(p+ū) − I."""
    q = sys.step(p, u)
    return np.linalg.solve(sys.frame_at(p), sys.frame_at(q)) - np.eye(sys.dim)


def pseudo_estimate(sys: PointwiseSystem, u, v, p, config: LimitConfig = DEFAULT_LIMIT, side: int = 1) -> LimitEstimate:
    """
    Richardson estimate of lim D_{τu}v(p)/τ as τ→0 from the side sign(side).
    """
    p = sys.domain.require(p)
    u = as_coordinates(u, dim=sys.dim, name="direction")
    v = as_coordinates(v, dim=sys.dim, name="ground vector")

    def quotient(tau: float):
        t = side * tau
        return dissociation(sys, t * u, v, p) / t

    return richardson_limit(quotient, config)


def pseudo_derivative(sys: PointwiseSystem, u, v, p, mode: str = NUMERIC, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """Δ_u v(p)."""
    if _mode(sys, mode) == ANALYTIC:
        return as_coordinates(analytic_connection(sys, u, p) @ np.asarray(v, dtype=float))
    estimate = pseudo_estimate(sys, u, v, p, config)
    if not estimate.converged:
        logger.warning("pseudo-derivative did not converge at %s (err=%.3e)", np.asarray(p).tolist(), estimate.err)
        raise LimitFailure(
            f"pseudo-derivative did not converge at {np.asarray(p).tolist()} (err={estimate.err:.3e})",
            diagnostics=estimate.diagnostics(),
        )
    return as_coordinates(estimate.value)


def field_pseudo_derivative(sys: PointwiseSystem, u_field, v_field, p, mode: str = NUMERIC, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """Δ_𝒖𝒗(p) = Δ_{𝒖(p)}𝒗(p)(p); only the values at p enter."""
    return pseudo_derivative(sys, u_field(p), v_field(p), p, mode, config)


def analytic_connection(sys: PointwiseSystem, u, p) -> NDArray[np.float64]:
    """Γ(u) = F(p)⁻¹·∂F(p)[F(p)u]."""
    f = sys.frame_at(p)
    return np.linalg.solve(f, sys.frame_directional_derivative(p, f @ np.asarray(u, dtype=float)))


def connection_matrix(sys: PointwiseSystem, u, p, mode: str = NUMERIC, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """Γ(u) at p, numerically as lim (F(p)⁻¹F(p+τū) − I)/τ."""
    if _mode(sys, mode) == ANALYTIC:
        return analytic_connection(sys, u, p)
    p = sys.domain.require(p)
    u = as_coordinates(u, dim=sys.dim, name="direction")
    return limit_value(
        lambda tau: dissociation_matrix(sys, tau * u, p) / tau,
        config,
        f"connection matrix at {p.tolist()}",
    )


@dataclass(frozen=True)
class ConnectionMap:
    """
    Connection matrices at one point. gammas[i] = Γ(e_i), so that
    coefficients[k, i, j] = Γᵏᵢⱼ = k-th component of Δ_{e_i} e_j.
    """

    at: NDArray[np.float64]
    gammas: NDArray[np.float64]

    def matrix_of(self, u) -> NDArray[np.float64]:
        return np.tensordot(np.asarray(u, dtype=float), self.gammas, axes=1)

    @property
    def coefficients(self) -> NDArray[np.float64]:
        return np.transpose(self.gammas, (1, 0, 2))

    def apply(self, u, v) -> NDArray[np.float64]:
        """Δ_u v = Σ uⁱvʲΓᵏᵢⱼ e_k."""
        return np.einsum("kij,i,j->k", self.coefficients, np.asarray(u, dtype=float), np.asarray(v, dtype=float))

    def torsion_components(self) -> NDArray[np.float64]:
        """T[k, i, j] = Γᵏᵢⱼ − Γᵏⱼᵢ."""
        c = self.coefficients
        return c - np.transpose(c, (0, 2, 1))

    def riemann_components(self) -> NDArray[np.float64]:
        """R[k, i, j, l] = ([Γ(e_i), Γ(e_j)])[k, l]."""
        g = self.gammas
        products = np.einsum("ikm,jml->ijkl", g, g)
        commutators = products - np.transpose(products, (1, 0, 2, 3))
        return np.transpose(commutators, (2, 0, 1, 3))


def connection_map(sys: PointwiseSystem, p, mode: str = NUMERIC, config: LimitConfig = DEFAULT_LIMIT) -> ConnectionMap:
    p = sys.domain.require(p)
    basis = np.eye(sys.dim)
    gammas = np.stack([connection_matrix(sys, basis[i], p, mode, config) for i in range(sys.dim)])
    return ConnectionMap(at=p, gammas=gammas)


def second_pseudo(sys: PointwiseSystem, u, v, w, p, mode: str = NUMERIC, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """Δ_u(Δ_v w)(p) with the inner vector Δ_v w(p) frozen at p."""
    inner = pseudo_derivative(sys, v, w, p, mode, config)
    return pseudo_derivative(sys, u, inner, p, mode, config)


def torsion(sys: PointwiseSystem, u, v, p, mode: str = NUMERIC, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """T_uv(p) = Δ_u v(p) − Δ_v u(p)."""
    return as_coordinates(pseudo_derivative(sys, u, v, p, mode, config) - pseudo_derivative(sys, v, u, p, mode, config))


def riemann(sys: PointwiseSystem, u, v, w, p, mode: str = NUMERIC, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """R_uvw(p) = Δ_u(Δ_v w)(p) − Δ_v(Δ_u w)(p)."""
    return as_coordinates(second_pseudo(sys, u, v, w, p, mode, config) - second_pseudo(sys, v, u, w, p, mode, config))


def cumulative(sys: PointwiseSystem, u, v, w, p, mode: str = NUMERIC, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """C_uvw(p) = T_uv(p) + R_uvw(p)."""
    return as_coordinates(torsion(sys, u, v, p, mode, config) + riemann(sys, u, v, w, p, mode, config))


def curvature_tensors(sys: PointwiseSystem, p, mode: str = NUMERIC, config: LimitConfig = DEFAULT_LIMIT) -> Dict[str, NDArray[np.float64]]:
    """
    Component arrays at p, all from one connection map:
    Gamma[k,i,j], T[k,i,j], R[k,i,j,l] and C[k,i,j,l] = T[k,i,j] + R[k,i,j,l].
    """
    cmap = connection_map(sys, p, mode, config)
    t = cmap.torsion_components()
    r = cmap.riemann_components()
    return {"Gamma": cmap.coefficients, "T": t, "R": r, "C": t[..., None] + r}


def scaled_discrete_riemann(sys: PointwiseSystem, u, v, w, p, tau: float = 1e-4, extrapolate: bool = True) -> NDArray[np.float64]:
    """
    [D_{τu}(D_{τv}w) − D_{τv}(D_{τu}w)](p)/τ², which tends to R_uvw(p). With
    extrapolate set, one Richardson step 2q(τ/2) − q(τ) removes the O(τ) term.
    """
    u = as_coordinates(u, dim=sys.dim, name="u")
    v = as_coordinates(v, dim=sys.dim, name="v")

    def q(t: float) -> NDArray[np.float64]:
        a = dissociation(sys, t * u, dissociation(sys, t * v, w, p), p)
        b = dissociation(sys, t * v, dissociation(sys, t * u, w, p), p)
        return (a - b) / (t * t)

    if not extrapolate:
        return as_coordinates(q(tau))
    return as_coordinates(2.0 * q(0.5 * tau) - q(tau))


def observed_order(sys: PointwiseSystem, u, v, p, taus=(1e-2, 1e-3, 1e-4, 1e-5), reference=None) -> float:
    """
    Log-log slope of |D_{τu}v(p)/τ − Δ_u v(p)| against τ. The reference limit defaults
    to the analytic value when the frame has a derivative.
    """
    if reference is None:
        mode = ANALYTIC if sys.frame.has_derivative else NUMERIC
        reference = pseudo_derivative(sys, u, v, p, mode)
    u = as_coordinates(u, dim=sys.dim, name="u")
    errors = [max_norm(dissociation(sys, t * u, v, p) / t - reference) for t in taus]
    if min(errors) <= 0.0:
        return math.inf
    slope, _ = np.polyfit(np.log(taus), np.log(errors), 1)
    return float(slope)


@dataclass
class ProbeTrial:
    u: List[float]
    v: List[float]
    err: float = math.inf
    converged: bool = False
    order: float = math.nan
    additivity: float = math.nan
    homogeneity: float = math.nan
    continuity: float = math.nan
    two_sided: float = math.nan
    failure: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class ProbeReport:
    point: List[float]
    trials: List[ProbeTrial]
    tol: float
    differentiable: bool = True
    failures: List[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "point": self.point,
            "differentiable": self.differentiable,
            "tol": self.tol,
            "failures": self.failures,
            "trials": [t.to_dict() for t in self.trials],
        }


def differentiability_probe(
    sys: PointwiseSystem,
    p,
    trials: int = 5,
    seed: int = 0,
    config: LimitConfig = DEFAULT_LIMIT,
    tol: float = 1e-8,
) -> ProbeReport:
    """
    Probe whether Δ exists and is linear at p: convergence of the one-sided limit,
    agreement of the limits from τ > 0 and τ < 0, additivity and homogeneity in u,
    and continuity (D_{τu}v → 0). Failures are recorded, never raised.
    """
    p = sys.domain.require(p)
    rng = np.random.default_rng(seed)
    results: List[ProbeTrial] = []
    failures: List[str] = []

    def value(u, v):
        est = pseudo_estimate(sys, u, v, p, config)
        if not est.converged:
            raise LimitFailure(f"limit did not converge (err={est.err:.3e})", diagnostics=est.diagnostics())
        return est

    for k in range(trials):
        u = rng.uniform(-1.0, 1.0, sys.dim)
        u2 = rng.uniform(-1.0, 1.0, sys.dim)
        v = rng.uniform(-1.0, 1.0, sys.dim)
        c = float(rng.uniform(-2.0, 2.0))
        trial = ProbeTrial(u=u.tolist(), v=v.tolist())
        try:
            est = pseudo_estimate(sys, u, v, p, config)
            trial.err = est.err
            trial.converged = est.converged
            orders = [o for o in successive_orders(est.quotients, config.ratio) if math.isfinite(o)]
            trial.order = float(np.median(orders)) if orders else math.nan
            if not est.converged:
                raise LimitFailure(f"limit did not converge (err={est.err:.3e})")
            d = est.value
            scale = max(1.0, max_norm(d))
            trial.additivity = relative_residual(value(u + u2, v).value, d + value(u2, v).value, scale)
            trial.homogeneity = relative_residual(value(c * u, v).value, c * d, scale)
            back = pseudo_estimate(sys, u, v, p, config, side=-1)
            trial.two_sided = relative_residual(back.value, d, scale) if back.converged else math.inf
            trial.continuity = max_norm(dissociation(sys, est.taus[-1] * u, v, p))
        except (LimitFailure, DomainExitError) as e:
            trial.failure = str(e)
        problems = []
        if trial.failure:
            problems.append(trial.failure)
        for name in ("additivity", "homogeneity", "two_sided"):
            r = getattr(trial, name)
            if math.isfinite(r) and r > tol or r == math.inf:
                problems.append(f"{name} residual {r:.3e}")
        if problems:
            failures.append(f"trial {k}: " + "; ".join(problems))
        results.append(trial)

    report = ProbeReport(point=p.tolist(), trials=results, tol=tol, differentiable=not failures, failures=failures)
    if failures:
        logger.warning("differentiability probe at %s flagged %d trial(s)", p.tolist(), len(failures))
    return report
