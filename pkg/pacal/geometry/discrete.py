"""
Discrete operators: deviation, dissociation, displacement, parallel transport and the
discrete skew-curvatures (torsion, affine Riemann, cumulative).

Notation: G_u v(p) = p⁻¹∘(p+ū)(v), D_u v(p) = G_u v(p) − v, M_u v(p) = (p+ū)+v̄.
Arrow ("vec") forms return translations instead of ground vectors.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..utils.errors import DomainExitError, IdentityViolation
from .affine import as_coordinates, between, relative_residual, translate
from .pointwise import PointwiseSystem

logger = logging.getLogger(__name__)

# Relative tolerance for the exact identities that involve multiplication.
IDENTITY_TOL = 1e-12


def _vector(sys: PointwiseSystem, v, name: str = "ground vector") -> NDArray[np.float64]:
    return as_coordinates(v, dim=sys.dim, name=name)


def deviation(sys: PointwiseSystem, u, v, p, vec: bool = False) -> NDArray[np.float64]:
    """G_u v(p), or G⃗_u v(p) = (p+ū)(v) when vec is set."""
    q = sys.step(p, u)
    moved = sys.act(q, v)
    if vec:
        return moved
    return sys.unact(p, moved)


def dissociation(sys: PointwiseSystem, u, v, p, vec: bool = False) -> NDArray[np.float64]:
    """D_u v(p) = G_u v(p) − v; the vec form is (p+ū)(v) − p(v)."""
    v = _vector(sys, v)
    if vec:
        return as_coordinates(deviation(sys, u, v, p, vec=True) - sys.act(p, v))
    return as_coordinates(deviation(sys, u, v, p) - v)


def deviation2(sys: PointwiseSystem, u, v, w, p) -> NDArray[np.float64]:
    """G_u(G_v w)(p)."""
    return deviation(sys, u, deviation(sys, v, w, p), p)


def dissociation2_forms(sys: PointwiseSystem, u, v, w, p) -> Tuple[NDArray[np.float64], NDArray[np.float64], float]:
    """
    D_u(D_v w)(p) by composition and by G_u(G_v w) − G_u w − G_v w + w.

    Returns:
        (composed, expanded, scale) where scale bounds the magnitude of the G terms.
    """
    w = _vector(sys, w)
    composed = dissociation(sys, u, dissociation(sys, v, w, p), p)
    gg = deviation2(sys, u, v, w, p)
    gu = deviation(sys, u, w, p)
    gv = deviation(sys, v, w, p)
    expanded = as_coordinates(((gg - gu) - gv) + w)
    scale = max(float(np.max(np.abs(t))) for t in (gg, gu, gv, w))
    return composed, expanded, scale


def dissociation2(sys: PointwiseSystem, u, v, w, p, check: bool = True) -> NDArray[np.float64]:
    composed, expanded, scale = dissociation2_forms(sys, u, v, w, p)
    if check:
        _cross_check("D_u(D_v w)", composed, expanded, scale, p)
    return composed


def _cross_check(label: str, value, other, scale: float, p):
    residual = relative_residual(value, other, scale)
    if residual > IDENTITY_TOL:
        logger.warning("%s: formulas disagree at %s (relative residual %.3e)", label, np.asarray(p).tolist(), residual)
        raise IdentityViolation(f"{label}: formulas disagree at {np.asarray(p).tolist()} (relative residual {residual:.3e})")


def displacement(sys: PointwiseSystem, u, v, p) -> NDArray[np.float64]:
    """M_u v(p) = (p+ū)+v̄."""
    return sys.step(sys.step(p, u), v)


def displacement2(sys: PointwiseSystem, u, v, w, p) -> NDArray[np.float64]:
    """M_uv w(p) = ((p+ū)+v̄) + G⃗_u(G_v w(p))(p)."""
    m = displacement(sys, u, v, p)
    q = translate(m, deviation(sys, u, deviation(sys, v, w, p), p, vec=True))
    if not sys.domain.contains(q):
        raise DomainExitError(f"iterated displacement from {np.asarray(p).tolist()} leaves the domain at {q.tolist()}", point=q)
    return q


@dataclass(frozen=True)
class PolyPath:
    start: NDArray[np.float64]
    steps: Sequence[NDArray[np.float64]] = field(default_factory=list)

    def closes(self) -> bool:
        """True when the ground steps sum to zero."""
        if not self.steps:
            return True
        return bool(np.all(np.sum(np.asarray(self.steps, dtype=float), axis=0) == 0.0))


@dataclass(frozen=True)
class TransportStep:
    index: int
    point: NDArray[np.float64]
    step: NDArray[np.float64]
    vector: NDArray[np.float64]


def transport_steps(sys: PointwiseSystem, v, path: PolyPath) -> List[TransportStep]:
    """Fold deviation along the path: v_{k+1} = G_{u_k} v_k(p_k), p_{k+1} = p_k + ū_k."""
    p = sys.domain.require(path.start, "path start")
    vector = _vector(sys, v)
    trace = []
    for k, u in enumerate(path.steps):
        u = _vector(sys, u, "path step")
        try:
            q = sys.step(p, u, step_index=k)
        except DomainExitError as e:
            logger.warning("transport leaves the domain at step %d", k)
            e.step_index = k
            raise
        vector = sys.unact(p, sys.act(q, vector))
        p = q
        trace.append(TransportStep(index=k, point=p, step=u, vector=vector))
    return trace


def transport(sys: PointwiseSystem, v, path: PolyPath) -> NDArray[np.float64]:
    trace = transport_steps(sys, v, path)
    return trace[-1].vector if trace else _vector(sys, v)


def discrete_torsion(sys: PointwiseSystem, u, v, p, vec: bool = False) -> NDArray[np.float64]:
    """T_uv(p) = D_u v(p) − D_v u(p)."""
    return as_coordinates(dissociation(sys, u, v, p, vec) - dissociation(sys, v, u, p, vec))


def displacement_bracket(sys: PointwiseSystem, u, v, p) -> NDArray[np.float64]:
    """[M_u v(p)] = M_u v(p) ← M_v u(p)."""
    return between(displacement(sys, u, v, p), displacement(sys, v, u, p))


def discrete_riemann_forms(sys: PointwiseSystem, u, v, w, p) -> Tuple[NDArray[np.float64], NDArray[np.float64], float]:
    """R_uvw(p) as D_u(D_v w) − D_v(D_u w) and as G_u(G_v w) − G_v(G_u w)."""
    w = _vector(sys, w)
    d_form = as_coordinates(dissociation(sys, u, dissociation(sys, v, w, p), p) - dissociation(sys, v, dissociation(sys, u, w, p), p))
    a = deviation2(sys, u, v, w, p)
    b = deviation2(sys, v, u, w, p)
    g_form = as_coordinates(a - b)
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    return d_form, g_form, scale


def discrete_riemann(sys: PointwiseSystem, u, v, w, p, vec: bool = False, check: bool = True) -> NDArray[np.float64]:
    d_form, g_form, scale = discrete_riemann_forms(sys, u, v, w, p)
    if check:
        _cross_check("discrete Riemann", d_form, g_form, scale, p)
    if vec:
        return sys.act(p, d_form)
    return d_form


def displacement2_bracket(sys: PointwiseSystem, u, v, w, p) -> NDArray[np.float64]:
    """[M_uv w(p)] = M_uv w(p) ← M_vu w(p)."""
    return between(displacement2(sys, u, v, w, p), displacement2(sys, v, u, w, p))


def discrete_cumulative(sys: PointwiseSystem, u, v, w, p, vec: bool = False, check: bool = True) -> NDArray[np.float64]:
    """
    C_uvw(p) = T_uv(p) + R_uvw(p).

    With w = 0 this is T_uv, which need not vanish.
    """
    total = as_coordinates(discrete_torsion(sys, u, v, p) + discrete_riemann(sys, u, v, w, p, check=check))
    if vec:
        return sys.act(p, total)
    return total


@dataclass(frozen=True)
class DiscreteCurvatureMap:
    """(u, v) ↦ D_u v(at): the discrete affine curvature at one point."""

    system: PointwiseSystem
    at: NDArray[np.float64]

    def apply(self, u, v, vec: bool = False) -> NDArray[np.float64]:
        return dissociation(self.system, u, v, self.at, vec)

    def matrix(self, u) -> NDArray[np.float64]:
        """The matrix of v ↦ D_u v(at): F(at)⁻¹F(at+ū) − I."""
        q = self.system.step(self.at, u)
        return np.linalg.solve(self.system.frame_at(self.at), self.system.frame_at(q)) - np.eye(self.system.dim)


def discrete_connection(sys: PointwiseSystem) -> Callable[[NDArray[np.float64]], DiscreteCurvatureMap]:
    """The point-indexed family p ↦ discrete affine curvature at p."""

    def at(p) -> DiscreteCurvatureMap:
        return DiscreteCurvatureMap(system=sys, at=sys.domain.require(p))

    return at
