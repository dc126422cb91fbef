"""
Gallery of example spaces with closed-form frames and frame derivatives.

Each builder returns a PointwiseSystem whose frame carries an analytic directional
derivative and, where one exists, a closed-form CurvatureOracle used as ground truth
by the test and verification suites.
"""

import itertools
import logging
from typing import Any, Callable, Dict, List, Tuple

import numpy as np
import scipy.linalg as la

from ..schemas import GallerySpec
from ..utils.errors import NumericError, UsageError
from .pointwise import MAX_CONDITION, BoxDomain, CurvatureOracle, FrameField, PointwiseSystem

logger = logging.getLogger(__name__)

J = np.array([[0.0, -1.0], [1.0, 0.0]])
DEFAULT_Y = np.array([[1.0, 0.0], [0.0, -1.0]])

MAX_POLYNOMIAL_COEFFICIENT = 0.1


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _vector_param(params: Dict[str, Any], key: str, dim: int, default) -> np.ndarray:
    value = np.array(params.get(key, default), dtype=float)
    if value.shape != (dim,) or not np.all(np.isfinite(value)):
        raise UsageError(f"gallery parameter '{key}' must be {dim} finite reals, got {params.get(key)!r}")
    return value


def _matrix_param(params: Dict[str, Any], key: str, dim: int, default) -> np.ndarray:
    value = np.array(params.get(key, default), dtype=float)
    if value.shape != (dim, dim) or not np.all(np.isfinite(value)):
        raise UsageError(f"gallery parameter '{key}' must be a finite {dim}x{dim} matrix, got {params.get(key)!r}")
    return value


def _check_keys(spec: GallerySpec, allowed: Tuple[str, ...]):
    unknown = sorted(set(spec.params) - set(allowed))
    if unknown:
        raise UsageError(f"unknown parameters for gallery kind '{spec.kind}': {', '.join(unknown)}")


def _require_dim(spec: GallerySpec, dim: int):
    if spec.dim != dim:
        raise UsageError(f"gallery kind '{spec.kind}' requires dim = {dim}, got {spec.dim}")


def _generic_oracle(frame: FrameField) -> CurvatureOracle:
    # Γ(u) = F⁻¹ · ∂F[F u]
    def connection(p, u):
        f = frame.evaluate(np.asarray(p, dtype=float))
        return np.linalg.solve(f, frame.directional_derivative(p, f @ np.asarray(u, dtype=float)))

    return CurvatureOracle(connection=connection)


def flat(spec: GallerySpec) -> Tuple[FrameField, CurvatureOracle]:
    _check_keys(spec, ())
    n = spec.dim
    identity = np.eye(n)
    frame = FrameField(
        dim=n,
        evaluate=lambda p: identity,
        directional_derivative=lambda p, w: np.zeros((n, n)),
        name="flat",
    )
    return frame, CurvatureOracle(connection=lambda p, u: np.zeros((n, n)))


def rotation2d(spec: GallerySpec) -> Tuple[FrameField, CurvatureOracle]:
    """F(p) = R(ω·p); ∂F(p)[w] = (ω·w)·J·R(ω·p); Γ(u) = (ω·F(p)u)·J."""
    _check_keys(spec, ("omega",))
    _require_dim(spec, 2)
    omega = _vector_param(spec.params, "omega", 2, [1.0, 0.0])

    def evaluate(p):
        return rotation(float(omega @ p))

    def derivative(p, w):
        return float(omega @ w) * (J @ evaluate(p))

    def connection(p, u):
        return float(omega @ (evaluate(p) @ u)) * J

    frame = FrameField(2, evaluate, derivative, name="rotation2d", parameters={"omega": omega.tolist()})
    return frame, CurvatureOracle(connection=connection)


def scaling(spec: GallerySpec) -> Tuple[FrameField, CurvatureOracle]:
    """F(p) = e^{λ·p}·I; Γ(u) = (λ·F(p)u)·I."""
    _check_keys(spec, ("lam",))
    n = spec.dim
    lam = _vector_param(spec.params, "lam", n, np.eye(n)[0])
    identity = np.eye(n)

    def evaluate(p):
        return np.exp(float(lam @ p)) * identity

    def derivative(p, w):
        return float(lam @ w) * evaluate(p)

    def connection(p, u):
        return float(lam @ (evaluate(p) @ u)) * identity

    frame = FrameField(n, evaluate, derivative, name="scaling", parameters={"lam": lam.tolist()})
    return frame, CurvatureOracle(connection=connection)


def _exponential(generator: np.ndarray) -> Callable[[float], np.ndarray]:
    """s ↦ exp(s·generator); closed forms for diagonal generators and multiples of J."""
    if np.count_nonzero(generator - np.diag(np.diag(generator))) == 0:
        d = np.diag(generator)
        return lambda s: np.diag(np.exp(s * d))
    if generator.shape == (2, 2) and np.array_equal(generator, generator[1, 0] * J):
        c = float(generator[1, 0])
        return lambda s: rotation(c * s)
    return lambda s: la.expm(s * generator)


def mixed_exp2d(spec: GallerySpec) -> Tuple[FrameField, CurvatureOracle]:
    """F(p) = exp(p₀X)·exp(p₁Y); ∂F(p)[w] = w₀·X·F(p) + w₁·F(p)·Y."""
    _check_keys(spec, ("X", "Y"))
    _require_dim(spec, 2)
    x = _matrix_param(spec.params, "X", 2, J)
    y = _matrix_param(spec.params, "Y", 2, DEFAULT_Y)
    exp_x = _exponential(x)
    exp_y = _exponential(y)

    def evaluate(p):
        return exp_x(float(p[0])) @ exp_y(float(p[1]))

    def derivative(p, w):
        f = evaluate(p)
        return float(w[0]) * (x @ f) + float(w[1]) * (f @ y)

    frame = FrameField(2, evaluate, derivative, name="mixed_exp2d", parameters={"X": x.tolist(), "Y": y.tolist()})
    return frame, _generic_oracle(frame)


def monomial_exponents(dim: int, degree: int) -> List[Tuple[int, ...]]:
    """Exponent tuples of total degree 1..degree, graded then lexicographic."""
    exps = [e for e in itertools.product(range(degree + 1), repeat=dim) if 1 <= sum(e) <= degree]
    return sorted(exps, key=lambda e: (sum(e), tuple(-k for k in e)))


def polynomial(spec: GallerySpec) -> Tuple[FrameField, None]:
    """F(p) = I + Σ C_m p^m with seeded coefficients of magnitude at most `scale`."""
    _check_keys(spec, ("degree", "scale"))
    n = spec.dim
    degree = spec.params.get("degree", 2)
    scale = float(spec.params.get("scale", 0.05))
    if not isinstance(degree, int) or degree < 1:
        raise UsageError(f"polynomial degree must be a positive integer, got {degree!r}")
    if not 0.0 <= scale <= MAX_POLYNOMIAL_COEFFICIENT:
        raise UsageError(f"polynomial scale must lie in [0, {MAX_POLYNOMIAL_COEFFICIENT}], got {scale}")
    exponents = np.array(monomial_exponents(n, degree), dtype=int)
    rng = np.random.default_rng(spec.seed)
    coefficients = scale * rng.uniform(-1.0, 1.0, (len(exponents), n, n))
    identity = np.eye(n)

    def evaluate(p):
        monomials = np.prod(np.power(p[None, :], exponents), axis=1)
        return identity + np.tensordot(monomials, coefficients, axes=1)

    def derivative(p, w):
        out = np.zeros((n, n))
        for e, c in zip(exponents, coefficients):
            d = 0.0
            for i in range(n):
                if e[i] == 0 or w[i] == 0.0:
                    continue
                lowered = e.copy()
                lowered[i] -= 1
                d += e[i] * float(np.prod(np.power(p, lowered))) * float(w[i])
            out += d * c
        return out

    frame = FrameField(n, evaluate, derivative, name="polynomial", parameters={"degree": degree, "scale": scale, "seed": spec.seed})
    return frame, None


def kink(spec: GallerySpec) -> Tuple[FrameField, None]:
    """F(p) = (1 + |p₀ − c|)·I; not differentiable on the hyperplane p₀ = c."""
    _check_keys(spec, ("center",))
    n = spec.dim
    center = float(spec.params.get("center", 0.0))
    identity = np.eye(n)

    def evaluate(p):
        return (1.0 + abs(float(p[0]) - center)) * identity

    return FrameField(n, evaluate, None, name="kink", parameters={"center": center}), None


BUILDERS = {
    "flat": flat,
    "rotation2d": rotation2d,
    "scaling": scaling,
    "mixed_exp2d": mixed_exp2d,
    "polynomial": polynomial,
    "kink": kink,
}

DEFAULT_BOUNDS = {"polynomial": (-1.0, 1.0)}


def _domain(spec: GallerySpec) -> BoxDomain:
    if spec.domain is None:
        low, high = DEFAULT_BOUNDS.get(spec.kind, (-4.0, 4.0))
        return BoxDomain.cube(spec.dim, low, high)
    if len(spec.domain.min) != spec.dim or len(spec.domain.max) != spec.dim:
        raise UsageError(f"domain bounds must have dimension {spec.dim}")
    return BoxDomain(np.array(spec.domain.min), np.array(spec.domain.max))


def _prescan(frame: FrameField, domain: BoxDomain):
    per_axis = 5 if domain.dim <= 4 else 3
    for p in domain.grid([per_axis] * domain.dim, margin=0.0):
        m = frame.evaluate(p)
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise NumericError(f"gallery frame '{frame.name}' is near-singular at {p.tolist()} (condition {cond:.3e})")


def build(spec: GallerySpec) -> PointwiseSystem:
    """Construct the gallery space described by `spec`."""
    frame, oracle = BUILDERS[spec.kind](spec)
    domain = _domain(spec)
    _prescan(frame, domain)
    logger.debug("built gallery space %s on %s..%s", spec.kind, domain.min.tolist(), domain.max.tolist())
    return PointwiseSystem(domain=domain, frame=frame, oracle=oracle)


def build_kind(kind: str, dim: int = 2, **params) -> PointwiseSystem:
    """Shortcut used by tests and the verification suites."""
    seed = params.pop("seed", 0)
    domain = params.pop("domain", None)
    return build(GallerySpec(kind=kind, dim=dim, params=params, domain=domain, seed=seed))
