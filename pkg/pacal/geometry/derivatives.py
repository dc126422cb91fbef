"""
Derivatives of fields on pointwise affine spaces.

With p' = p + τū (a step through the action field) and x + τu (a canonical step):

    ∇_u 𝒗(p) = lim [p⁻¹(p'(𝒗(p'))) − 𝒗(p)] / τ           reduced derivative
    ▽_u 𝒗(x) = lim [x⁻¹((x+τū)(𝒗(x+τu))) − 𝒗(x)] / τ     reduced derivative on a vector space
    δ_u f(p) = lim [f(p') − f(p)] / τ                      plain derivative
    ∂_u f(x) = lim [f(x+τu) − f(x)] / τ                    plain derivative on a vector space

Every derivative is a Richardson-extrapolated limit; product rules compare sides
that are each computed by their own limit.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from ..utils.errors import DomainExitError, LimitFailure, UsageError
from ..utils.limits import DEFAULT_LIMIT, LimitConfig, limit_value, max_norm
from .affine import as_coordinates, between, translate
from .fields import BILINEAR_KINDS, BilinearMap, Field, PointField
from .infinitesimal import NUMERIC, pseudo_derivative
from .pointwise import PointwiseSystem

logger = logging.getLogger(__name__)


def _direction(sys: PointwiseSystem, u) -> NDArray[np.float64]:
    return as_coordinates(u, dim=sys.dim, name="direction")


def _canonical(sys: PointwiseSystem, x, t: float, u) -> NDArray[np.float64]:
    q = translate(x, t * u)
    if not sys.domain.contains(q):
        raise DomainExitError(f"canonical step from {np.asarray(x).tolist()} leaves the domain at {q.tolist()}", point=q)
    return q


def _transported(sys: PointwiseSystem, p, t: float, u, value_at) -> NDArray[np.float64]:
    """p⁻¹∘(p+τū) applied to value_at(p+τū)."""
    q = sys.step(p, t * u)
    return sys.unact(p, sys.act(q, value_at(q)))


def point_field_complete_derivative(
    source: PointwiseSystem,
    target: PointwiseSystem,
    phi: PointField,
    u,
    p,
    config: LimitConfig = DEFAULT_LIMIT,
) -> NDArray[np.float64]:
    """𝔟(Φ(p))⁻¹(Φ(p+τū) ← Φ(p)) / τ as τ → 0."""
    p = source.domain.require(p)
    u = _direction(source, u)
    if target.dim != source.dim:
        raise UsageError("point fields need source and target charts of the same dimension")
    base = phi(p)

    def quotient(t: float):
        return target.unact(base, between(phi(source.step(p, t * u)), base)) / t

    return limit_value(quotient, config, f"complete derivative of {phi.name} at {p.tolist()}")


def point_field_reduced_derivative(
    source: PointwiseSystem,
    phi: PointField,
    u,
    p,
    config: LimitConfig = DEFAULT_LIMIT,
) -> NDArray[np.float64]:
    """𝔞(p)⁻¹(Φ(p+τū) ← Φ(p)) / τ as τ → 0; Φ must map into the source chart."""
    target = phi.target.domain
    if target.dim != source.dim or np.any(target.min < source.domain.min) or np.any(target.max > source.domain.max):
        raise UsageError("the reduced derivative needs a point field whose target chart lies inside the source chart")
    p = source.domain.require(p)
    u = _direction(source, u)
    base = phi(p)

    def quotient(t: float):
        return source.unact(p, between(phi(source.step(p, t * u)), base)) / t

    return limit_value(quotient, config, f"reduced derivative of {phi.name} at {p.tolist()}")


def vector_field_complete_derivative(
    source: PointwiseSystem,
    target: PointwiseSystem,
    v: Field,
    u,
    p,
    config: LimitConfig = DEFAULT_LIMIT,
) -> NDArray[np.float64]:
    """[𝔟(𝒗(p))⁻¹∘𝔟(𝒗(p+τū))(𝒗(p+τū)) − 𝒗(p)] / τ as τ → 0."""
    p = source.domain.require(p)
    u = _direction(source, u)
    base = target.domain.require(v(p), f"value of {v.name}")

    def quotient(t: float):
        moved = target.domain.require(v(source.step(p, t * u)), f"value of {v.name}")
        return (target.unact(base, target.act(moved, moved)) - base) / t

    return limit_value(quotient, config, f"complete derivative of {v.name} at {p.tolist()}")


def reduced_derivative(sys: PointwiseSystem, v: Field, u, p, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """∇_u 𝒗(p)."""
    p = sys.domain.require(p)
    u = _direction(sys, u)
    base = v(p)
    return limit_value(
        lambda t: (_transported(sys, p, t, u, v) - base) / t,
        config,
        f"reduced derivative of {v.name} at {p.tolist()}",
    )


vector_field_reduced_derivative = reduced_derivative


def vector_space_reduced_derivative(sys: PointwiseSystem, v: Field, u, x, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """▽_u 𝒗(x): frame sampled at x + τū, field sampled at x + τu."""
    x = sys.domain.require(x)
    u = _direction(sys, u)
    base = v(x)

    def quotient(t: float):
        value = v(_canonical(sys, x, t, u))
        return (sys.unact(x, sys.act(sys.step(x, t * u), value)) - base) / t

    return limit_value(quotient, config, f"vector-space reduced derivative of {v.name} at {x.tolist()}")


def plain_derivative(sys: PointwiseSystem, f: Field, u, p, config: LimitConfig = DEFAULT_LIMIT):
    """δ_u f(p) for scalar, vector and covector fields."""
    p = sys.domain.require(p)
    u = _direction(sys, u)
    base = np.asarray(f(p), dtype=float)
    value = limit_value(
        lambda t: (np.asarray(f(sys.step(p, t * u)), dtype=float) - base) / t,
        config,
        f"plain derivative of {f.name} at {p.tolist()}",
    )
    return float(value) if f.kind == "scalar" else as_coordinates(value)


def partial_derivative(sys: PointwiseSystem, f: Field, u, x, config: LimitConfig = DEFAULT_LIMIT):
    """∂_u f(x), the classical directional derivative."""
    x = sys.domain.require(x)
    u = _direction(sys, u)
    base = np.asarray(f(x), dtype=float)
    value = limit_value(
        lambda t: (np.asarray(f(_canonical(sys, x, t, u)), dtype=float) - base) / t,
        config,
        f"partial derivative of {f.name} at {x.tolist()}",
    )
    return float(value) if f.kind == "scalar" else as_coordinates(value)


def lie_derivative(sys: PointwiseSystem, u_field: Field, v_field: Field, x, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """𝓛_𝒖 𝒗(x) = ∂_𝒖 𝒗(x) − ∂_𝒗 𝒖(x); only the chart of sys is used."""
    x = sys.domain.require(x)
    return as_coordinates(
        partial_derivative(sys, v_field, u_field(x), x, config) - partial_derivative(sys, u_field, v_field(x), x, config)
    )


def torsion_via_derivatives(sys: PointwiseSystem, u_field: Field, v_field: Field, x, config: LimitConfig = DEFAULT_LIMIT) -> NDArray[np.float64]:
    """▽_𝒖 𝒗 − ▽_𝒗 𝒖 − 𝓛_𝒖 𝒗 at x; equals T_{𝒖(x)𝒗(x)}(x) for any extension fields."""
    x = sys.domain.require(x)
    a = vector_space_reduced_derivative(sys, v_field, u_field(x), x, config)
    b = vector_space_reduced_derivative(sys, u_field, v_field(x), x, config)
    return as_coordinates(a - b - lie_derivative(sys, u_field, v_field, x, config))


def decomposition_residual(
    sys: PointwiseSystem,
    v: Field,
    u,
    p,
    variant: str = "reduced",
    config: LimitConfig = DEFAULT_LIMIT,
) -> NDArray[np.float64]:
    """
    ∇_u 𝒗 − δ_u 𝒗 − Δ_u 𝒗(p) (variant "reduced"), or ▽_u 𝒗 − ∂_u 𝒗 − Δ_u 𝒗(p)
    (variant "vector_space"); Δ acts on the frozen value 𝒗(p).
    """
    p = sys.domain.require(p)
    delta = pseudo_derivative(sys, u, v(p), p, NUMERIC, config)
    if variant == "reduced":
        whole = reduced_derivative(sys, v, u, p, config)
        plain = plain_derivative(sys, v, u, p, config)
    elif variant == "vector_space":
        whole = vector_space_reduced_derivative(sys, v, u, p, config)
        plain = partial_derivative(sys, v, u, p, config)
    else:
        raise UsageError(f"unknown decomposition variant {variant!r}")
    return as_coordinates(whole - plain - delta)


def mixed_derivative(
    sys: PointwiseSystem,
    bilinear: BilinearMap,
    phi: Field,
    v: Field,
    u,
    p,
    on_vector_space: bool = False,
    config: LimitConfig = DEFAULT_LIMIT,
) -> NDArray[np.float64]:
    """
    ∇δ_u⟨⟨φ, 𝒗⟩⟩(p): only the second argument is transported back through the
    action field. With on_vector_space the fields are sampled at x + τu (▽∂).
    """
    p = sys.domain.require(p)
    u = _direction(sys, u)
    base = bilinear(phi(p), v(p))

    def quotient(t: float):
        frame_point = sys.step(p, t * u)
        q = _canonical(sys, p, t, u) if on_vector_space else frame_point
        moved = sys.unact(p, sys.act(frame_point, v(q)))
        return (bilinear(phi(q), moved) - base) / t

    return limit_value(quotient, config, f"mixed derivative at {p.tolist()}")


def covector_decomposition_residual(
    sys: PointwiseSystem,
    phi: Field,
    v,
    u,
    p,
    config: LimitConfig = DEFAULT_LIMIT,
) -> float:
    """
    |(δ_u φ)(v) − δ_u(φ(𝒗)) + φ(Δ_u v)| at p for the constant field 𝒗 ≡ v, where the
    scalar derivative δ_u(φ(𝒗)) is the mixed derivative of the pairing.
    """
    p = sys.domain.require(p)
    v = as_coordinates(v, dim=sys.dim, name="ground vector")
    constant = Field("vector", sys.dim, lambda x: v, "v")
    d_phi = plain_derivative(sys, phi, u, p, config)
    d_pairing = float(mixed_derivative(sys, BILINEAR_KINDS["pairing"], phi, constant, u, p, config=config)[0])
    delta = pseudo_derivative(sys, u, v, p, NUMERIC, config)
    return abs(float(d_phi @ v) - d_pairing + float(phi(p) @ delta))


@dataclass(frozen=True)
class ProductRuleResult:
    kind: str
    lhs: NDArray[np.float64]
    rhs: NDArray[np.float64]

    @property
    def residual(self) -> float:
        return max_norm(self.lhs - self.rhs)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "lhs": self.lhs.tolist(), "rhs": self.rhs.tolist(), "residual": self.residual}


PRODUCT_RULE_KINDS = ("pseudo", "coherent", "plain", "mixed", "mixed_pairing", "scalar_vector")


def _side(name: str, compute):
    try:
        return np.atleast_1d(np.asarray(compute(), dtype=float))
    except LimitFailure as e:
        raise LimitFailure(f"{name} side: {e}", diagnostics=e.diagnostics, side=name) from e


def product_rule(
    kind: str,
    sys: PointwiseSystem,
    first,
    second,
    u,
    p,
    bilinear: Optional[BilinearMap] = None,
    on_vector_space: bool = False,
    config: LimitConfig = DEFAULT_LIMIT,
) -> ProductRuleResult:
    """
    Evaluate both sides of a product rule, each by its own limit.

    kinds:
        pseudo         Δ_u⟨⟨v, w⟩⟩ = ⟨⟨v, Δ_u w⟩⟩ + ⟨⟨Δ_u v, w⟩⟩ for fixed vectors
        coherent       ∇_u⟨⟨𝒗, 𝒘⟩⟩ = ⟨⟨𝒗, ∇_u 𝒘⟩⟩ + ⟨⟨∇_u 𝒗, 𝒘⟩⟩
        plain          δ_u⟨⟨𝒗, 𝒘⟩⟩ = ⟨⟨𝒗, δ_u 𝒘⟩⟩ + ⟨⟨δ_u 𝒗, 𝒘⟩⟩
        mixed          ∇δ_u⟨⟨φ, 𝒗⟩⟩ = ⟨⟨φ, ∇_u 𝒗⟩⟩ + ⟨⟨δ_u φ, 𝒗⟩⟩
        mixed_pairing  δ_u(φ(𝒗)) = φ(∇_u 𝒗) + (δ_u φ)(𝒗)
        scalar_vector  ∇δ_u(φ𝒗) = φ∇_u 𝒗 + (δ_u φ)𝒗

    With on_vector_space the field-based kinds use ▽ and ∂ instead of ∇ and δ.
    """
    if kind not in PRODUCT_RULE_KINDS:
        raise UsageError(f"unknown product rule kind {kind!r}")
    p = sys.domain.require(p)
    u = _direction(sys, u)
    if kind == "mixed_pairing":
        bilinear = BILINEAR_KINDS["pairing"]
    elif kind == "scalar_vector":
        bilinear = BILINEAR_KINDS["scalar_vector"]
    elif bilinear is None:
        bilinear = BILINEAR_KINDS["inner"]

    if kind == "pseudo":
        v = as_coordinates(first, dim=sys.dim, name="v")
        w = as_coordinates(second, dim=sys.dim, name="w")
        base = bilinear(v, w)

        def quotient(t: float):
            q = sys.step(p, t * u)
            return (bilinear(sys.unact(p, sys.act(q, v)), sys.unact(p, sys.act(q, w))) - base) / t

        lhs = _side("lhs", lambda: limit_value(quotient, config, f"pseudo-derivative of a product at {p.tolist()}"))
        rhs = _side("rhs", lambda: bilinear(v, pseudo_derivative(sys, u, w, p, NUMERIC, config))
                    + bilinear(pseudo_derivative(sys, u, v, p, NUMERIC, config), w))
        return ProductRuleResult(kind, lhs, rhs)

    if on_vector_space:
        vector_derivative = vector_space_reduced_derivative
        scalar_derivative = partial_derivative
    else:
        vector_derivative = reduced_derivative
        scalar_derivative = plain_derivative

    if kind in ("coherent", "plain"):
        v, w = first, second
        base = bilinear(v(p), w(p))
        transport = kind == "coherent"
        derivative = vector_derivative if transport else scalar_derivative

        def quotient(t: float):
            frame_point = sys.step(p, t * u)
            q = _canonical(sys, p, t, u) if on_vector_space else frame_point
            a, b = v(q), w(q)
            if transport:
                a = sys.unact(p, sys.act(frame_point, a))
                b = sys.unact(p, sys.act(frame_point, b))
            return (bilinear(a, b) - base) / t

        lhs = _side("lhs", lambda: limit_value(quotient, config, f"{kind} derivative of a product at {p.tolist()}"))
        rhs = _side("rhs", lambda: bilinear(v(p), derivative(sys, w, u, p, config)) + bilinear(derivative(sys, v, u, p, config), w(p)))
        return ProductRuleResult(kind, lhs, rhs)

    phi, v = first, second
    lhs = _side("lhs", lambda: mixed_derivative(sys, bilinear, phi, v, u, p, on_vector_space, config))
    rhs = _side("rhs", lambda: bilinear(phi(p), vector_derivative(sys, v, u, p, config))
                + bilinear(scalar_derivative(sys, phi, u, p, config), v(p)))
    return ProductRuleResult(kind, lhs, rhs)


def product_rule_residual(kind: str, sys: PointwiseSystem, first, second, u, p, **kwargs) -> float:
    return product_rule(kind, sys, first, second, u, p, **kwargs).residual


def koszul_axiom_residuals(
    sys: PointwiseSystem,
    u_field: Field,
    u2_field: Field,
    v_field: Field,
    v2_field: Field,
    phi: Field,
    lam: float,
    p,
    config: LimitConfig = DEFAULT_LIMIT,
) -> Dict[str, float]:
    """
    Residual norms of the three connection axioms for ∇ at p, plus the constant-basis
    identity ∇_{e_i}e_j = Δ_{e_i}e_j (maximum over i, j).
    """
    p = sys.domain.require(p)
    a = phi(p) * u_field(p) + u2_field(p)
    combined_direction = reduced_derivative(sys, v_field, a, p, config)
    direction_terms = phi(p) * reduced_derivative(sys, v_field, u_field(p), p, config) + reduced_derivative(sys, v_field, u2_field(p), p, config)

    along = u_field(p)
    combined_argument = reduced_derivative(sys, v_field.scaled(lam) + v2_field, along, p, config)
    argument_terms = lam * reduced_derivative(sys, v_field, along, p, config) + reduced_derivative(sys, v2_field, along, p, config)

    product = reduced_derivative(sys, v_field.times(phi), along, p, config)
    leibniz_terms = phi(p) * reduced_derivative(sys, v_field, along, p, config) + plain_derivative(sys, phi, along, p, config) * v_field(p)

    basis = np.eye(sys.dim)
    constant_basis = 0.0
    for i in range(sys.dim):
        for j in range(sys.dim):
            e_j = Field("vector", sys.dim, lambda x, j=j: basis[j], f"e{j}")
            nabla = reduced_derivative(sys, e_j, basis[i], p, config)
            delta = pseudo_derivative(sys, basis[i], basis[j], p, NUMERIC, config)
            constant_basis = max(constant_basis, max_norm(nabla - delta))

    return {
        "function_linear_direction": max_norm(combined_direction - direction_terms),
        "additive_argument": max_norm(combined_argument - argument_terms),
        "leibniz": max_norm(product - leibniz_terms),
        "constant_basis": constant_basis,
    }


def transport_continuity(sys: PointwiseSystem, v: Field, u, p, taus: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)) -> List[float]:
    """|p⁻¹∘(p+τū)(𝒗(p+τū)) − 𝒗(p)| for decreasing τ; the sequence tends to zero."""
    p = sys.domain.require(p)
    u = _direction(sys, u)
    base = v(p)
    return [max_norm(_transported(sys, p, t, u, v) - base) for t in taus]
