import numpy as np
import pytest

from pacal.geometry import derivatives as d
from pacal.geometry import infinitesimal as inf
from pacal.geometry.affine import relative_residual
from pacal.geometry.fields import (
    BILINEAR_KINDS,
    Field,
    PointField,
    basis_field,
    constant_vector,
    identity_field,
    random_polynomial_field,
)
from pacal.geometry.gallery import build_kind
from pacal.utils.errors import UsageError

from .conftest import interior_points

KINDS = ["flat", "rotation2d", "scaling", "mixed_exp2d", "polynomial"]


def vector_field(rng, n=2):
    return random_polynomial_field(n, rng, "vector", degree=2, scale=0.5)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("variant", ["reduced", "vector_space"])
def test_reduced_derivative_decomposes(kind, variant, rng):
    sys = build_kind(kind, 2)
    for x in interior_points(sys, rng, 10, margin=0.3):
        residual = d.decomposition_residual(sys, vector_field(rng), rng.uniform(-1, 1, 2), x, variant)
        assert np.max(np.abs(residual)) <= 1e-7


def test_unknown_decomposition_variant(mixed):
    with pytest.raises(UsageError):
        d.decomposition_residual(mixed, identity_field(2), [1.0, 0.0], [0.0, 0.0], "complete")


@pytest.mark.parametrize("kind", KINDS)
def test_covector_decomposition(kind, rng):
    sys = build_kind(kind, 2)
    for x in interior_points(sys, rng, 10, margin=0.3):
        phi = random_polynomial_field(2, rng, "covector", degree=2, scale=0.5)
        assert d.covector_decomposition_residual(sys, phi, rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2), x) <= 1e-7


def test_constant_basis_field_reduced_derivative_is_pseudo_derivative(mixed):
    p = np.array([0.2, -0.3])
    e = np.eye(2)
    for i in range(2):
        for j in range(2):
            assert d.reduced_derivative(mixed, basis_field(2, j), e[i], p) == pytest.approx(
                inf.pseudo_derivative(mixed, e[i], e[j], p), abs=1e-8
            )


def test_plain_derivative_on_flat_space_is_directional_derivative(flat):
    f = Field("scalar", 1, lambda p: p[0] ** 2 * p[1], "f")
    # Flat frame: p + τū = p + τu.
    assert d.plain_derivative(flat, f, [1.0, 2.0], [1.0, 1.0]) == pytest.approx(2.0 + 2.0, abs=1e-9)
    assert d.partial_derivative(flat, f, [1.0, 2.0], [1.0, 1.0]) == pytest.approx(4.0, abs=1e-9)


def test_plain_derivative_follows_the_frame(scaling):
    f = Field("scalar", 1, lambda p: p[0], "x0")
    p = np.array([np.log(2.0), 0.0])
    # ū = F(p)u = 2u.
    assert d.plain_derivative(scaling, f, [1.0, 0.0], p) == pytest.approx(2.0, abs=1e-9)
    assert d.partial_derivative(scaling, f, [1.0, 0.0], p) == pytest.approx(1.0, abs=1e-9)


PAIR_KINDS = ["inner", "tensor", "exterior", "geometric"]


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("rule", ["pseudo", "coherent", "plain", "mixed", "mixed_pairing", "scalar_vector"])
def test_product_rules(kind, rule, rng):
    sys = build_kind(kind, 2)
    for k, x in enumerate(interior_points(sys, rng, 4, margin=0.3)):
        u = rng.uniform(-1, 1, 2)
        bilinear = BILINEAR_KINDS[PAIR_KINDS[k % len(PAIR_KINDS)]]
        if rule == "pseudo":
            first, second = rng.uniform(-1, 1, (2, 2))
        elif rule in ("coherent", "plain"):
            first, second = vector_field(rng), vector_field(rng)
        elif rule == "scalar_vector":
            first, second = random_polynomial_field(2, rng, "scalar", 2, 0.5), vector_field(rng)
        else:
            first, second = random_polynomial_field(2, rng, "covector", 2, 0.5), vector_field(rng)
        for on_vector_space in ((False,) if rule == "pseudo" else (False, True)):
            result = d.product_rule(rule, sys, first, second, u, x, bilinear=bilinear, on_vector_space=on_vector_space)
            assert relative_residual(result.lhs, result.rhs) <= 1e-6, result.to_dict()


def test_cross_product_rule_in_three_dimensions(rng):
    sys = build_kind("scaling", 3)
    x = np.array([0.1, -0.2, 0.3])
    result = d.product_rule("coherent", sys, vector_field(rng, 3), vector_field(rng, 3), rng.uniform(-1, 1, 3), x, bilinear=BILINEAR_KINDS["cross"])
    assert result.residual <= 1e-6


def test_unknown_product_rule(mixed):
    with pytest.raises(UsageError):
        d.product_rule("quotient", mixed, identity_field(2), identity_field(2), [1.0, 0.0], [0.0, 0.0])


@pytest.mark.parametrize("kind", ["rotation2d", "scaling", "mixed_exp2d", "polynomial"])
def test_torsion_from_derivatives(kind, rng):
    sys = build_kind(kind, 2)
    for x in interior_points(sys, rng, 5, margin=0.3):
        uf, vf = vector_field(rng), vector_field(rng)
        expected = inf.torsion(sys, uf(x), vf(x), x)
        assert np.max(np.abs(d.torsion_via_derivatives(sys, uf, vf, x) - expected)) <= 1e-7


def test_torsion_from_derivatives_ignores_the_extension(mixed, rng):
    x = np.array([0.2, 0.1])
    uf, vf = vector_field(rng), vector_field(rng)
    a = rng.uniform(-0.5, 0.5, (2, 2))
    uf2 = uf + Field("vector", 2, lambda y: a @ (y - x), "shift")
    first = d.torsion_via_derivatives(mixed, uf, vf, x)
    second = d.torsion_via_derivatives(mixed, uf2, vf, x)
    assert np.max(np.abs(first - second)) <= 1e-6


def test_lie_derivative_is_antisymmetric(mixed, rng):
    x = np.array([0.3, 0.3])
    uf, vf = vector_field(rng), vector_field(rng)
    assert np.all(d.lie_derivative(mixed, uf, vf, x) + d.lie_derivative(mixed, vf, uf, x) == 0.0)


def test_lie_derivative_of_coordinate_fields(flat):
    # 𝒖 = identity and 𝒗 constant give 𝓛_𝒖𝒗 = −∂_𝒗 𝒖 = −v.
    v = np.array([1.0, 2.0])
    assert d.lie_derivative(flat, identity_field(2), constant_vector(v), [0.5, 0.5]) == pytest.approx(-v, abs=1e-9)


@pytest.mark.parametrize("kind", ["rotation2d", "mixed_exp2d", "polynomial"])
def test_koszul_axioms(kind, rng):
    sys = build_kind(kind, 2)
    x = sys.domain.sample(rng, 0.3)
    phi = random_polynomial_field(2, rng, "scalar", 2, 0.5)
    report = d.koszul_axiom_residuals(sys, vector_field(rng), vector_field(rng), vector_field(rng), vector_field(rng), phi, 1.7, x)
    assert report["function_linear_direction"] <= 1e-7
    assert report["additive_argument"] <= 1e-7
    assert report["leibniz"] <= 1e-7
    assert report["constant_basis"] <= 1e-8


def test_transport_continuity(rotation, rng):
    residuals = d.transport_continuity(rotation, vector_field(rng), [1.0, 0.5], [0.2, 0.2])
    assert residuals[-1] < 1e-5
    assert residuals[-1] < residuals[0]


def test_identity_point_field_derivatives(mixed):
    phi = PointField(mixed, lambda p: p, "id")
    u = np.array([0.3, -0.7])
    p = np.array([0.1, 0.2])
    assert d.point_field_complete_derivative(mixed, mixed, phi, u, p) == pytest.approx(u, abs=1e-9)
    assert d.point_field_reduced_derivative(mixed, phi, u, p) == pytest.approx(u, abs=1e-9)


def test_reduced_point_derivative_needs_a_contained_target(mixed):
    wide = build_kind("flat", 2, domain={"min": [-5, -5], "max": [5, 5]})
    phi = PointField(wide, lambda p: p, "id")
    with pytest.raises(UsageError):
        d.point_field_reduced_derivative(mixed, phi, [1.0, 0.0], [0.0, 0.0])


def test_complete_vector_derivative_into_a_flat_target(mixed, flat, rng):
    v = random_polynomial_field(2, rng, "vector", degree=2, scale=0.2)
    u = np.array([0.5, 0.5])
    p = np.array([0.1, -0.1])
    complete = d.vector_field_complete_derivative(mixed, flat, v, u, p)
    assert complete == pytest.approx(d.plain_derivative(mixed, v, u, p), abs=1e-8)


def test_reduced_derivative_alias():
    assert d.vector_field_reduced_derivative is d.reduced_derivative


def test_plain_derivative_worked_examples(flat):
    square = Field("scalar", 1, lambda p: p[0] ** 2, "x0^2")
    assert d.plain_derivative(flat, square, [1.0, 0.0], [3.0, 0.0]) == pytest.approx(6.0, abs=1e-8)
    swap = Field("vector", 2, lambda p: np.array([p[1], p[0]]), "swap")
    assert d.plain_derivative(flat, swap, [1.0, 0.0], [0.5, -1.0]) == pytest.approx([0.0, 1.0], abs=1e-9)
