import numpy as np
import pytest

from pacal.geometry import fields
from pacal.geometry.gallery import build_kind
from pacal.schemas import FieldSpec
from pacal.utils.errors import DomainError, UsageError


def test_field_arithmetic():
    a = fields.constant_vector([1.0, 2.0])
    b = fields.identity_field(2)
    p = np.array([0.5, -1.0])
    assert (a + b)(p).tolist() == [1.5, 1.0]
    assert (a - b)(p).tolist() == [0.5, 3.0]
    assert a.scaled(2.0)(p).tolist() == [2.0, 4.0]
    assert a.times(fields.constant_scalar(3.0))(p).tolist() == [3.0, 6.0]


def test_pairing_and_kind_checks():
    phi = fields.constant_covector([1.0, -1.0])
    v = fields.linear_vector_field(np.eye(2), [1.0, 0.0])
    assert phi.pair(v)([2.0, 1.0]) == 2.0
    with pytest.raises(UsageError):
        v.pair(phi)
    with pytest.raises(UsageError):
        fields.constant_scalar(1.0) + v
    with pytest.raises(UsageError):
        v.times(v)


def test_shape_is_checked_on_evaluation():
    bad = fields.Field("vector", 3, lambda p: np.zeros(2), "bad")
    with pytest.raises(UsageError):
        bad([0.0, 0.0])


def test_polynomial_field():
    f = fields.polynomial_field(2, {(2, 0): [1.0, 0.0], (0, 1): [0.0, 3.0]})
    assert f([2.0, 5.0]).tolist() == [4.0, 15.0]
    s = fields.polynomial_field(2, {(1, 1): 2.0}, kind="scalar")
    assert s([3.0, 0.5]) == 3.0


def test_random_polynomial_field_is_seeded():
    a = fields.random_polynomial_field(3, np.random.default_rng(9), "covector")
    b = fields.random_polynomial_field(3, np.random.default_rng(9), "covector")
    p = np.array([0.1, 0.2, 0.3])
    assert np.array_equal(a(p), b(p))
    assert a.kind == "covector"


def test_field_from_configured_expressions():
    spec = FieldSpec(kind="vector", expr=["x0^2 - x1", "sin(x0) * exp(x1)"])
    f = fields.from_spec(spec, 2, "w")
    assert f([2.0, 0.0]) == pytest.approx([4.0, np.sin(2.0)])
    scalar = fields.from_spec(FieldSpec(kind="scalar", expr="cos(x1) + 1/2"), 2)
    assert scalar([0.0, 0.0]) == 1.5


def test_component_count_must_match():
    with pytest.raises(UsageError):
        fields.from_spec(FieldSpec(kind="vector", expr="x0"), 2)


def test_point_field_stays_in_its_target():
    target = build_kind("flat", 2)
    phi = fields.PointField(target, lambda p: 2.0 * p)
    assert phi([1.0, 1.0]).tolist() == [2.0, 2.0]
    with pytest.raises(DomainError):
        phi([2.0, 0.0])


def test_bilinear_maps():
    x = np.array([1.0, 2.0, 3.0])
    y = np.array([0.0, 1.0, -1.0])
    k = fields.BILINEAR_KINDS
    assert k["inner"](x, y).tolist() == [-1.0]
    assert k["cross"](x, y).tolist() == np.cross(x, y).tolist()
    assert k["tensor"](x, y).tolist() == np.outer(x, y).ravel().tolist()
    assert k["exterior"](x, y).tolist() == [1.0, -1.0, -5.0]
    assert k["geometric"](x, y).tolist() == [-1.0, 1.0, -1.0, -5.0]
    assert k["scalar_vector"](2.0, y).tolist() == [0.0, 2.0, -2.0]
    weighted = fields.BilinearMap("inner", metric=np.diag([1.0, 2.0, 3.0]))
    assert weighted(x, y).tolist() == [4.0 - 9.0]


def test_cross_product_needs_three_dimensions():
    with pytest.raises(UsageError):
        fields.BILINEAR_KINDS["cross"]([1.0, 0.0], [0.0, 1.0])
