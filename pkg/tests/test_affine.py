import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pacal.geometry import affine
from pacal.utils.errors import NumericError, UsageError

coordinate = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


def points(dim):
    return st.lists(coordinate, min_size=dim, max_size=dim)


@st.composite
def point_tuples(draw, count):
    dim = draw(st.integers(min_value=1, max_value=4))
    return [draw(points(dim)) for _ in range(count)]


@given(point_tuples(3))
@settings(max_examples=300)
def test_weyl_residual_is_exactly_zero(pts):
    assert np.all(affine.weyl_residual(*pts) == 0.0)


@given(point_tuples(4))
@settings(max_examples=300)
def test_four_point_residual_is_exactly_zero(pts):
    assert np.all(affine.four_point_residual(*pts) == 0.0)


def test_translate_and_between_are_inverse_on_small_integers():
    p = [1.0, -2.0, 3.0]
    q = [4.0, 0.5, -1.0]
    t = affine.between(q, p)
    assert t.tolist() == [3.0, 2.5, -4.0]
    assert affine.translate(p, t).tolist() == q


def test_coordinates_are_read_only():
    a = affine.as_coordinates([1.0, 2.0])
    with pytest.raises(ValueError):
        a[0] = 5.0


@pytest.mark.parametrize("bad", [[], [[1.0, 2.0]], 3.0])
def test_as_coordinates_rejects_non_tuples(bad):
    with pytest.raises(UsageError):
        affine.as_coordinates(bad)


def test_dimension_mismatch_is_usage_error():
    with pytest.raises(UsageError):
        affine.between([0.0, 0.0], [1.0, 2.0, 3.0])


def test_solve_action_singular():
    with pytest.raises(NumericError):
        affine.solve_action(np.zeros((2, 2)), [1.0, 0.0])


def test_vectorize_at_inverts_the_translation_from_q_to_p():
    action = np.diag([2.0, 4.0])
    v = affine.vectorize_at([3.0, 5.0], [1.0, 1.0], action)
    assert v.tolist() == [1.0, 1.0]


def test_relative_residual_scales_by_magnitude():
    assert affine.relative_residual([1e6], [1e6 + 1.0]) == pytest.approx(1.0 / (1e6 + 1.0))
    assert affine.relative_residual([0.5], [0.25]) == 0.25
    assert affine.relative_residual([0.5], [0.25], scale=10.0) == 0.025


def test_interval_translation():
    assert affine.Interval([1.0, 1.0], [3.0, 0.0]).translation().tolist() == [2.0, -1.0]
    assert affine.compose([1.0], [2.0]).tolist() == [3.0]
    assert affine.scale(2.0, [1.5]).tolist() == [3.0]
    assert affine.zero(3).tolist() == [0.0, 0.0, 0.0]


def test_residuals_are_assembled_from_between(monkeypatch):
    exact = affine.between
    monkeypatch.setattr(affine, "between", lambda q, p: exact(q, p) + 1.0)
    assert affine.weyl_residual([0.0], [1.0], [2.0]).tolist() == [1.0]
    monkeypatch.setattr(affine, "between", lambda q, p: exact(q, p) + np.asarray(q))
    assert affine.four_point_residual([0.0], [1.0], [2.0], [5.0]).tolist() == [-4.0]


def test_weyl_residual_cancels_rounded_differences():
    # None of these differences is representable exactly.
    assert affine.weyl_residual([0.1, 1e16], [0.7, -3.3], [1e-17, 2.0 / 3.0]).tolist() == [0.0, 0.0]
