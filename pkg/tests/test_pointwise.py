import numpy as np
import pytest

from pacal.geometry.pointwise import BoxDomain, FrameField, PointwiseSystem
from pacal.utils.errors import DomainError, DomainExitError, NumericError, UsageError


def test_box_domain_contains_and_require():
    box = BoxDomain.cube(2, -1.0, 1.0)
    assert box.contains([1.0, -1.0])
    assert not box.contains([1.0000001, 0.0])
    with pytest.raises(DomainError):
        box.require([2.0, 0.0])


def test_box_domain_rejects_empty_box():
    with pytest.raises(UsageError):
        BoxDomain(np.array([0.0, 1.0]), np.array([1.0, 0.0]))


def test_grid_is_lexicographic_with_last_axis_fastest():
    box = BoxDomain.cube(2, 0.0, 1.0)
    grid = box.grid([2, 3], margin=0.0)
    assert [p.tolist() for p in grid] == [
        [0.0, 0.0], [0.0, 0.5], [0.0, 1.0],
        [1.0, 0.0], [1.0, 0.5], [1.0, 1.0],
    ]


def test_single_sample_sits_at_the_midpoint():
    box = BoxDomain(np.array([0.0, -2.0]), np.array([1.0, 2.0]))
    assert [p.tolist() for p in box.grid([1, 1])] == [[0.5, 0.0]]


def test_grid_count_must_be_positive():
    with pytest.raises(UsageError):
        BoxDomain.cube(1, 0.0, 1.0).grid([0])


def test_singular_frame_is_numeric_error():
    frame = FrameField(2, lambda p: np.array([[1.0, 0.0], [0.0, 1e-12]]))
    with pytest.raises(NumericError):
        frame.matrix([0.0, 0.0])


def test_frame_shape_is_checked():
    frame = FrameField(2, lambda p: np.eye(3))
    with pytest.raises(UsageError):
        frame.matrix([0.0, 0.0])


def test_act_unact_and_step(rotation):
    p = np.array([0.3, -0.2])
    v = np.array([1.0, 2.0])
    assert rotation.unact(p, rotation.act(p, v)) == pytest.approx(v, abs=1e-15)
    q = rotation.step(p, v)
    assert q == pytest.approx(p + rotation.frame_at(p) @ v, abs=1e-15)


def test_step_out_of_domain_carries_the_point(flat):
    with pytest.raises(DomainExitError) as info:
        flat.step([3.5, 0.0], [1.0, 0.0], step_index=7)
    assert info.value.step_index == 7
    assert info.value.point == (4.5, 0.0)


def test_frame_and_domain_dimensions_must_agree():
    with pytest.raises(UsageError):
        PointwiseSystem(BoxDomain.cube(3, 0.0, 1.0), FrameField(2, lambda p: np.eye(2)))


def test_flat_space_is_affine_flat(flat):
    report = flat.is_affine_flat(sample_count=100, seed=0)
    assert report.flat
    assert report.max_residual == 0.0
    assert report.samples == 100


def test_rotation_space_is_not_flat_and_gives_a_witness(rotation):
    report = rotation.is_affine_flat(sample_count=50, seed=0)
    assert not report.flat
    assert report.witness is not None
    w = report.witness
    residual = rotation.flatness_residual(w["p"], w["u"], w["v"])
    assert np.max(np.abs(residual)) == pytest.approx(report.max_residual)


def test_flatness_report_is_deterministic(scaling):
    assert scaling.is_affine_flat(20, seed=5).to_dict() == scaling.is_affine_flat(20, seed=5).to_dict()


def test_frame_derivative_falls_back_to_finite_differences(kink):
    # F = (1 + |p0|)·I, so ∂F(p)[w] = sign(p0)·w0·I away from the bend.
    d = kink.frame_directional_derivative([1.0, 0.5], [2.0, 1.0])
    assert d == pytest.approx(2.0 * np.eye(2), abs=1e-8)
    d = kink.frame_directional_derivative([-1.0, 0.5], [2.0, 1.0])
    assert d == pytest.approx(-2.0 * np.eye(2), abs=1e-8)


def test_analytic_frame_derivative(rotation):
    p = np.array([0.2, 0.4])
    w = np.array([1.0, -1.0])
    h = 1e-6
    central = (rotation.frame_at(p + h * w) - rotation.frame_at(p - h * w)) / (2 * h)
    assert rotation.frame_directional_derivative(p, w) == pytest.approx(central, abs=1e-8)
