import dataclasses
import math

import numpy as np
import pytest

from pacal.geometry import applications as app
from pacal.geometry.fields import Field, random_polynomial_field
from pacal.geometry.gallery import build_kind
from pacal.utils.errors import DomainExitError, NumericError, UsageError


def random_metric(rng, n=2):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    g = q @ np.diag(rng.uniform(0.5, 2.0, n) * rng.choice([-1.0, 1.0], n)) @ q.T
    return app.Metric(0.5 * (g + g.T))


def test_metric_validation():
    with pytest.raises(UsageError):
        app.Metric(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NumericError):
        app.Metric(np.array([[1.0, 0.0], [0.0, 0.0]]))
    assert app.Metric.identity(2).inner([1.0, 2.0], [3.0, 4.0]) == 11.0


@pytest.mark.parametrize("kind", ["flat", "rotation2d", "scaling", "mixed_exp2d", "polynomial"])
def test_gradient_defining_identity(kind, rng):
    sys = build_kind(kind, 2)
    for _ in range(3):
        phi = random_polynomial_field(2, rng, "scalar", degree=3, scale=0.5)
        x = sys.domain.sample(rng, 0.3)
        assert app.gradient_identity_residual(sys, phi, random_metric(rng), x, samples=10, seed=1) <= 1e-7


def test_gradient_is_unique(mixed, rng):
    phi = random_polynomial_field(2, rng, "scalar", degree=3, scale=0.5)
    metric = random_metric(rng)
    x = np.array([0.4, -0.1])
    assert app.gradient(mixed, phi, metric, x) == pytest.approx(app.gradient_normal_equations(mixed, phi, metric, x), abs=1e-9)


def test_gradient_with_the_euclidean_metric(flat):
    phi = Field("scalar", 1, lambda p: p[0] ** 2 + 3.0 * p[1], "phi")
    assert app.gradient(flat, phi, app.Metric.identity(2), [1.0, 0.0]) == pytest.approx([2.0, 3.0], abs=1e-9)


def test_metric_dimension_must_match(flat):
    phi = Field("scalar", 1, lambda p: p[0], "phi")
    with pytest.raises(UsageError):
        app.gradient(flat, phi, app.Metric.identity(3), [0.0, 0.0])


def test_flat_geodesic_is_a_straight_line(flat):
    trace = app.geodesic_trace(flat, [0.0, 0.0], [1.0, 2.0], 1.0, 64)
    line = np.outer(trace.params, [1.0, 2.0])
    assert np.max(np.abs(trace.points - line)) <= 1e-10
    assert trace.endpoint == pytest.approx([1.0, 2.0], abs=1e-12)
    assert trace.stats["steps"] == 64
    assert trace.stats["frame_evaluations"] == 4 * 64


def test_scaling_geodesic_endpoint(scaling):
    # γ0′ = exp(γ0) from 0 gives γ0(t) = −ln(1 − t).
    trace = app.geodesic_trace(scaling, [0.0, 0.0], [1.0, 0.0], 0.5, 2000)
    assert trace.endpoint == pytest.approx([math.log(2.0), 0.0], abs=1e-8)


def test_rk4_order(scaling):
    ends = [app.geodesic_trace(scaling, [0.0, 0.0], [1.0, 0.0], 0.5, m).endpoint[0] for m in (25, 50, 100, 200)]
    diffs = [abs(ends[k] - ends[k + 1]) for k in range(3)]
    orders = [math.log2(diffs[k] / diffs[k + 1]) for k in range(2)]
    assert min(orders) >= 3.7


@pytest.mark.parametrize("kind", ["rotation2d", "mixed_exp2d", "scaling"])
def test_geodesic_keeps_its_body_velocity(kind):
    sys = build_kind(kind, 2)
    v = np.array([0.4, 0.3])
    trace = app.geodesic_trace(sys, [0.0, 0.0], v, 1.0, 1000)
    assert app.geodesic_residual(sys, trace) <= 1e-6


def test_geodesic_domain_exit_reports_the_parameter(scaling):
    with pytest.raises(DomainExitError) as info:
        app.geodesic_trace(scaling, [0.0, 0.0], [1.0, 0.0], 1.0, 1000)
    # The analytic solution reaches x0 = 4 at t = 1 − e⁻⁴.
    assert info.value.parameter == pytest.approx(1.0 - math.exp(-4.0), abs=5e-3)


def test_geodesic_arguments(flat):
    with pytest.raises(UsageError):
        app.geodesic_trace(flat, [0.0, 0.0], [1.0, 0.0], 1.0, 0)
    with pytest.raises(UsageError):
        app.geodesic_trace(flat, [0.0, 0.0], [1.0, 0.0], -1.0, 10)
    with pytest.raises(UsageError):
        app.geodesic_residual(flat, app.geodesic_trace(flat, [0.0, 0.0], [1.0, 0.0], 1.0, 2))


def test_gradient_worked_examples(flat):
    square = Field("scalar", 1, lambda p: p[0] ** 2, "x0^2")
    x = [3.0, 0.0]
    assert app.gradient(flat, square, app.Metric.identity(2), x) == pytest.approx([6.0, 0.0], abs=1e-8)
    assert app.gradient(flat, square, app.Metric(np.diag([2.0, 1.0])), x) == pytest.approx([3.0, 0.0], abs=1e-8)


def test_geodesic_residual_detects_a_displaced_sample(scaling):
    trace = app.geodesic_trace(scaling, [0.0, 0.0], [0.4, 0.3], 1.0, 2000)
    assert app.geodesic_residual(scaling, trace) <= 1e-6
    points = np.array(trace.points)
    points[1000] += [1e-2, 0.0]
    assert app.geodesic_residual(scaling, dataclasses.replace(trace, points=points)) > 1e-3
