import numpy as np
import pytest

from pacal.geometry import infinitesimal as inf
from pacal.geometry.gallery import build_kind
from pacal.utils.errors import UsageError

from .conftest import interior_points

ORACLE_KINDS = ["rotation2d", "scaling", "mixed_exp2d"]


@pytest.mark.parametrize("kind", ORACLE_KINDS)
def test_numeric_pseudo_derivative_matches_analytic(kind, rng):
    sys = build_kind(kind, 2)
    for p in interior_points(sys, rng, 25, margin=0.3):
        u, v = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        numeric = inf.pseudo_derivative(sys, u, v, p, inf.NUMERIC)
        analytic = inf.pseudo_derivative(sys, u, v, p, inf.ANALYTIC)
        assert np.max(np.abs(numeric - analytic)) <= 1e-8


def test_flat_space_has_no_curvature(flat):
    tensors = inf.curvature_tensors(flat, [0.5, -0.5])
    for name in ("Gamma", "T", "R", "C"):
        assert np.all(tensors[name] == 0.0)


def test_analytic_mode_needs_a_frame_derivative(kink):
    with pytest.raises(UsageError):
        inf.pseudo_derivative(kink, [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], inf.ANALYTIC)


def test_rotation_and_scaling_have_zero_riemann_curvature(rotation, scaling, rng):
    for sys in (rotation, scaling):
        for p in interior_points(sys, rng, 5, margin=0.3):
            u, v, w = rng.uniform(-1, 1, (3, 2))
            assert np.max(np.abs(inf.riemann(sys, u, v, w, p))) <= 1e-8


def test_torsion_matches_the_oracle(rotation, rng):
    for p in interior_points(rotation, rng, 5, margin=0.3):
        u, v = rng.uniform(-1, 1, (2, 2))
        assert inf.torsion(rotation, u, v, p) == pytest.approx(rotation.oracle.torsion(p, u, v), abs=1e-8)


def test_mixed_exp_commutator_at_origin(mixed):
    e1, e2 = np.eye(2)
    assert inf.riemann(mixed, e1, e2, e1, np.zeros(2)) == pytest.approx([0.0, 2.0], abs=1e-6)


def test_connection_map_reconstructs_the_pseudo_derivative(mixed, rng):
    p = np.array([0.3, -0.4])
    cmap = inf.connection_map(mixed, p)
    for _ in range(5):
        u, v = rng.uniform(-1, 1, (2, 2))
        assert cmap.apply(u, v) == pytest.approx(inf.pseudo_derivative(mixed, u, v, p), abs=1e-10)
    assert cmap.coefficients == pytest.approx(mixed.oracle.connection_coefficients(p), abs=1e-8)


def test_curvature_tensor_components(mixed):
    p = np.array([0.2, 0.1])
    t = inf.curvature_tensors(mixed, p)
    assert t["Gamma"].shape == (2, 2, 2)
    assert t["R"].shape == t["C"].shape == (2, 2, 2, 2)
    e = np.eye(2)
    for i in range(2):
        for j in range(2):
            assert t["T"][:, i, j] == pytest.approx(mixed.oracle.torsion(p, e[i], e[j]), abs=1e-8)
            for l in range(2):
                assert t["R"][:, i, j, l] == pytest.approx(mixed.oracle.riemann(p, e[i], e[j], e[l]), abs=1e-7)
    assert np.array_equal(t["C"], t["T"][..., None] + t["R"])


def test_second_pseudo_freezes_the_inner_vector(mixed, rng):
    p = np.array([-0.2, 0.3])
    u, v, w = rng.uniform(-1, 1, (3, 2))
    gu = mixed.oracle.connection(p, u)
    gv = mixed.oracle.connection(p, v)
    assert inf.second_pseudo(mixed, u, v, w, p) == pytest.approx(gu @ (gv @ w), abs=1e-8)


def test_cumulative_is_torsion_plus_riemann(mixed):
    p = np.array([0.1, 0.1])
    u, v, w = np.eye(2)[0], np.eye(2)[1], np.array([1.0, 1.0])
    c = inf.cumulative(mixed, u, v, w, p)
    assert c == pytest.approx(inf.torsion(mixed, u, v, p) + inf.riemann(mixed, u, v, w, p), abs=1e-12)


@pytest.mark.parametrize("kind", ORACLE_KINDS)
def test_scaled_discrete_riemann_approaches_riemann(kind, rng):
    sys = build_kind(kind, 2)
    for p in interior_points(sys, rng, 5, margin=0.3):
        u, v, w = rng.uniform(-1, 1, (3, 2))
        exact = sys.oracle.riemann(p, u, v, w)
        assert np.max(np.abs(inf.scaled_discrete_riemann(sys, u, v, w, p) - exact)) <= 1e-5


def test_raw_quotient_is_first_order(rotation):
    assert inf.observed_order(rotation, [1.0, 0.3], [0.2, 1.0], [0.3, 0.2]) >= 0.9


def test_probe_accepts_a_smooth_frame(rotation):
    report = inf.differentiability_probe(rotation, [0.3, 0.2], trials=3)
    assert report.differentiable
    assert report.failures == []


def test_probe_flags_the_kink(kink):
    report = inf.differentiability_probe(kink, [0.0, 0.5], trials=3)
    assert not report.differentiable
    assert any("two_sided" in f for f in report.failures)


def test_kink_is_smooth_away_from_the_bend(kink):
    report = inf.differentiability_probe(kink, [1.5, 0.0], trials=3)
    assert report.differentiable
    # Γ(u) = F⁻¹·∂F[Fu] = sign(p0)·(Fu)_0 / (1 + |p0|)·I.
    v = np.array([0.0, 1.0])
    assert inf.pseudo_derivative(kink, [1.0, 0.0], v, [1.5, 0.0]) == pytest.approx(v, abs=1e-8)


def test_field_pseudo_derivative_uses_values_at_the_point(mixed):
    from pacal.geometry.fields import constant_vector

    p = np.array([0.1, 0.2])
    u, v = np.array([1.0, 0.0]), np.array([0.5, 0.5])
    assert np.array_equal(
        inf.field_pseudo_derivative(mixed, constant_vector(u), constant_vector(v), p), inf.pseudo_derivative(mixed, u, v, p)
    )


def test_rotation_pseudo_derivative_at_the_origin():
    sys = build_kind("rotation2d", 2, omega=[1.0, 0.0])
    # Γ(u) = (ω·F(0)u)·J, so Δ_u v = J·(1, 0).
    assert inf.pseudo_derivative(sys, [1.0, 0.0], [1.0, 0.0], [0.0, 0.0]) == pytest.approx([0.0, 1.0], abs=1e-8)
    assert inf.pseudo_derivative(sys, [1.0, 0.0], [1.0, 0.0], [0.0, 0.0], inf.ANALYTIC) == pytest.approx([0.0, 1.0], abs=1e-12)


@pytest.mark.parametrize("v", [[1.0, 0.0], [0.3, -2.0], [-1.5, 0.25]])
def test_scaling_pseudo_derivative_along_lambda_is_the_vector(scaling, v):
    assert inf.pseudo_derivative(scaling, [1.0, 0.0], v, [0.0, 0.0]) == pytest.approx(v, abs=1e-8)
