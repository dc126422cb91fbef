"""
Executable identity suites.

Each check draws seeded random inputs on a gallery space, evaluates an identity
residual and compares the worst residual with the check's tolerance. Failures are
report content; nothing here raises for a failed identity.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .geometry import affine, applications, derivatives, discrete, infinitesimal
from .geometry.fields import BILINEAR_KINDS, Field, from_spec, random_polynomial_field
from .geometry.gallery import build
from .geometry.pointwise import PointwiseSystem
from .schemas import RunConfig
from .utils.errors import DomainExitError, PacalError, UsageError
from .utils.limits import LimitConfig, max_norm

logger = logging.getLogger(__name__)

SUITES = ("discrete", "infinitesimal", "derivatives", "applications")


@dataclass
class Check:
    name: str
    tolerance: float
    max_residual: float = 0.0
    samples: int = 0
    failures: List[str] = field(default_factory=list)
    skipped: Optional[str] = None

    def record(self, residual: float):
        self.samples += 1
        if not math.isfinite(residual):
            self.failures.append(f"sample {self.samples}: non-finite residual")
            self.max_residual = math.inf
            return
        self.max_residual = max(self.max_residual, float(residual))

    @property
    def passed(self) -> bool:
        if self.skipped:
            return True
        return not self.failures and self.max_residual <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "name": self.name,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "samples": self.samples,
            "passed": self.passed,
        }
        if self.failures:
            out["failures"] = self.failures[:5]
        if self.skipped:
            out["skipped"] = self.skipped
        return out


@dataclass
class Context:
    sys: PointwiseSystem
    kind: str
    limit: LimitConfig
    samples: int
    seed: int
    fields: Dict[str, Field]

    @property
    def reach(self) -> float:
        # Step lengths stay small relative to the chart.
        return 0.05 * float(np.min(self.sys.domain.width))

    def rng(self, name: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, sum(ord(c) * (i + 1) for i, c in enumerate(name))])


def _run(ctx: Context, check: Check, sample: Callable[[np.random.Generator], float], count: Optional[int] = None, retries: int = 20):
    """Evaluate `count` samples; inputs whose steps leave the chart are redrawn."""
    rng = ctx.rng(check.name)
    for k in range(ctx.samples if count is None else count):
        for _ in range(retries):
            try:
                check.record(sample(rng))
                break
            except DomainExitError:
                continue
            except PacalError as e:
                check.samples += 1
                check.failures.append(f"sample {k}: {type(e).__name__}: {e}")
                break
        else:
            check.failures.append(f"sample {k}: no inputs stayed inside the domain")
    if not check.passed:
        logger.warning("check %s failed on %s (max residual %.3e)", check.name, ctx.kind, check.max_residual)
    return check


def _point(ctx: Context, rng, margin: float = 0.25):
    return ctx.sys.domain.sample(rng, margin)


def _vector(ctx: Context, rng, scale: Optional[float] = None):
    return rng.uniform(-1.0, 1.0, ctx.sys.dim) * (ctx.reach if scale is None else scale)


def _points_scale(*points) -> float:
    return max(max_norm(p) for p in points)


def _frame_is_constant(sys: PointwiseSystem) -> bool:
    grid = sys.domain.grid([3] * sys.dim, margin=0.0) if sys.dim <= 4 else [sys.domain.min, sys.domain.max]
    first = sys.frame.matrix(grid[0])
    return all(np.array_equal(sys.frame.matrix(p), first) for p in grid[1:])


def discrete_checks(ctx: Context) -> List[Check]:
    s = ctx.sys
    checks = []

    def weyl(rng):
        return max_norm(affine.weyl_residual(_point(ctx, rng, 0), _point(ctx, rng, 0), _point(ctx, rng, 0)))

    def four_point(rng):
        return max_norm(affine.four_point_residual(*(_point(ctx, rng, 0) for _ in range(4))))

    def dg(rng):
        p = _point(ctx, rng)
        composed, expanded, scale = discrete.dissociation2_forms(s, _vector(ctx, rng), _vector(ctx, rng), _vector(ctx, rng, 1.0), p)
        return affine.relative_residual(composed, expanded, scale)

    def torsion_bracket(rng):
        p, u, v = _point(ctx, rng), _vector(ctx, rng), _vector(ctx, rng)
        bracket = discrete.displacement_bracket(s, u, v, p)
        scale = _points_scale(discrete.displacement(s, u, v, p), discrete.displacement(s, v, u, p))
        return affine.relative_residual(discrete.discrete_torsion(s, u, v, p, vec=True), bracket, scale)

    def riemann_bracket(rng):
        p, u, v, w = _point(ctx, rng), _vector(ctx, rng), _vector(ctx, rng), _vector(ctx, rng)
        rhs = discrete.displacement2_bracket(s, u, v, w, p) - discrete.displacement_bracket(s, u, v, p)
        scale = _points_scale(discrete.displacement2(s, u, v, w, p), discrete.displacement2(s, v, u, w, p))
        return affine.relative_residual(discrete.discrete_riemann(s, u, v, w, p, vec=True, check=False), rhs, scale)

    def cumulative_bracket(rng):
        p, u, v, w = _point(ctx, rng), _vector(ctx, rng), _vector(ctx, rng), _vector(ctx, rng)
        scale = _points_scale(discrete.displacement2(s, u, v, w, p), discrete.displacement2(s, v, u, w, p))
        return affine.relative_residual(
            discrete.discrete_cumulative(s, u, v, w, p, vec=True, check=False), discrete.displacement2_bracket(s, u, v, w, p), scale
        )

    def riemann_forms(rng):
        d_form, g_form, scale = discrete.discrete_riemann_forms(s, _vector(ctx, rng), _vector(ctx, rng), _vector(ctx, rng, 1.0), _point(ctx, rng))
        return affine.relative_residual(d_form, g_form, scale)

    def antisymmetry(rng):
        p, u, v, w = _point(ctx, rng), _vector(ctx, rng), _vector(ctx, rng), _vector(ctx, rng, 1.0)
        t = discrete.discrete_torsion(s, u, v, p) + discrete.discrete_torsion(s, v, u, p)
        r = discrete.discrete_riemann(s, u, v, w, p, check=False) + discrete.discrete_riemann(s, v, u, w, p, check=False)
        c = discrete.discrete_cumulative(s, u, v, w, p, check=False) + discrete.discrete_cumulative(s, v, u, w, p, check=False)
        return max(max_norm(t), max_norm(r), max_norm(c))

    def linearity(rng):
        p, u, v = _point(ctx, rng), _vector(ctx, rng), _vector(ctx, rng)
        x, y = _vector(ctx, rng, 1.0), _vector(ctx, rng, 1.0)
        a, b = rng.uniform(-2.0, 2.0, 2)
        worst = 0.0
        for op in (
            lambda z: discrete.deviation(s, u, z, p),
            lambda z: discrete.dissociation(s, u, z, p),
            lambda z: discrete.deviation2(s, u, v, z, p),
            lambda z: discrete.dissociation2(s, u, v, z, p, check=False),
        ):
            combined = op(a * x + b * y)
            parts = a * op(x) + b * op(y)
            worst = max(worst, affine.relative_residual(combined, parts, max(max_norm(x), max_norm(y)) * (abs(a) + abs(b))))
        return worst

    def flatness(rng):
        report = s.is_affine_flat(sample_count=max(ctx.samples, 10), seed=int(rng.integers(2**31)))
        return 0.0 if report.flat == _frame_is_constant(s) else 1.0

    for name, tol, fn in (
        ("weyl_residual", 0.0, weyl),
        ("four_point_residual", 0.0, four_point),
        ("dissociation_composition", 1e-12, dg),
        ("torsion_bracket", 1e-12, torsion_bracket),
        ("riemann_bracket", 1e-12, riemann_bracket),
        ("cumulative_bracket", 1e-12, cumulative_bracket),
        ("riemann_forms", 1e-12, riemann_forms),
        ("antisymmetry", 0.0, antisymmetry),
        ("trailing_linearity", 1e-12, linearity),
    ):
        checks.append(_run(ctx, Check(name, tol), fn))
    checks.append(_run(ctx, Check("flatness_equivalence", 0.0), flatness, count=1))
    return checks


def infinitesimal_checks(ctx: Context) -> List[Check]:
    s, cfg = ctx.sys, ctx.limit
    oracle = s.oracle
    checks = []

    def unit(rng):
        return rng.uniform(-1.0, 1.0, s.dim)

    def analytic_vs_numeric(rng):
        p, u, v = _point(ctx, rng, 0.2), unit(rng), unit(rng)
        return max_norm(
            infinitesimal.pseudo_derivative(s, u, v, p, infinitesimal.NUMERIC, cfg)
            - infinitesimal.pseudo_derivative(s, u, v, p, infinitesimal.ANALYTIC)
        )

    def reconstruction(rng):
        p = _point(ctx, rng, 0.2)
        cmap = infinitesimal.connection_map(s, p, config=cfg)
        u, v = unit(rng), unit(rng)
        return affine.relative_residual(cmap.apply(u, v), infinitesimal.pseudo_derivative(s, u, v, p, config=cfg))

    def oracle_connection(rng):
        p = _point(ctx, rng, 0.2)
        return max_norm(infinitesimal.connection_map(s, p, config=cfg).coefficients - oracle.connection_coefficients(p))

    def oracle_torsion(rng):
        p, u, v = _point(ctx, rng, 0.2), unit(rng), unit(rng)
        return max_norm(infinitesimal.torsion(s, u, v, p, config=cfg) - oracle.torsion(p, u, v))

    def oracle_riemann(rng):
        p, u, v, w = _point(ctx, rng, 0.2), unit(rng), unit(rng), unit(rng)
        return max_norm(infinitesimal.riemann(s, u, v, w, p, config=cfg) - oracle.riemann(p, u, v, w))

    def second_pseudo(rng):
        p, u, v, w = _point(ctx, rng, 0.2), unit(rng), unit(rng), unit(rng)
        cmap = infinitesimal.connection_map(s, p, config=cfg)
        return max_norm(infinitesimal.second_pseudo(s, u, v, w, p, config=cfg) - cmap.matrix_of(u) @ (cmap.matrix_of(v) @ w))

    def antisymmetry(rng):
        p, u, v, w = _point(ctx, rng, 0.2), unit(rng), unit(rng), unit(rng)
        t = infinitesimal.torsion(s, u, v, p, config=cfg) + infinitesimal.torsion(s, v, u, p, config=cfg)
        r = infinitesimal.riemann(s, u, v, w, p, config=cfg) + infinitesimal.riemann(s, v, u, w, p, config=cfg)
        return max(max_norm(t), max_norm(r))

    def multilinearity(rng):
        p, u, u2, v, w = _point(ctx, rng, 0.2), unit(rng), unit(rng), unit(rng), unit(rng)
        a, b = rng.uniform(-2.0, 2.0, 2)
        mixed = a * u + b * u2
        delta = infinitesimal.pseudo_derivative(s, mixed, v, p, config=cfg)
        parts = a * infinitesimal.pseudo_derivative(s, u, v, p, config=cfg) + b * infinitesimal.pseudo_derivative(s, u2, v, p, config=cfg)
        t = infinitesimal.torsion(s, mixed, v, p, config=cfg)
        t_parts = a * infinitesimal.torsion(s, u, v, p, config=cfg) + b * infinitesimal.torsion(s, u2, v, p, config=cfg)
        return max(affine.relative_residual(delta, parts), affine.relative_residual(t, t_parts))

    def probe(rng):
        # The chart midpoint is where the kink gallery frame bends.
        p = 0.5 * (s.domain.min + s.domain.max)
        report = infinitesimal.differentiability_probe(s, p, trials=3, seed=int(rng.integers(2**31)), config=cfg)
        if not report.differentiable:
            check_probe.failures.append(f"at {report.point}: {report.failures[0]}")
        finite = [getattr(t, k) for t in report.trials for k in ("additivity", "homogeneity", "two_sided") if math.isfinite(getattr(t, k))]
        return max(finite, default=0.0)

    def bridge(rng):
        p, u, v, w = _point(ctx, rng, 0.2), unit(rng), unit(rng), unit(rng)
        exact = oracle.riemann(p, u, v, w) if oracle else infinitesimal.riemann(s, u, v, w, p, config=cfg)
        return max_norm(infinitesimal.scaled_discrete_riemann(s, u, v, w, p, tau=1e-4) - exact)

    def order_deficit(rng):
        p, u, v = _point(ctx, rng, 0.2), unit(rng), unit(rng)
        reference = (
            oracle.connection(p, u) @ v if oracle else infinitesimal.pseudo_derivative(s, u, v, p, config=cfg)
        )
        if max_norm(reference) == 0.0 and max_norm(discrete.dissociation(s, 1e-2 * u, v, p)) == 0.0:
            return 0.0
        return max(0.0, 1.0 - infinitesimal.observed_order(s, u, v, p, reference=reference))

    plan = [
        ("pseudo_analytic_vs_numeric", 1e-8, analytic_vs_numeric, None if s.frame.has_derivative else "frame has no analytic derivative"),
        ("connection_reconstruction", 1e-10, reconstruction, None),
        ("oracle_connection", 1e-8, oracle_connection, None if oracle else "no closed-form oracle"),
        ("oracle_torsion", 1e-8, oracle_torsion, None if oracle else "no closed-form oracle"),
        ("oracle_riemann", 1e-6, oracle_riemann, None if oracle else "no closed-form oracle"),
        ("second_pseudo_commutator", 1e-8, second_pseudo, None),
        ("antisymmetry", 0.0, antisymmetry, None),
        ("multilinearity", 1e-9, multilinearity, None),
        ("scaled_discrete_bridge", 1e-5, bridge, None),
        ("quotient_order_deficit", 0.1, order_deficit, None),
    ]
    for name, tol, fn, skip in plan:
        check = Check(name, tol)
        if skip:
            check.skipped = skip
            checks.append(check)
            continue
        checks.append(_run(ctx, check, fn))
    check_probe = Check("differentiability", 1e-8)
    checks.append(_run(ctx, check_probe, probe, count=1))
    return checks


def derivative_checks(ctx: Context) -> List[Check]:
    s, cfg = ctx.sys, ctx.limit
    n = s.dim
    checks = []

    def vector_field(rng):
        return random_polynomial_field(n, rng, "vector", degree=2, scale=0.5)

    def unit(rng):
        return rng.uniform(-1.0, 1.0, n)

    def point(rng):
        return _point(ctx, rng, 0.3)

    def decomposition(variant):
        def sample(rng):
            return max_norm(derivatives.decomposition_residual(s, vector_field(rng), unit(rng), point(rng), variant, cfg))
        return sample

    def covector(rng):
        phi = random_polynomial_field(n, rng, "covector", degree=2, scale=0.5)
        return derivatives.covector_decomposition_residual(s, phi, unit(rng), unit(rng), point(rng), cfg)

    pair_kinds = ["inner", "tensor", "exterior", "geometric"] + (["cross"] if n == 3 else [])

    def product(kind, on_vector_space):
        counter = {"k": 0}

        def sample(rng):
            p, u = point(rng), unit(rng)
            bilinear = BILINEAR_KINDS[pair_kinds[counter["k"] % len(pair_kinds)]]
            counter["k"] += 1
            if kind == "pseudo":
                first, second = unit(rng), unit(rng)
            elif kind in ("coherent", "plain"):
                first, second = vector_field(rng), vector_field(rng)
            elif kind == "scalar_vector":
                first, second = random_polynomial_field(n, rng, "scalar", 2, 0.5), vector_field(rng)
            else:
                first, second = random_polynomial_field(n, rng, "covector", 2, 0.5), vector_field(rng)
            result = derivatives.product_rule(kind, s, first, second, u, p, bilinear=bilinear, on_vector_space=on_vector_space, config=cfg)
            return affine.relative_residual(result.lhs, result.rhs)
        return sample

    def torsion_identity(rng):
        x, uf, vf = point(rng), vector_field(rng), vector_field(rng)
        return max_norm(derivatives.torsion_via_derivatives(s, uf, vf, x, cfg) - infinitesimal.torsion(s, uf(x), vf(x), x, config=cfg))

    def extension_independence(rng):
        x, uf, vf = point(rng), vector_field(rng), vector_field(rng)
        a, b = rng.uniform(-0.5, 0.5, (2, n, n))
        uf2 = uf + Field("vector", n, lambda y: a @ (y - x), "shift")
        vf2 = vf + Field("vector", n, lambda y: b @ (y - x), "shift")
        return max_norm(derivatives.torsion_via_derivatives(s, uf, vf, x, cfg) - derivatives.torsion_via_derivatives(s, uf2, vf2, x, cfg))

    def lie_antisymmetry(rng):
        x, uf, vf = point(rng), vector_field(rng), vector_field(rng)
        return max_norm(derivatives.lie_derivative(s, uf, vf, x, cfg) + derivatives.lie_derivative(s, vf, uf, x, cfg))

    koszul_cache: Dict[int, Dict[str, float]] = {}

    def koszul(key):
        def sample(rng):
            phi = random_polynomial_field(n, rng, "scalar", 2, 0.5)
            report = derivatives.koszul_axiom_residuals(
                s, vector_field(rng), vector_field(rng), vector_field(rng), vector_field(rng), phi, float(rng.uniform(-2, 2)), point(rng), cfg
            )
            if key == "axioms":
                return max(report["function_linear_direction"], report["additive_argument"], report["leibniz"])
            return report["constant_basis"]
        return sample

    def linearity(rng):
        p, u, u2, vf, vf2 = point(rng), unit(rng), unit(rng), vector_field(rng), vector_field(rng)
        lam = float(rng.uniform(-2.0, 2.0))
        worst = 0.0
        for op in (derivatives.reduced_derivative, derivatives.vector_space_reduced_derivative, derivatives.plain_derivative, derivatives.partial_derivative):
            direction = op(s, vf, lam * u + u2, p, cfg)
            direction_parts = lam * op(s, vf, u, p, cfg) + op(s, vf, u2, p, cfg)
            argument = op(s, vf.scaled(lam) + vf2, u, p, cfg)
            argument_parts = lam * op(s, vf, u, p, cfg) + op(s, vf2, u, p, cfg)
            worst = max(worst, affine.relative_residual(direction, direction_parts), affine.relative_residual(argument, argument_parts))
        return worst

    plan = [
        ("decomposition_reduced", 1e-7, decomposition("reduced")),
        ("decomposition_vector_space", 1e-7, decomposition("vector_space")),
        ("covector_decomposition", 1e-7, covector),
    ]
    for kind in derivatives.PRODUCT_RULE_KINDS:
        plan.append((f"product_rule_{kind}", 1e-6, product(kind, False)))
        if kind != "pseudo":
            plan.append((f"product_rule_{kind}_on_vector_space", 1e-6, product(kind, True)))
    plan += [
        ("torsion_via_derivatives", 1e-7, torsion_identity),
        ("torsion_extension_independence", 1e-6, extension_independence),
        ("lie_antisymmetry", 0.0, lie_antisymmetry),
        ("koszul_axioms", 1e-7, koszul("axioms")),
        ("koszul_constant_basis", 1e-8, koszul("basis")),
        ("derivative_linearity", 1e-9, linearity),
    ]
    for name, fn_field in sorted(ctx.fields.items()):
        if fn_field.kind == "vector":
            plan.append((f"decomposition_field_{name}", 1e-7,
                         lambda rng, f=fn_field: max_norm(derivatives.decomposition_residual(s, f, unit(rng), point(rng), "reduced", cfg))))
        elif fn_field.kind == "covector":
            plan.append((f"covector_decomposition_field_{name}", 1e-7,
                         lambda rng, f=fn_field: derivatives.covector_decomposition_residual(s, f, unit(rng), unit(rng), point(rng), cfg)))
    for name, tol, fn in plan:
        checks.append(_run(ctx, Check(name, tol), fn))
    return checks


def _random_metric(rng, n: int) -> applications.Metric:
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    eigenvalues = rng.uniform(0.5, 2.0, n) * rng.choice([-1.0, 1.0], n)
    g = q @ np.diag(eigenvalues) @ q.T
    return applications.Metric(0.5 * (g + g.T))


def application_checks(ctx: Context) -> List[Check]:
    s, cfg = ctx.sys, ctx.limit
    n = s.dim
    center = 0.5 * (s.domain.min + s.domain.max)
    checks = []

    def scalar_fields(rng):
        fields = [random_polynomial_field(n, rng, "scalar", degree=3, scale=0.5)]
        fields += [f for _, f in sorted(ctx.fields.items()) if f.kind == "scalar"]
        return fields

    def gradient_identity(rng):
        metric = _random_metric(rng, n)
        x = _point(ctx, rng, 0.3)
        return max(applications.gradient_identity_residual(s, phi, metric, x, samples=10, seed=int(rng.integers(2**31)), config=cfg)
                   for phi in scalar_fields(rng))

    def gradient_uniqueness(rng):
        metric = _random_metric(rng, n)
        x = _point(ctx, rng, 0.3)
        phi = scalar_fields(rng)[0]
        return max_norm(applications.gradient(s, phi, metric, x, cfg) - applications.gradient_normal_equations(s, phi, metric, x, cfg))

    def body_velocity(rng):
        f = s.frame.matrix(center)
        v = rng.uniform(-1.0, 1.0, n)
        return v * (0.075 * float(np.min(s.domain.width)) / max(1e-300, max_norm(f @ v)))

    def geodesic(rng):
        v = body_velocity(rng)
        trace = applications.geodesic_trace(s, center, v, 1.0, 1000)
        return applications.geodesic_residual(s, trace) / (1.0 + max_norm(v))

    def rk4_order(rng):
        v = body_velocity(rng)
        ends = [applications.geodesic_trace(s, center, v, 1.0, m).endpoint for m in (25, 50, 100, 200)]
        diffs = [max_norm(ends[k] - ends[k + 1]) for k in range(3)]
        if diffs[-1] < 1e-11:
            return 0.0
        orders = [math.log2(diffs[k] / diffs[k + 1]) for k in range(2)]
        return max(0.0, 4.0 - min(orders))

    def straight_line(rng):
        v = body_velocity(rng)
        trace = applications.geodesic_trace(s, center, v, 1.0, 64)
        line = center + np.outer(trace.params, s.frame.matrix(center) @ v)
        return max_norm(trace.points - line)

    plan = [
        ("gradient_identity", 1e-7, gradient_identity, None),
        ("gradient_uniqueness", 1e-9, gradient_uniqueness, None),
        ("geodesic_residual", 1e-5, geodesic, None),
        ("rk4_order_deficit", 0.3, rk4_order, None),
        ("flat_straight_line", 1e-10, straight_line, None if _frame_is_constant(s) else "frame is not constant"),
    ]
    for name, tol, fn, skip in plan:
        check = Check(name, tol)
        if skip:
            check.skipped = skip
            checks.append(check)
            continue
        checks.append(_run(ctx, check, fn))
    return checks


SUITE_RUNNERS = {
    "discrete": discrete_checks,
    "infinitesimal": infinitesimal_checks,
    "derivatives": derivative_checks,
    "applications": application_checks,
}


def run_suite(config: RunConfig, suite: str = "all") -> Dict[str, Any]:
    """Run one suite (or all) on the configured space and return the JSON report."""
    if suite != "all" and suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from all, {', '.join(SUITES)}")
    sys_ = build(config.space)
    fields = {name: from_spec(spec, sys_.dim, name) for name, spec in config.fields.items() if name in config.verify.fields}
    ctx = Context(sys=sys_, kind=config.space.kind, limit=config.limit.to_config(), samples=config.verify.samples, seed=config.seed, fields=fields)
    selected = SUITES if suite == "all" else (suite,)
    report_suites = {}
    passed = True
    for name in selected:
        logger.info("running %s suite on %s", name, config.space.kind)
        checks = SUITE_RUNNERS[name](ctx)
        suite_passed = all(c.passed for c in checks)
        passed = passed and suite_passed
        report_suites[name] = {"passed": suite_passed, "checks": [c.to_dict() for c in checks]}
    return {
        "space": config.space.model_dump(),
        "suite": suite,
        "seed": config.seed,
        "samples": config.verify.samples,
        "passed": passed,
        "suites": report_suites,
    }
