"""
Field handles on a chart: scalar, vector, covector and point fields, plus the
bilinear maps the product rules are stated for.

Handles are immutable callables; every constructor returns a new handle.
"""

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from ..schemas import FieldSpec
from ..utils.errors import UsageError
from ..utils.expressions import compile_components
from .pointwise import PointwiseSystem

FieldKind = Literal["scalar", "vector", "covector"]


@dataclass(frozen=True)
class Field:
    """
    A total function on the chart. Scalar fields return floats; vector and covector
    fields return arrays of length `size`.
    """

    kind: FieldKind
    size: int
    evaluate: Callable[[NDArray[np.float64]], object]
    name: str = "field"

    def __call__(self, p):
        value = self.evaluate(np.asarray(p, dtype=float))
        if self.kind == "scalar":
            return float(value)
        value = np.asarray(value, dtype=float)
        if value.shape != (self.size,):
            raise UsageError(f"{self.kind} field '{self.name}' returned shape {value.shape}, expected {(self.size,)}")
        return value

    def __add__(self, other: "Field") -> "Field":
        _same_kind(self, other)
        return Field(self.kind, self.size, lambda p: self(p) + other(p), f"({self.name}+{other.name})")

    def __sub__(self, other: "Field") -> "Field":
        _same_kind(self, other)
        return Field(self.kind, self.size, lambda p: self(p) - other(p), f"({self.name}-{other.name})")

    def scaled(self, factor: float) -> "Field":
        factor = float(factor)
        return Field(self.kind, self.size, lambda p: factor * self(p), f"{factor}*{self.name}")

    def times(self, phi: "Field") -> "Field":
        """Pointwise product φ·self with a scalar field φ."""
        if phi.kind != "scalar":
            raise UsageError("fields can only be multiplied by scalar fields")
        return Field(self.kind, self.size, lambda p: phi(p) * self(p), f"{phi.name}*{self.name}")

    def pair(self, vector_field: "Field") -> "Field":
        """The scalar field p ↦ φ(p)(𝒗(p)) for a covector field φ."""
        if self.kind != "covector" or vector_field.kind != "vector" or vector_field.size != self.size:
            raise UsageError("pairing needs a covector field and a vector field of the same size")
        return Field("scalar", 1, lambda p: float(self(p) @ vector_field(p)), f"{self.name}({vector_field.name})")


def _same_kind(a: Field, b: Field):
    if a.kind != b.kind or a.size != b.size:
        raise UsageError(f"cannot combine a {a.kind}[{a.size}] field with a {b.kind}[{b.size}] field")


def constant_scalar(value: float) -> Field:
    value = float(value)
    return Field("scalar", 1, lambda p: value, f"const({value})")


def constant_vector(value, kind: FieldKind = "vector") -> Field:
    v = np.array(value, dtype=float)
    v.setflags(write=False)
    return Field(kind, v.size, lambda p: v, f"const({v.tolist()})")


def constant_covector(value) -> Field:
    return constant_vector(value, kind="covector")


def basis_field(dim: int, i: int) -> Field:
    return constant_vector(np.eye(dim)[i])


def identity_field(dim: int) -> Field:
    return Field("vector", dim, lambda p: np.array(p, dtype=float), "x")


def linear_vector_field(matrix, offset=None) -> Field:
    """x ↦ A·x + b."""
    a = np.array(matrix, dtype=float)
    b = np.zeros(a.shape[0]) if offset is None else np.array(offset, dtype=float)
    return Field("vector", a.shape[0], lambda p: a @ p + b, "linear")


@dataclass(frozen=True)
class Polynomial:
    """Σ c_α x^α with one coefficient vector per exponent tuple."""

    exponents: Tuple[Tuple[int, ...], ...]
    coefficients: NDArray[np.float64]

    def __call__(self, p) -> NDArray[np.float64]:
        p = np.asarray(p, dtype=float)
        e = np.array(self.exponents, dtype=int)
        monomials = np.prod(np.power(p[None, :], e), axis=1)
        return monomials @ self.coefficients


def polynomial_field(dim: int, terms: Mapping[Tuple[int, ...], Sequence[float]], kind: FieldKind = "vector") -> Field:
    """Field from {exponent tuple: coefficient (scalar or per component)}."""
    exponents = tuple(tuple(int(k) for k in e) for e in terms)
    if any(len(e) != dim for e in exponents):
        raise UsageError(f"polynomial exponents must have {dim} entries")
    coefficients = np.array([np.atleast_1d(np.asarray(c, dtype=float)) for c in terms.values()])
    poly = Polynomial(exponents, coefficients)
    size = coefficients.shape[1]
    if kind == "scalar":
        return Field("scalar", 1, lambda p: float(poly(p)[0]), "poly")
    return Field(kind, size, poly, "poly")


def random_polynomial_field(
    dim: int,
    rng: np.random.Generator,
    kind: FieldKind = "vector",
    degree: int = 2,
    scale: float = 1.0,
) -> Field:
    """Seeded polynomial field of total degree ≤ degree."""
    exps = [e for e in itertools.product(range(degree + 1), repeat=dim) if sum(e) <= degree]
    size = 1 if kind == "scalar" else dim
    terms = {e: scale * rng.uniform(-1.0, 1.0, size) for e in exps}
    return polynomial_field(dim, terms, kind)


def from_spec(spec: FieldSpec, dim: int, name: str = "field") -> Field:
    """Build a field from configured component expressions."""
    components = spec.components()
    expected = 1 if spec.kind == "scalar" else dim
    if len(components) != expected:
        raise UsageError(f"{spec.kind} field '{name}' needs {expected} component expression(s), got {len(components)}")
    evaluate = compile_components(components, dim)
    if spec.kind == "scalar":
        return Field("scalar", 1, lambda p: evaluate(p)[0], name)
    return Field(spec.kind, dim, evaluate, name)


@dataclass(frozen=True)
class PointField:
    """Φ: A → B, a map into the chart of `target`."""

    target: PointwiseSystem
    evaluate: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    name: str = "Phi"

    def __call__(self, p) -> NDArray[np.float64]:
        return self.target.domain.require(self.evaluate(np.asarray(p, dtype=float)), f"image of {self.name}")


BilinearKind = Literal["scalar", "inner", "cross", "tensor", "exterior", "geometric", "pairing", "scalar_vector"]


def _wedge(x, y) -> NDArray[np.float64]:
    n = len(x)
    return np.array([x[i] * y[j] - x[j] * y[i] for i, j in itertools.combinations(range(n), 2)])


@dataclass(frozen=True)
class BilinearMap:
    """
    ⟨⟨x, y⟩⟩ on value spaces, always returned as a flat coefficient vector.

    Blade bases are lexicographic: the exterior product lists e_i∧e_j for i < j and
    the geometric product of two vectors lists the grade-0 part then those blades.
    """

    kind: BilinearKind
    metric: Optional[NDArray[np.float64]] = field(default=None)

    def __call__(self, x, y) -> NDArray[np.float64]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self.kind == "scalar":
            return x * y
        if self.kind == "scalar_vector":
            return x[0] * y
        if x.size != y.size:
            raise UsageError(f"{self.kind} product needs operands of equal size, got {x.size} and {y.size}")
        if self.kind == "inner":
            g = np.eye(x.size) if self.metric is None else self.metric
            return np.array([x @ g @ y])
        if self.kind == "pairing":
            return np.array([x @ y])
        if self.kind == "cross":
            if x.size != 3:
                raise UsageError("the cross product needs dimension 3")
            return np.cross(x, y)
        if self.kind == "tensor":
            return np.outer(x, y).ravel()
        if self.kind == "exterior":
            return _wedge(x, y)
        if self.kind == "geometric":
            return np.concatenate([[x @ y], _wedge(x, y)])
        raise UsageError(f"unknown bilinear map kind {self.kind!r}")


BILINEAR_KINDS: Dict[str, BilinearMap] = {
    kind: BilinearMap(kind) for kind in ("scalar", "inner", "cross", "tensor", "exterior", "geometric", "pairing", "scalar_vector")
}
