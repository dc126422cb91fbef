"""
Component expressions for configured fields.

Grammar: identifiers x0..x{n-1}, numbers, + - * / ^, parentheses, unary minus and
the functions sin, cos, exp. Input is first checked against a token whitelist, then
parsed with sympy and compiled to a numpy callable with lambdify.
"""

import re
from tokenize import TokenError
from functools import lru_cache
from typing import Callable, List, Sequence

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .errors import ConfigError, UsageError

TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)|(x\d+)|(sin|cos|exp)|([-+*/^()]))")
FUNCTIONS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp}
TRANSFORMATIONS = standard_transformations + (convert_xor,)


def tokenize(text: str) -> List[str]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ConfigError(f"unexpected character in expression {text!r} at position {pos}")
        tokens.append(m.group().strip())
        pos = m.end()
    if not tokens:
        raise ConfigError("empty expression")
    return tokens


def _symbols(dim: int):
    return tuple(sp.symbols(f"x0:{dim}", real=True))


@lru_cache(maxsize=256)
def parse(text: str, dim: int) -> sp.Expr:
    """Parse one component expression over x0..x{dim-1}."""
    tokens = tokenize(text)
    if "**" in "".join(tokens):
        raise ConfigError(f"use ^ for powers in {text!r}")
    symbols = _symbols(dim)
    names = {str(s): s for s in symbols}
    for tok in tokens:
        if tok.startswith("x") and tok not in names:
            raise ConfigError(f"{tok} is not a coordinate of a {dim}-dimensional chart (in {text!r})")
    try:
        expr = parse_expr(text, local_dict={**names, **FUNCTIONS}, transformations=TRANSFORMATIONS)
    except (SyntaxError, TokenError, TypeError, ValueError) as e:
        raise ConfigError(f"cannot parse expression {text!r}: {e}") from e
    if not isinstance(expr, sp.Expr):
        raise ConfigError(f"{text!r} is not an arithmetic expression")
    return expr


def compile_components(texts: Sequence[str], dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """Compile component expressions into p ↦ array of component values."""
    symbols = _symbols(dim)
    exprs = [parse(t, dim) for t in texts]
    functions = [sp.lambdify(symbols, e, "numpy") for e in exprs]

    def evaluate(p: np.ndarray) -> np.ndarray:
        args = [float(c) for c in p]
        with np.errstate(all="raise"):
            try:
                values = np.array([float(f(*args)) for f in functions])
            except (FloatingPointError, ZeroDivisionError, OverflowError, TypeError) as e:
                raise UsageError(f"field expression is undefined at {list(args)}: {e}") from e
        if not np.all(np.isfinite(values)):
            raise UsageError(f"field expression is not finite at {list(args)}")
        return values

    return evaluate
