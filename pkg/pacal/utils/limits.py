"""
Richardson extrapolation of difference-quotient limits.

A quotient q(τ) is sampled on τ = h0 / ratio**k and extrapolated in a Neville
tableau, assuming q(τ) = L + c1·τ + c2·τ² + ... (one-sided sampling) or
q(τ) = L + c1·τ² + c2·τ⁴ + ... (symmetric sampling, q averaged over ±τ).

The error strategy is Ridders': each new extrapolant is compared with the one of
lower order at the same and at the previous step size, the best is kept, and the
tableau stops growing once the highest order gets worse by the factor SAFE.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np

from .errors import LimitFailure, UsageError

logger = logging.getLogger(__name__)

SAFE = 2.0
MAX_LEVELS = 12


@dataclass(frozen=True)
class LimitConfig:
    h0: float = 1e-2
    levels: int = 8
    tol: float = 1e-9
    ratio: float = 2.0
    symmetric: bool = False

    def __post_init__(self):
        if not self.h0 > 0:
            raise UsageError(f"limit h0 must be positive, got {self.h0}")
        if not 2 <= self.levels <= MAX_LEVELS:
            raise UsageError(f"limit levels must lie in [2, {MAX_LEVELS}], got {self.levels}")
        if not self.tol > 0:
            raise UsageError(f"limit tol must be positive, got {self.tol}")
        if not self.ratio > 1:
            raise UsageError(f"limit ratio must exceed 1, got {self.ratio}")

    def steps(self) -> np.ndarray:
        return self.h0 / self.ratio ** np.arange(self.levels)


DEFAULT_LIMIT = LimitConfig()


@dataclass(frozen=True)
class LimitEstimate:
    value: np.ndarray
    err: float
    converged: bool
    taus: Tuple[float, ...]
    quotients: Tuple[np.ndarray, ...]
    diagonals: Tuple[np.ndarray, ...]

    def quotient_table(self) -> List[Dict[str, Any]]:
        """Rows of (tau, raw quotient, tableau diagonal) for reports."""
        rows = []
        for k, tau in enumerate(self.taus):
            rows.append({
                "tau": tau,
                "quotient": np.asarray(self.quotients[k]).tolist(),
                "diagonal": np.asarray(self.diagonals[k]).tolist(),
            })
        return rows

    def diagnostics(self) -> Dict[str, Any]:
        return {
            "value": np.asarray(self.value).tolist(),
            "err": self.err,
            "converged": self.converged,
            "table": self.quotient_table(),
        }


def max_norm(x) -> float:
    a = np.asarray(x, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a)))


def richardson_limit(quotient: Callable[[float], Any], config: LimitConfig = DEFAULT_LIMIT) -> LimitEstimate:
    """
    Estimate lim_{τ→0⁺} quotient(τ).

    Args:
        quotient: Function of the step τ > 0 returning a scalar or an array.
        config: Step schedule, depth and tolerance.

    Returns:
        LimitEstimate with the best extrapolant, its error estimate and the raw
        quotients and tableau diagonals actually computed.
    """
    order = 2 if config.symmetric else 1
    step_factor = config.ratio ** order

    def sample(tau: float) -> np.ndarray:
        q = np.asarray(quotient(tau), dtype=float)
        if config.symmetric:
            q = 0.5 * (q + np.asarray(quotient(-tau), dtype=float))
        return q

    taus: List[float] = []
    quotients: List[np.ndarray] = []
    diagonals: List[np.ndarray] = []
    table: List[List[np.ndarray]] = []
    err = math.inf
    best = None

    for i, tau in enumerate(config.steps()):
        q = sample(float(tau))
        taus.append(float(tau))
        quotients.append(q)
        row = [q]
        fac = step_factor
        for j in range(1, i + 1):
            previous = table[i - 1][j - 1]
            extrapolated = row[j - 1] + (row[j - 1] - previous) / (fac - 1.0)
            fac *= step_factor
            errt = max(max_norm(extrapolated - row[j - 1]), max_norm(extrapolated - previous))
            if errt <= err:
                err = errt
                best = extrapolated
            row.append(extrapolated)
        table.append(row)
        diagonals.append(row[-1])
        if i == 0:
            best = q
            continue
        if max_norm(row[i] - table[i - 1][i - 1]) >= SAFE * err:
            break

    finite = bool(np.all(np.isfinite(best))) and math.isfinite(err)
    return LimitEstimate(
        value=best,
        err=err if finite else math.inf,
        converged=finite and err <= config.tol,
        taus=tuple(taus),
        quotients=tuple(quotients),
        diagonals=tuple(diagonals),
    )


def require_converged(estimate: LimitEstimate, label: str, side: str = None) -> np.ndarray:
    if not estimate.converged:
        logger.warning("limit for %s did not converge (err=%.3e)", label, estimate.err)
        raise LimitFailure(
            f"limit for {label} did not converge (err={estimate.err:.3e})",
            diagnostics=estimate.diagnostics(),
            side=side,
        )
    return estimate.value


def limit_value(quotient: Callable[[float], Any], config: LimitConfig, label: str, side: str = None) -> np.ndarray:
    return require_converged(richardson_limit(quotient, config), label, side)


def successive_orders(quotients: Sequence, ratio: float) -> List[float]:
    """
    Observed convergence order from three consecutive raw quotients,
    log(|q_k - q_{k+1}| / |q_{k+1} - q_{k+2}|) / log(ratio); NaN where undefined.
    """
    orders: List[float] = []
    for k in range(len(quotients) - 2):
        a = max_norm(np.asarray(quotients[k]) - np.asarray(quotients[k + 1]))
        b = max_norm(np.asarray(quotients[k + 1]) - np.asarray(quotients[k + 2]))
        if a > 0 and b > 0:
            orders.append(math.log(a / b) / math.log(ratio))
        else:
            orders.append(math.nan)
    return orders
