"""Quadrature rules shared by the kernel evaluators.

* :func:`exp_sinh` integrates smooth functions over ``[0, inf)`` with the
  double-exponential substitution ``x = exp(pi/2 sinh u)``.  Each level halves
  the step (doubling the node count); the error estimate is the difference
  between the last two levels.
* :func:`panel_gauss` integrates over a list of breakpoints with Gauss-Legendre
  panels at ``n`` and ``2n`` nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class QuadratureError(RuntimeError):
    """Tolerance not met within the node budget.

    ``estimate`` and ``error`` carry the best value reached.
    """

    def __init__(self, message: str, estimate, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadBudget:
    """Node budget and tolerance for one evaluation.

    ``tol`` is relative to the magnitude of the integral (with an absolute
    floor of ``tol * abs_floor``).
    """

    tol: float = 1e-11
    max_level: int = 8
    abs_floor: float = 1e-300

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_level < 2:
            raise ValueError("max_level must be >= 2")


@dataclass(frozen=True)
class QuadResult:
    value: complex | float
    error: float
    nodes: int


_U_MAX = 4.6  # exp(pi/2 sinh 4.6) ~ 1e27, exp(-pi/2 sinh 4.6) ~ 1e-27


def _exp_sinh_nodes(step: float, offset: float):
    u = np.arange(-_U_MAX + offset, _U_MAX + 1e-12, step)
    s = 0.5 * np.pi * np.sinh(u)
    x = np.exp(s)
    w = 0.5 * np.pi * np.cosh(u) * x
    return x, w


def exp_sinh(func, budget: QuadBudget = QuadBudget(), *, start_step: float = 0.5) -> QuadResult:
    """Integrate ``func`` (vectorized, may be complex) over ``(0, inf)``."""
    step = start_step
    x, w = _exp_sinh_nodes(step, 0.0)
    total = np.sum(w * func(x))
    nodes = x.size
    value = step * total
    err = np.inf
    for _ in range(budget.max_level):
        # refinement: the new nodes are the midpoints of the old step
        x, w = _exp_sinh_nodes(step, step / 2.0)
        total = total + np.sum(w * func(x))
        nodes += x.size
        step /= 2.0
        new = step * total
        err = float(abs(new - value))
        value = new
        if err <= budget.tol * max(abs(value), budget.abs_floor):
            return QuadResult(value, err, nodes)
    raise QuadratureError(
        f"exp-sinh rule did not reach tol={budget.tol:.1e} (last change {err:.3e})", value, err
    )


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(breaks: np.ndarray, n: int):
    """Gauss-Legendre nodes and weights on every panel ``[breaks[i], breaks[i+1]]``."""
    x, w = gauss_legendre(n)
    lo = breaks[:-1, None]
    half = 0.5 * (breaks[1:, None] - lo)
    nodes = lo + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def panel_gauss(func, breaks, n: int = 16, budget: QuadBudget = QuadBudget()) -> QuadResult:
    """Panel Gauss-Legendre with an ``n`` vs ``2n`` node-doubling error estimate."""
    breaks = np.asarray(breaks, dtype=float)
    x1, w1 = panel_nodes(breaks, n)
    x2, w2 = panel_nodes(breaks, 2 * n)
    coarse = np.sum(w1 * func(x1))
    fine = np.sum(w2 * func(x2))
    err = float(abs(fine - coarse))
    if not np.isfinite(fine):
        raise QuadratureError("non-finite panel quadrature", fine, np.inf)
    return QuadResult(fine, err, x1.size + x2.size)


def geometric_breaks(lo: float, hi: float, ratio: float = 2.0) -> np.ndarray:
    """``lo, lo*ratio, ..., hi`` (``lo > 0``); the last panel may be shorter."""
    if not (0 < lo < hi):
        raise ValueError("need 0 < lo < hi")
    k = int(np.ceil(np.log(hi / lo) / np.log(ratio)))
    pts = lo * ratio ** np.arange(k + 1)
    pts = pts[pts < hi * (1 - 1e-12)]
    return np.append(pts, hi)
