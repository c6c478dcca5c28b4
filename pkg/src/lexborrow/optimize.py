"""Limited-memory quasi-Newton minimization with optional L1 penalty (OWL-QN).

Minimizes ``f(x) + c1 * ||x||_1`` where ``f`` is smooth and supplied with its
gradient. With ``c1 == 0`` this is plain L-BFGS with a backtracking line
search. With ``c1 > 0`` the orthant-wise variant of Andrew and Gao is used:
the search direction is computed from the pseudo-gradient, constrained to
its descent orthant, and every trial point is projected back onto the
orthant of the current iterate.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"objective became non-finite at iteration {iteration}")


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    message: str
    trace: list[float] = field(default_factory=list)
    evaluations: int = 0


def pseudo_gradient(x: np.ndarray, g: np.ndarray, c1: float) -> np.ndarray:
    if c1 == 0:
        return g.copy()
    pg = g + c1 * np.sign(x)
    at_zero = x == 0
    right = g[at_zero] + c1
    left = g[at_zero] - c1
    pg_zero = np.zeros_like(right)
    pg_zero[right < 0] = right[right < 0]
    pg_zero[left > 0] = left[left > 0]
    pg[at_zero] = pg_zero
    return pg


def _two_loop(q: np.ndarray, history) -> np.ndarray:
    q = q.copy()
    alphas = []
    for s, y, rho in reversed(history):
        a = rho * s.dot(q)
        alphas.append(a)
        q -= a * y
    if history:
        s, y, _ = history[-1]
        q *= s.dot(y) / y.dot(y)
    for (s, y, rho), a in zip(history, reversed(alphas)):
        b = rho * y.dot(q)
        q += (a - b) * s
    return q


def minimize(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    c1: float = 0.0,
    memory: int = 6,
    max_iterations: int = 200,
    tolerance: float = 1e-5,
    gtol: float = 1e-10,
    max_linesearch: int = 40,
    armijo: float = 1e-4,
) -> OptimizeResult:
    """Minimize ``fun(x)[0] + c1 * |x|_1``.

    ``fun`` returns the smooth objective and its gradient. Iteration stops
    when the relative decrease of the penalized objective over one iteration
    falls below ``tolerance``, when the pseudo-gradient vanishes, or after
    ``max_iterations``.
    """
    if c1 < 0:
        raise ValueError("c1 must be non-negative")
    x = np.array(x0, dtype=np.float64)
    f, g = fun(x)
    evals = 1
    F = f + c1 * np.abs(x).sum()
    if not np.isfinite(F):
        raise DivergenceError(0)
    trace = [float(F)]
    history: deque = deque(maxlen=memory)
    converged, message = False, "maximum iterations reached"

    it = 0
    while it < max_iterations:
        pg = pseudo_gradient(x, g, c1)
        if np.linalg.norm(pg) <= gtol * max(1.0, np.linalg.norm(x)):
            converged, message = True, "gradient vanished"
            break
        d = -_two_loop(pg, history)
        if c1 > 0:
            d[d * pg >= 0] = 0.0
        if d.dot(pg) >= 0:
            history.clear()
            d = -pg
        orthant = np.sign(x)
        if c1 > 0:
            orthant[x == 0] = -np.sign(pg[x == 0])

        step = 1.0 / np.linalg.norm(d) if it == 0 and not history else 1.0
        for _ in range(max_linesearch):
            x_new = x + step * d
            if c1 > 0:
                x_new[np.sign(x_new) != orthant] = 0.0
            f_new, g_new = fun(x_new)
            evals += 1
            F_new = f_new + c1 * np.abs(x_new).sum()
            if not np.isfinite(F_new):
                raise DivergenceError(it + 1)
            if F_new <= F + armijo * pg.dot(x_new - x):
                break
            step *= 0.5
        else:
            message = "line search failed"
            break

        it += 1
        s = x_new - x
        y = g_new - g
        sy = s.dot(y)
        if sy > 1e-12:
            history.append((s, y, 1.0 / sy))
        decrease = (F - F_new) / max(abs(F_new), 1.0)
        x, g, f, F = x_new, g_new, f_new, F_new
        trace.append(float(F))
        log.debug("iter %d objective %.6f step %.3g", it, F, step)
        if decrease < tolerance:
            converged, message = True, "relative objective change below tolerance"
            break

    return OptimizeResult(x, float(F), it, converged, message, trace, evals)
