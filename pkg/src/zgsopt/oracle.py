"""Ground-truth computations kept independent of the distributed dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .costs import CostFunction
from .errors import ConvexityError, NumericalError


@dataclass(frozen=True)
class OracleSolution:
    x_star: np.ndarray
    residual: float
    iterations: int


def centralized_minimize(costs: Sequence[CostFunction], x0, t: float = 0.0,
                         tol: float = 1e-12, max_iter: int = 200) -> OracleSolution:
    """Damped Newton on F(x) = sum_i f_i(x, t).

    The Newton step is halved while F increases. Stops when ``||grad F|| <= tol``.
    """
    x = np.array(x0, dtype=float)

    def total(z):
        return sum(f.value(z, t) for f in costs)

    def grad(z):
        return sum(np.asarray(f.gradient(z, t), dtype=float) for f in costs)

    g = grad(x)
    for it in range(max_iter + 1):
        res = float(np.linalg.norm(g))
        if res <= tol:
            return OracleSolution(x_star=x, residual=res, iterations=it)
        if it == max_iter:
            break
        H = sum(np.asarray(f.hessian(x, t), dtype=float) for f in costs)
        try:
            L = np.linalg.cholesky(H)
        except np.linalg.LinAlgError as exc:
            raise ConvexityError(f"aggregate Hessian not positive definite at x={x.tolist()}") from exc
        step = -np.linalg.solve(L.T, np.linalg.solve(L, g))
        F0 = total(x)
        alpha = 1.0
        # near the optimum F stalls at roundoff, so accept the full step then
        while alpha > 1e-12 and total(x + alpha * step) > F0 and res > 1e-8:
            alpha *= 0.5
        x = x + alpha * step
        g = grad(x)
    raise NumericalError(f"Newton hit {max_iter} iterations with residual {res:.3e}")


def scalar_pdt_decay(V0: float, alpha: float, p: float, T_m: float,
                     step: float = 1e-5, floor: float = 1e-12) -> float:
    """Time for dV/dt = -exp(alpha V^p) V^(1-p) / (alpha p T_m) to reach ``floor``.

    Forward Euler at ``step``. The bound predicted for this decay is ``T_m``
    regardless of ``V0``.
    """
    if V0 <= floor:
        return 0.0
    if not (alpha > 0 and 0 < p < 1 and T_m > 0):
        raise ValueError("need alpha > 0, 0 < p < 1, T_m > 0")
    gain = 1.0 / (alpha * p * T_m)
    V, t = float(V0), 0.0
    limit = 10.0 * T_m
    while V > floor:
        # exp argument capped; beyond that the step already overshoots to zero
        rate = gain * math.exp(min(alpha * V ** p, 700.0)) * V ** (1.0 - p)
        V -= step * rate
        t += step
        if t > limit:
            break
    return t


def tracking_reference(biases: Sequence, p_star: Callable[[float], np.ndarray]) -> Callable[[float], np.ndarray]:
    """Minimizer of sum_i ||x - (p*(t) + b_i)||^2, which is p*(t) + mean(b_i)."""
    offset = np.mean(np.asarray(biases, dtype=float), axis=0)
    return lambda t: np.asarray(p_star(t), dtype=float) + offset


def power_sum_gap(z, p: float) -> float:
    """Slack in the power-sum inequality for nonnegative ``z``.

    For ``0 < p <= 1`` returns ``sum z^p - (sum z)^p``; for ``p > 1`` returns
    ``sum z^p - n^(1-p) (sum z)^p``. Both are nonnegative.
    """
    z = np.asarray(z, dtype=float).ravel()
    if np.any(z < 0) or not p > 0:
        raise ValueError("need nonnegative z and p > 0")
    lhs = float(np.sum(z ** p))
    total = float(np.sum(z)) ** p
    if p <= 1:
        return lhs - total
    return lhs - z.size ** (1.0 - p) * total
