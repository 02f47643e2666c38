"""Linear slow-fast system with closed-form solutions.

    eps * x1' = y - x1
    eps * x2' = x2
    y'        = 1

The general solution is

    x1(t) = y(0) - eps + t + (x1(0) - y(0) + eps) exp(-t/eps)
    x2(t) = x2(0) exp(t/eps)
    y(t)  = y(0) + t

so the slow manifold is the line y = x1 + eps, x2 = 0.  Every solver
quantity (trajectories, collocation ratios, convergence order) can be checked
against these formulas, which is what the benchmark experiment does.
"""

from __future__ import annotations

import math

import numpy as np

from ..core import SlowFastSystem, SlowFlowChart

_EXP_LIMIT = 700.0  # exp beyond this overflows a double


def system(epsilon: float) -> SlowFastSystem:
    def fast(x, y, eps):
        return np.array([y[0] - x[0], x[1]])

    def slow(x, y, eps):
        return np.array([1.0])

    def fast_jac(x, y, eps):
        return np.array([[-1.0, 0.0], [0.0, 1.0]])

    def full_jac(z):
        return np.array(
            [
                [-1.0 / epsilon, 0.0, 1.0 / epsilon],
                [0.0, 1.0 / epsilon, 0.0],
                [0.0, 0.0, 0.0],
            ]
        )

    def rhs(z):
        x1, x2, y = z
        return np.array([(y - x1) / epsilon, x2 / epsilon, 1.0])

    return SlowFastSystem(
        name="linear",
        fast_dim=2,
        slow_dim=1,
        epsilon=epsilon,
        fast_field=fast,
        slow_field=slow,
        fast_jacobian=fast_jac,
        full_jacobian=full_jac,
        rhs=rhs,
        params={"epsilon": epsilon},
    )


def exact(z0, t: float, epsilon: float) -> np.ndarray:
    """Closed-form solution at time ``t`` from initial state ``z0``.

    Raises OverflowError instead of silently returning inf when the unstable
    mode exp(t/eps) (or the stable mode integrated backward) overflows.
    """
    x10, x20, y0 = (float(c) for c in np.asarray(z0, dtype=float))
    rate = t / epsilon
    x1_coeff = x10 - y0 + epsilon
    if x20 != 0.0 and rate > _EXP_LIMIT:
        raise OverflowError(f"x2 mode exp(t/eps) overflows for t/eps = {rate:.3g}")
    if x1_coeff != 0.0 and -rate > _EXP_LIMIT:
        raise OverflowError(f"x1 mode exp(-t/eps) overflows for t/eps = {rate:.3g}")
    x1 = y0 - epsilon + t + x1_coeff * (math.exp(-rate) if x1_coeff != 0.0 else 0.0)
    x2 = x20 * math.exp(rate) if x20 != 0.0 else 0.0
    return np.array([x1, x2, y0 + t])


def ratio(delta: float, epsilon: float) -> float:
    """One-interval contraction factor of the discretized slow-manifold deviation.

    For mesh width ``delta`` the deviation w = y - x1 - eps of the converged
    collocation solution satisfies w_{j+1} = ratio(delta, eps) * w_j.  The
    value lies in (0, 1) and agrees with exp(-delta/eps) through fourth order.
    """
    if delta <= 0 or epsilon <= 0:
        raise ValueError("delta and epsilon must be positive")
    d2 = delta * delta
    de = delta * epsilon
    e2 = epsilon * epsilon
    return (d2 - 6 * de + 12 * e2) / (d2 + 6 * de + 12 * e2)


def slow_manifold_point(y: float, epsilon: float) -> np.ndarray:
    return np.array([y - epsilon, 0.0, y])


def chart(epsilon: float) -> SlowFlowChart:
    """Slow flow in the y chart: y' = 1, lifted to the critical manifold x1=y, x2=0."""
    return SlowFlowChart(
        name="linear-y",
        dim=1,
        tangent=lambda u: np.array([1.0]),
        lift=lambda u: np.array([u[0], 0.0, u[0]]),
    )
