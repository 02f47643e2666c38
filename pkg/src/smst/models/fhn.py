"""FitzHugh-Nagumo traveling-wave ODE in slow-fast form.

    eps * x1' = x2
    eps * x2' = (s x2 - f(x1) + y - p) / 5
    y'        = (x1 - y) / s

with the cubic f(u) = u (u - 1/10) (1 - u).  Homoclinic orbits of this system
are traveling pulses of the reaction-diffusion model it derives from; the
wave speed ``s`` and current offset ``p`` are the free parameters (the other
PDE constants are fixed at a = 1/10, diffusion 5, recovery ratio 1).

The critical manifold is the cubic curve x2 = 0, y = c(x1) := f(x1) + p.  Its
two fold points split it into saddle-type outer branches and a repelling
middle branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import SlowFastSystem, SlowFlowChart, segment_from_arrays
from ..errors import FoldSingularityError

#: Roots of c'(x1) = -3 x1^2 + 2.2 x1 - 0.1: the fold points of the cubic.
FOLD_LOWER = (2.2 - math.sqrt(3.64)) / 6.0
FOLD_UPPER = (2.2 + math.sqrt(3.64)) / 6.0

#: Default cross-section level between the folds, x1 = (sum of folds) / 2.
SECTION_LEVEL = (FOLD_LOWER + FOLD_UPPER) / 2.0


@dataclass(frozen=True)
class FhnParams:
    """Applied-current offset p, wave speed s, time-scale ratio eps."""

    p: float
    s: float
    epsilon: float

    def __post_init__(self):
        if self.s == 0:
            raise ValueError("wave speed s must be nonzero")
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")


def cubic(u: float) -> float:
    """f(u) = u (u - 0.1) (1 - u) = -u^3 + 1.1 u^2 - 0.1 u."""
    return ((-u + 1.1) * u - 0.1) * u


def cubic_prime(u: float) -> float:
    return (-3.0 * u + 2.2) * u - 0.1


def c_of(x1: float, p: float) -> float:
    """Height of the critical manifold: c(x1) = f(x1) + p."""
    return cubic(x1) + p


def system(params: FhnParams) -> SlowFastSystem:
    p, s, eps = params.p, params.s, params.epsilon

    def fast(x, y, e):
        return np.array([x[1], (s * x[1] - cubic(x[0]) + y[0] - p) / 5.0])

    def slow(x, y, e):
        return np.array([(x[0] - y[0]) / s])

    def fast_jac(x, y, e):
        return np.array([[0.0, 1.0], [-cubic_prime(x[0]) / 5.0, s / 5.0]])

    def full_jac(z):
        x1, x2, y = z
        return np.array(
            [
                [0.0, 1.0 / eps, 0.0],
                [-cubic_prime(x1) / (5.0 * eps), s / (5.0 * eps), 1.0 / (5.0 * eps)],
                [1.0 / s, 0.0, -1.0 / s],
            ]
        )

    def rhs(z):
        x1, x2, y = z
        return np.array(
            [
                x2 / eps,
                (s * x2 - cubic(x1) + y - p) / (5.0 * eps),
                (x1 - y) / s,
            ]
        )

    return SlowFastSystem(
        name="fhn",
        fast_dim=2,
        slow_dim=1,
        epsilon=eps,
        fast_field=fast,
        slow_field=slow,
        fast_jacobian=fast_jac,
        full_jacobian=full_jac,
        rhs=rhs,
        params={"p": p, "s": s, "epsilon": eps},
    )


def critical_point_at(x1: float, p: float) -> np.ndarray:
    """Critical-manifold point (x1, 0, c(x1))."""
    return np.array([x1, 0.0, c_of(x1, p)])


def fold_points() -> tuple[float, float]:
    return FOLD_LOWER, FOLD_UPPER


def equilibrium(p: float) -> np.ndarray:
    """The unique real equilibrium q = (x1*, 0, x1*) with x1* = f(x1*) + p."""
    roots = np.roots([-1.0, 1.1, -0.1 - 1.0, p])  # f(x) + p - x = 0
    real = [r.real for r in roots if abs(r.imag) < 1e-10]
    if not real:
        raise ValueError(f"no real equilibrium for p={p}")
    if len(real) > 1:
        real.sort()
    x1 = real[0]
    return np.array([x1, 0.0, x1])


def x1_chart(params: FhnParams) -> SlowFlowChart:
    """Slow flow on the critical manifold parametrized by x1.

    From y = c(x1) and y' = (x1 - y)/s the chain rule gives
    dx1/dt = (x1 - c(x1)) / (s c'(x1)); singular at the folds.
    """

    def tangent(u):
        x1 = u[0]
        der = cubic_prime(x1)
        if abs(der) < 1e-10:
            raise FoldSingularityError(f"slow flow undefined at fold x1={x1}")
        return np.array([(x1 - c_of(x1, params.p)) / (params.s * der)])

    return SlowFlowChart(
        name="fhn-x1",
        dim=1,
        tangent=tangent,
        lift=lambda u: critical_point_at(u[0], params.p),
    )


def candidate_segment(
    params: FhnParams,
    x1_start: float,
    x1_end: float,
    points: int,
    sampling: str = "time",
):
    """Slow-flow seed along the critical manifold from x1_start to x1_end.

    ``sampling="time"`` places knots uniformly in slow time (resolving the
    crawl near slow-flow equilibria, where chart-uniform meshes leave long
    time gaps that weaken the collocation equations); ``sampling="chart"``
    places them uniformly in x1.  Times follow the chart flow
    dt = s c'(x1) / (x1 - c(x1)) dx1; the range must stay on one side of
    both folds and away from slow-flow equilibria.
    """
    if points < 2:
        raise ValueError("need at least two knots")
    if sampling not in ("time", "chart"):
        raise ValueError("sampling must be 'time' or 'chart'")

    def dt_dx(x1):
        denom = x1 - c_of(x1, params.p)
        if denom == 0.0:
            raise FoldSingularityError(f"slow flow has an equilibrium at x1={x1}")
        return params.s * cubic_prime(x1) / denom

    # Cumulative time on a fine chart grid (composite Simpson per interval).
    fine_n = max(8 * points, 800)
    xs_fine = np.linspace(x1_start, x1_end, fine_n)
    t_fine = np.empty(fine_n)
    t_fine[0] = 0.0
    for j in range(fine_n - 1):
        a, b = xs_fine[j], xs_fine[j + 1]
        mid = 0.5 * (a + b)
        t_fine[j + 1] = t_fine[j] + (b - a) / 6.0 * (
            dt_dx(a) + 4.0 * dt_dx(mid) + dt_dx(b)
        )
    if not np.all(np.diff(t_fine) > 0):
        raise ValueError("candidate range is not traversed forward by the slow flow")

    if sampling == "chart":
        xs = np.linspace(x1_start, x1_end, points)
        if x1_end > x1_start:
            times = np.interp(xs, xs_fine, t_fine)
        else:
            times = np.interp(xs[::-1], xs_fine[::-1], t_fine[::-1])[::-1]
    else:
        times = np.linspace(0.0, t_fine[-1], points)
        xs = np.interp(times, t_fine, xs_fine)
    states = np.array([critical_point_at(x, params.p) for x in xs])
    return segment_from_arrays(times, states)
