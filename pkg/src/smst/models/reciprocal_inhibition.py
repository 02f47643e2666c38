"""Two coupled neurons with reciprocal synaptic inhibition (two fast membrane
potentials v1, v2 and two slow gating variables q1, q2).

    v_i' = -(v_i - a tanh(sigma_i v_i / a) + q_i + omega f(v_j) (v_i - r))
    q_i' = eps (-q_i + s v_i)                          (j = 3 - i)

with the synaptic sigmoid f(x) = 1 / (1 + exp(-4 gamma (x - theta))).

The fast field can be written h(v) - q, so the critical manifold is the graph
q = h(v) and the fast-subsystem Jacobian is Dh(v).  The slow flow in the v
chart is v' = Dh(v)^{-1} (s v - h(v)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import SlowFastSystem, SlowFlowChart
from ..errors import FoldSingularityError


@dataclass(frozen=True)
class RIParams:
    omega: float = 0.03
    gamma: float = 10.0
    r: float = -4.0
    theta: float = 0.01333
    a: float = 1.0
    s: float = 1.0
    sigma1: float = 3.0
    sigma2: float = 1.2652372051
    epsilon: float = 1e-3

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")


def synapse(x: float, params: RIParams) -> float:
    return 1.0 / (1.0 + math.exp(-4.0 * params.gamma * (x - params.theta)))


def _synapse_prime(x: float, params: RIParams) -> float:
    f = synapse(x, params)
    return 4.0 * params.gamma * f * (1.0 - f)


def h(v, params: RIParams) -> np.ndarray:
    """Gating values on the critical manifold: q = h(v)."""
    v1, v2 = float(v[0]), float(v[1])
    a = params.a
    h1 = a * math.tanh(params.sigma1 * v1 / a) - v1 - params.omega * synapse(v2, params) * (
        v1 - params.r
    )
    h2 = a * math.tanh(params.sigma2 * v2 / a) - v2 - params.omega * synapse(v1, params) * (
        v2 - params.r
    )
    return np.array([h1, h2])


def dh(v, params: RIParams) -> np.ndarray:
    """Jacobian of h; also the fast-subsystem Jacobian D_v (h(v) - q)."""
    v1, v2 = float(v[0]), float(v[1])
    a = params.a
    s1 = math.cosh(params.sigma1 * v1 / a)
    s2 = math.cosh(params.sigma2 * v2 / a)
    d11 = params.sigma1 / (s1 * s1) - 1.0 - params.omega * synapse(v2, params)
    d22 = params.sigma2 / (s2 * s2) - 1.0 - params.omega * synapse(v1, params)
    d12 = -params.omega * _synapse_prime(v2, params) * (v1 - params.r)
    d21 = -params.omega * _synapse_prime(v1, params) * (v2 - params.r)
    return np.array([[d11, d12], [d21, d22]])


def system(params: RIParams) -> SlowFastSystem:
    eps, s = params.epsilon, params.s

    def fast(x, y, e):
        return h(x, params) - np.asarray(y, dtype=float)

    def slow(x, y, e):
        return s * np.asarray(x, dtype=float) - np.asarray(y, dtype=float)

    def fast_jac(x, y, e):
        return dh(x, params)

    def full_jac(z):
        out = np.zeros((4, 4))
        out[:2, :2] = dh(z[:2], params) / eps
        out[:2, 2:] = -np.eye(2) / eps
        out[2:, :2] = s * np.eye(2)
        out[2:, 2:] = -np.eye(2)
        return out

    def rhs(z):
        hv = h(z[:2], params)
        return np.array(
            [
                (hv[0] - z[2]) / eps,
                (hv[1] - z[3]) / eps,
                s * z[0] - z[2],
                s * z[1] - z[3],
            ]
        )

    return SlowFastSystem(
        name="reciprocal-inhibition",
        fast_dim=2,
        slow_dim=2,
        epsilon=eps,
        fast_field=fast,
        slow_field=slow,
        fast_jacobian=fast_jac,
        full_jacobian=full_jac,
        rhs=rhs,
        params={
            "omega": params.omega,
            "gamma": params.gamma,
            "r": params.r,
            "theta": params.theta,
            "a": params.a,
            "s": params.s,
            "sigma1": params.sigma1,
            "sigma2": params.sigma2,
            "epsilon": eps,
        },
    )


def slow_flow(v, params: RIParams) -> np.ndarray:
    """Slow flow in the v chart: v' = Dh(v)^{-1} (s v - h(v)) (slow time)."""
    v = np.asarray(v, dtype=float)
    jac = dh(v, params)
    try:
        return np.linalg.solve(jac, params.s * v - h(v, params))
    except np.linalg.LinAlgError as exc:
        raise FoldSingularityError(f"Dh singular at v={v} (fold sheet)") from exc


def lift(v, params: RIParams) -> np.ndarray:
    """Embed a chart point on the critical manifold: (v, h(v))."""
    v = np.asarray(v, dtype=float)
    return np.concatenate([v, h(v, params)])


def v_chart(params: RIParams) -> SlowFlowChart:
    return SlowFlowChart(
        name="reciprocal-inhibition-v",
        dim=2,
        tangent=lambda u: slow_flow(u, params),
        lift=lambda u: lift(u, params),
    )
