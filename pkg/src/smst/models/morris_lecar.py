"""Three-dimensional bursting-neuron model (dimensionless Morris-Lecar voltage
dynamics driven by a slow current).

    v' = I - 0.5 (v + 0.5) - 2 w (v + 0.7) - m_inf(v) (v - 1)
    w' = 1.15 (w_inf(v) - w) cosh((v - 0.1) / 0.29)
    I' = eps (k - v)

with the Rinzel-Ermentrout gating functions

    m_inf(v) = 0.5 (1 + tanh((v + 0.01) / 0.15))     (calcium activation)
    w_inf(v) = 0.5 (1 + tanh((v - 0.1) / 0.145))     (potassium gating)

NOTE on the gating constants: published displays of this system sometimes
swap the two tanh gates or drop a digit in the half-activation voltages.  The
assignment above is the standard Rinzel-Ermentrout form: the potassium gate
(0.1, 0.145) pairs with the cosh((v - 0.1)/0.29) time-scale factor, and only
this assignment places the middle-branch saddle point near
(v, w, I) = (-0.1099, 0.0523, 0.0252) as required by the bracketing tests.

The fast variables are (v, w), the slow one is I.  The critical manifold is
parametrized by v via :func:`critical_curve`.  For boundary-value solves the
field is rescaled so the slow component is identically one
(:func:`rescaled_system`), which keeps the I values pinned to the mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import SlowFastSystem, SlowFlowChart, segment_from_arrays
from ..errors import ModelEvaluationError

PHI = 1.15


@dataclass(frozen=True)
class MorrisLecarParams:
    """Drive setpoint k and time-scale ratio eps."""

    k: float
    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")


def m_inf(v: float) -> float:
    return 0.5 * (1.0 + math.tanh((v + 0.01) / 0.15))


def w_inf(v: float) -> float:
    return 0.5 * (1.0 + math.tanh((v - 0.1) / 0.145))


def _m_inf_prime(v: float) -> float:
    c = math.cosh((v + 0.01) / 0.15)
    return 0.5 / (0.15 * c * c)


def _w_inf_prime(v: float) -> float:
    c = math.cosh((v - 0.1) / 0.145)
    return 0.5 / (0.145 * c * c)


def _fv(v: float, w: float, i: float) -> float:
    return i - 0.5 * (v + 0.5) - 2.0 * w * (v + 0.7) - m_inf(v) * (v - 1.0)


def _fw(v: float, w: float) -> float:
    return PHI * (w_inf(v) - w) * math.cosh((v - 0.1) / 0.29)


def _fast_jac_entries(v: float, w: float):
    dfv_dv = -0.5 - 2.0 * w - _m_inf_prime(v) * (v - 1.0) - m_inf(v)
    dfv_dw = -2.0 * (v + 0.7)
    ch = math.cosh((v - 0.1) / 0.29)
    sh = math.sinh((v - 0.1) / 0.29)
    dfw_dv = PHI * (_w_inf_prime(v) * ch + (w_inf(v) - w) * sh / 0.29)
    dfw_dw = -PHI * ch
    return dfv_dv, dfv_dw, dfw_dv, dfw_dw


def system(params: MorrisLecarParams) -> SlowFastSystem:
    """The model in standard slow-fast form: fast (v, w), slow I."""
    k, eps = params.k, params.epsilon

    def fast(x, y, e):
        return np.array([_fv(x[0], x[1], y[0]), _fw(x[0], x[1])])

    def slow(x, y, e):
        return np.array([k - x[0]])

    def fast_jac(x, y, e):
        a, b, c, d = _fast_jac_entries(x[0], x[1])
        return np.array([[a, b], [c, d]])

    def full_jac(z):
        v, w, i = z
        a, b, c, d = _fast_jac_entries(v, w)
        return np.array(
            [
                [a / eps, b / eps, 1.0 / eps],
                [c / eps, d / eps, 0.0],
                [-1.0, 0.0, 0.0],
            ]
        )

    def rhs(z):
        v, w, i = z
        return np.array([_fv(v, w, i) / eps, _fw(v, w) / eps, k - v])

    return SlowFastSystem(
        name="morris-lecar",
        fast_dim=2,
        slow_dim=1,
        epsilon=eps,
        fast_field=fast,
        slow_field=slow,
        fast_jacobian=fast_jac,
        full_jacobian=full_jac,
        rhs=rhs,
        params={"k": k, "epsilon": eps},
    )


# Extended-precision twins of the fast rates.  The boundary-value residual
# divides the fast field by eps*(k - v) ~ 1e-4, so plain double round-off
# (~2e-16 absolute, from cancellation among the O(0.1) current terms) would
# floor the Newton residual near 1e-12.  Evaluating in x86 long double pushes
# the floor three orders of magnitude down.  Only the solver-facing rescaled
# system pays the (small) cost; the integration path stays on plain doubles.
_LD = np.longdouble


def _fv_hp(v, w, i):
    v = _LD(v)
    w = _LD(w)
    m = _LD(0.5) * (_LD(1.0) + np.tanh((v + _LD(0.01)) / _LD(0.15)))
    return _LD(i) - _LD(0.5) * (v + _LD(0.5)) - _LD(2.0) * w * (v + _LD(0.7)) - m * (v - _LD(1.0))


def _fw_hp(v, w):
    v = _LD(v)
    w = _LD(w)
    winf = _LD(0.5) * (_LD(1.0) + np.tanh((v - _LD(0.1)) / _LD(0.145)))
    return _LD(PHI) * (winf - w) * np.cosh((v - _LD(0.1)) / _LD(0.29))


def rescaled_system(params: MorrisLecarParams) -> SlowFastSystem:
    """The model rescaled so the slow component is identically 1.

    Dividing the field by the slow rate (k - v) makes I advance uniformly, so
    mesh times equal I values and the I coordinates stay fixed during Newton
    iteration.  Undefined where v = k.
    """
    k, eps = params.k, params.epsilon
    k_hp = _LD(k)

    def _den(v: float) -> float:
        den = k - v
        if den == 0.0:
            raise ModelEvaluationError(
                "rescaled field undefined where v equals the drive setpoint k"
            )
        return den

    def fast(x, y, e):
        _den(x[0])
        den = k_hp - _LD(x[0])
        return np.array(
            [float(_fv_hp(x[0], x[1], y[0]) / den), float(_fw_hp(x[0], x[1]) / den)]
        )

    def slow(x, y, e):
        return np.array([1.0])

    def fast_jac(x, y, e):
        v, w = x[0], x[1]
        den = _den(v)
        a, b, c, d = _fast_jac_entries(v, w)
        fv = _fv(v, w, y[0])
        fw = _fw(v, w)
        # quotient rule: d/dv (F/(k-v)) = F'/(k-v) + F/(k-v)^2
        return np.array(
            [
                [a / den + fv / den**2, b / den],
                [c / den + fw / den**2, d / den],
            ]
        )

    def full_jac(z):
        v, w, i = z
        den = _den(v)
        a, b, c, d = _fast_jac_entries(v, w)
        fv = _fv(v, w, i)
        fw = _fw(v, w)
        return np.array(
            [
                [(a / den + fv / den**2) / eps, b / (den * eps), 1.0 / (den * eps)],
                [(c / den + fw / den**2) / eps, d / (den * eps), 0.0],
                [0.0, 0.0, 0.0],
            ]
        )

    def rhs(z):
        v, w, i = z
        _den(v)
        scale = _LD(eps) * (k_hp - _LD(v))
        return np.array(
            [float(_fv_hp(v, w, i) / scale), float(_fw_hp(v, w) / scale), 1.0]
        )

    return SlowFastSystem(
        name="morris-lecar-rescaled",
        fast_dim=2,
        slow_dim=1,
        epsilon=eps,
        fast_field=fast,
        slow_field=slow,
        fast_jacobian=fast_jac,
        full_jacobian=full_jac,
        rhs=rhs,
        params={"k": k, "epsilon": eps},
    )


def critical_curve(v: float) -> np.ndarray:
    """Point (v, w, I) of the critical manifold at membrane potential ``v``."""
    w = w_inf(v)
    i = 0.5 * (v + 0.5) + 2.0 * w * (v + 0.7) + m_inf(v) * (v - 1.0)
    return np.array([v, w, i])


def critical_current(v: float) -> float:
    return float(critical_curve(v)[2])


def _di_dv(v: float) -> float:
    w = w_inf(v)
    return (
        0.5
        + 2.0 * _w_inf_prime(v) * (v + 0.7)
        + 2.0 * w
        + _m_inf_prime(v) * (v - 1.0)
        + m_inf(v)
    )


def fold_points(v_lo: float = -0.5, v_hi: float = 0.3, samples: int = 4000) -> list[float]:
    """Voltages where the critical curve folds (dI/dv = 0), by bisection."""
    vs = np.linspace(v_lo, v_hi, samples)
    ds = np.array([_di_dv(v) for v in vs])
    roots = []
    for i in range(samples - 1):
        if ds[i] == 0.0:
            roots.append(float(vs[i]))
        elif ds[i] * ds[i + 1] < 0:
            a, b = float(vs[i]), float(vs[i + 1])
            for _ in range(80):
                mid = 0.5 * (a + b)
                if _di_dv(a) * _di_dv(mid) <= 0:
                    b = mid
                else:
                    a = mid
            roots.append(0.5 * (a + b))
    return roots


def candidate_segment(params: MorrisLecarParams, v_lo: float, v_hi: float, points: int):
    """Critical-manifold seed for the rescaled boundary-value solve.

    Knots are uniform in v; mesh times are the I values themselves (the
    rescaled field advances I at unit rate), ordered increasingly.
    """
    if points < 2:
        raise ValueError("need at least two knots")
    vs = np.linspace(v_lo, v_hi, points)
    states = np.array([critical_curve(v) for v in vs])
    times = states[:, 2]
    if times[0] > times[-1]:
        states = states[::-1]
        times = times[::-1]
    if not np.all(np.diff(times) > 0):
        raise ValueError("critical current is not monotone on this v range (fold inside)")
    return segment_from_arrays(times, states)


def v_chart(params: MorrisLecarParams) -> SlowFlowChart:
    """Slow flow on the critical manifold in the v chart (true slow time)."""

    def tangent(u):
        v = u[0]
        return np.array([(params.k - v) / _di_dv(v)])

    return SlowFlowChart(
        name="morris-lecar-v",
        dim=1,
        tangent=tangent,
        lift=lambda u: critical_curve(u[0]),
    )
