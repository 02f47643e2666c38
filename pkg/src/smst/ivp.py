"""Adaptive initial-value integration: an embedded Dormand-Prince 5(4) pair
with proportional-integral step control, a free fourth-order dense
interpolant, and bisection event location on cross-sections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import SlowFastSystem, TrajectorySegment, segment_from_arrays
from .errors import (
    ModelEvaluationError,
    SectionMissError,
    StepLimitError,
    StiffnessError,
)

# Dormand-Prince 5(4) tableau.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = tuple(
    np.array(row)
    for row in (
        (1 / 5,),
        (3 / 40, 9 / 40),
        (44 / 45, -56 / 15, 32 / 9),
        (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
        (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
        (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
    )
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
# Free quartic interpolant: y(t0 + theta*h) = y0 + h * K^T P [theta, ..., theta^4].
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_BETA = 0.04  # PI stabilization exponent (Hairer's dopri5 controller)
_EXPONENT = 0.2 - 0.75 * _BETA


@dataclass(frozen=True)
class IvpOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    max_steps: int = 10_000_000
    dense_output: bool = False

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Section:
    """A cross-section {z : l(z) = level} with a crossing sense.

    ``functional`` is either a coordinate index or a linear functional vector;
    ``direction`` is the sense of the crossing along the computed trajectory:
    'increasing', 'decreasing', or 'either'.
    """

    functional: int | np.ndarray
    level: float
    direction: str = "either"

    def __post_init__(self):
        if self.direction not in ("increasing", "decreasing", "either"):
            raise ValueError("direction must be increasing, decreasing, or either")
        if not isinstance(self.functional, (int, np.integer)):
            vec = np.asarray(self.functional, dtype=float)
            if not np.any(vec != 0):
                raise ValueError("section functional must be nonzero")
            object.__setattr__(self, "functional", vec)

    def value(self, z: np.ndarray) -> float:
        if isinstance(self.functional, (int, np.integer)):
            return float(z[self.functional]) - self.level
        return float(np.dot(self.functional, z)) - self.level

    @property
    def tolerance(self) -> float:
        return 1e-12 * max(1.0, abs(self.level))


class DenseStep:
    """Quartic interpolant over one accepted step."""

    __slots__ = ("t_old", "h", "y_old", "q")

    def __init__(self, t_old, h, y_old, stages):
        self.t_old = t_old
        self.h = h
        self.y_old = y_old
        self.q = stages.T @ _P  # (dim, 4)

    def __call__(self, t: float) -> np.ndarray:
        theta = (t - self.t_old) / self.h
        powers = np.array([theta, theta**2, theta**3, theta**4])
        return self.y_old + self.h * (self.q @ powers)


def _rms_norm(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(rhs, t0, y0, f0, direction, span, opts: IvpOptions) -> float:
    scale = opts.abs_tol + opts.rel_tol * np.abs(y0)
    d0 = _rms_norm(y0 / scale)
    d1 = _rms_norm(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = rhs(t0 + h0 * direction, y1)
    d2 = _rms_norm((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span, opts.max_step)


def integrate_field(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    z0: np.ndarray,
    t_span: tuple[float, float],
    opts: IvpOptions | None = None,
    section: Section | None = None,
    callback: Callable[[float, np.ndarray], bool] | None = None,
):
    """Integrate ``dz/dt = rhs(t, z)`` over ``t_span`` (backward if reversed).

    Returns ``(times, states, hit)`` where ``hit`` is ``None`` or
    ``(t_hit, z_hit)`` if a section crossing was located (the output is then
    truncated at the hit).  ``callback(t, z)``, if given, is called after each
    accepted step and stops the integration early when it returns True.
    """
    opts = opts or IvpOptions()
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.array(z0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ModelEvaluationError("non-finite initial state", z=y)
    times = [t0]
    states = [y.copy()]
    if t1 == t0:
        return times, states, None

    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    f_cur = np.asarray(rhs(t0, y), dtype=float)
    h_abs = _initial_step(rhs, t0, y, f_cur, direction, span, opts)
    t = t0
    q_prev = section.value(y) if section is not None else 0.0
    if section is not None and section.direction == "either" and abs(q_prev) <= section.tolerance:
        return times, states, (t0, y.copy())

    err_prev = 1e-4
    n_steps = 0
    stages = np.empty((7, y.size))
    while True:
        if n_steps >= opts.max_steps:
            raise StepLimitError(
                f"integration exceeded {opts.max_steps} steps at t={t}", t=t, z=y
            )
        if h_abs < 1e-14 * span:
            raise StiffnessError(
                f"step size collapsed to {h_abs:.3e} at t={t}", t=t, z=y
            )
        h_abs = min(h_abs, opts.max_step)
        if h_abs >= abs(t1 - t):
            h_abs = abs(t1 - t)
            t_new = t1
        else:
            t_new = t + direction * h_abs
        h = t_new - t

        stages[0] = f_cur
        for i, (ci, ai) in enumerate(zip(_C[1:], _A), start=1):
            dy = h * (stages[:i].T @ ai)
            stages[i] = rhs(t + ci * h, y + dy)
        y_new = y + h * (stages[:6].T @ _B[:6])
        stages[6] = rhs(t_new, y_new)
        if not np.all(np.isfinite(y_new)):
            raise ModelEvaluationError(f"non-finite state during integration at t={t_new}", z=y_new)

        scale = opts.abs_tol + opts.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms_norm((h * (stages.T @ _E)) / scale)
        n_steps += 1
        if err > 1.0:
            h_abs *= max(_MIN_FACTOR, _SAFETY * err**-0.2)
            continue

        # PI controller (accepted step).
        factor = _SAFETY * err**-_EXPONENT * err_prev**_BETA if err > 0 else _MAX_FACTOR
        h_abs *= min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        err_prev = max(err, 1e-4)

        hit = None
        if section is not None:
            q_new = section.value(y_new)
            crossed = False
            if section.direction in ("increasing", "either") and q_prev < 0.0 <= q_new:
                crossed = True
            if section.direction in ("decreasing", "either") and q_prev > 0.0 >= q_new:
                crossed = True
            if crossed:
                dense = DenseStep(t, h, y, stages)
                hit = _refine_crossing(dense, section, t, t_new, q_prev, q_new)
            q_prev = q_new

        if hit is not None:
            t_hit, z_hit = hit
            if t_hit != times[-1]:
                times.append(t_hit)
                states.append(z_hit)
            else:
                states[-1] = z_hit
            return times, states, hit

        t = t_new
        y = y_new
        f_cur = stages[6]  # FSAL
        times.append(t)
        states.append(y.copy())
        if callback is not None and callback(t, y):
            return times, states, None
        if t == t1:
            return times, states, None


def _refine_crossing(dense, section: Section, ta, tb, qa, qb):
    """Bisect the dense interpolant until the section residual is resolved."""
    tol = section.tolerance
    lo, hi = ta, tb
    q_lo = qa
    t_best, q_best = (tb, qb) if abs(qb) < abs(qa) else (ta, qa)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        q_mid = section.value(dense(mid))
        if abs(q_mid) < abs(q_best):
            t_best, q_best = mid, q_mid
        if abs(q_best) <= tol or abs(hi - lo) <= abs(np.spacing(mid)):
            break
        if (q_lo < 0) == (q_mid < 0):
            lo, q_lo = mid, q_mid
        else:
            hi = mid
    return t_best, dense(t_best)


def _system_rhs(system: SlowFastSystem):
    fused = system.rhs
    if fused is not None:
        return lambda t, z: fused(z)
    return lambda t, z: system.field(z)


def integrate(
    system: SlowFastSystem,
    z0: np.ndarray,
    t_span: tuple[float, float],
    opts: IvpOptions | None = None,
) -> TrajectorySegment:
    """Integrate the slow-time field over ``t_span``.

    Output knots carry the exact accepted step times.  For backward spans the
    knots are reported in increasing time order (the curve is the same).  A
    zero-length span returns the initial state unchanged.
    """
    times, states, _ = integrate_field(_system_rhs(system), z0, t_span, opts)
    arr_t = np.asarray(times)
    arr_z = np.asarray(states)
    if arr_t.size > 1 and arr_t[0] > arr_t[-1]:
        arr_t = arr_t[::-1]
        arr_z = arr_z[::-1]
    out = segment_from_arrays(arr_t, arr_z)
    if not np.all(np.isfinite(out.states)):
        raise ModelEvaluationError("integration produced non-finite states")
    return out


def integrate_to_section(
    system: SlowFastSystem,
    z0: np.ndarray,
    section: Section,
    opts: IvpOptions | None = None,
    t_max: float = np.inf,
    t0: float = 0.0,
) -> tuple[np.ndarray, float, TrajectorySegment]:
    """Integrate until the section is crossed in the requested sense.

    ``t_max`` may be negative for backward integration; the crossing sense is
    understood along the computed trajectory.  Raises
    :class:`SectionMissError` when no crossing occurs before ``t_max``.
    """
    if not np.isfinite(t_max):
        raise ValueError("t_max must be finite")
    times, states, hit = integrate_field(
        _system_rhs(system), z0, (t0, t_max), opts, section=section
    )
    if hit is None:
        raise SectionMissError(
            f"no section crossing before t={t_max}", t=times[-1], z=states[-1]
        )
    t_hit, z_hit = hit
    arr_t = np.asarray(times)
    arr_z = np.asarray(states)
    if arr_t.size > 1 and arr_t[0] > arr_t[-1]:
        arr_t = arr_t[::-1]
        arr_z = arr_z[::-1]
    return z_hit, t_hit, segment_from_arrays(arr_t, arr_z)


def displaced_pair(base: np.ndarray, direction: np.ndarray, distance: float):
    """The pair of states straddling ``base`` along a unit ``direction``."""
    base = np.asarray(base, dtype=float)
    direction = np.asarray(direction, dtype=float)
    nrm = float(np.linalg.norm(direction))
    if not np.isclose(nrm, 1.0, rtol=0, atol=1e-8):
        raise ValueError(f"direction must be a unit vector, |d| = {nrm}")
    return base + distance * direction, base - distance * direction
