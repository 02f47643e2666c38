"""Shared machinery for trajectory-fan experiments: departure-guarded
integration relative to a computed slow-manifold segment, curve distances,
and nearest-approach computation between polylines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import SlowFastSystem, TrajectorySegment, assemble_field, strong_directions
from ..errors import SmstError
from ..ivp import IvpOptions, Section, integrate_field
from ..solver import hermite_eval


def curve_min_distance(points: np.ndarray, curve: np.ndarray, chunk: int = 2048):
    """Per-point minimum Euclidean distance to a polyline's knots.

    Returns ``(distances, nearest_indices)``; chunked to bound memory.
    """
    points = np.atleast_2d(points)
    dists = np.empty(points.shape[0])
    idx = np.empty(points.shape[0], dtype=int)
    for lo in range(0, points.shape[0], chunk):
        block = points[lo : lo + chunk]
        diff = block[:, None, :] - curve[None, :, :]
        dd = np.sqrt((diff * diff).sum(-1))
        dists[lo : lo + chunk] = dd.min(1)
        idx[lo : lo + chunk] = dd.argmin(1)
    return dists, idx


@dataclass(frozen=True)
class SlowManifoldFrame:
    """A computed slow-manifold segment with its knot fields and the strong
    stable/unstable fast directions at the knots (of the integration system,
    which may differ from the system solved)."""

    segment: TrajectorySegment
    knot_fields: np.ndarray
    fast_curve: np.ndarray
    stable_dirs: np.ndarray
    unstable_dirs: np.ndarray
    flow_system: SlowFastSystem

    @classmethod
    def build(cls, solve_system, flow_system, segment):
        fields = np.array([assemble_field(solve_system, z) for z in segment.states])
        m = flow_system.fast_dim
        sdirs, udirs = [], []
        for z in segment.states:
            sd = strong_directions(flow_system, z)
            sdirs.append(sd.stable_vectors[0][:m])
            udirs.append(sd.unstable_vectors[0][:m])
        return cls(
            segment=segment,
            knot_fields=fields,
            fast_curve=segment.states[:, :m].copy(),
            stable_dirs=np.array(sdirs),
            unstable_dirs=np.array(udirs),
            flow_system=flow_system,
        )

    def point_at(self, t: float) -> np.ndarray:
        """Spline-interpolated slow-manifold point at mesh time ``t``."""
        return hermite_eval(self.segment, self.knot_fields, float(t))

    def directions_at(self, z: np.ndarray):
        sd = strong_directions(self.flow_system, z)
        return sd.stable_vectors[0], sd.unstable_vectors[0]


@dataclass
class FanRun:
    """Outcome of one departure-guarded trajectory."""

    departed: bool
    departure_time: float
    side: float
    times: np.ndarray
    states: np.ndarray
    hit: np.ndarray | None = None
    hit_time: float | None = None


def run_fan_trajectory(
    frame: SlowManifoldFrame,
    z0: np.ndarray,
    t_span: float,
    opts: IvpOptions,
    threshold: float = 1e-2,
    stop_radius: float | None = None,
    section: Section | None = None,
    section_t_extra: float | None = None,
    escape=None,
    side_dirs: np.ndarray | None = None,
) -> FanRun:
    """Integrate from ``z0`` watching the distance to the slow manifold.

    Phase 1 runs until the fast-coordinate distance to the manifold exceeds
    ``threshold`` (the departure).  The departure side is the sign of the
    deviation projected on ``side_dirs`` (per-knot rows; defaults to the
    unstable directions).  Afterwards, if a ``section`` is given, phase 2
    integrates to the section crossing (guarded by ``escape``); otherwise
    integration continues until the distance reaches ``stop_radius`` or the
    span ends.  Negative ``t_span`` integrates backward.
    """
    sys = frame.flow_system
    m = sys.fast_dim
    rhs = (lambda t, z: sys.rhs(z)) if sys.rhs is not None else (lambda t, z: sys.field(z))
    dirs = frame.unstable_dirs if side_dirs is None else side_dirs

    dep = {"hit": False, "t": np.nan, "side": 0.0}

    def watch(t, z):
        diff = frame.fast_curve - z[:m]
        dd = (diff * diff).sum(1)
        j = int(np.argmin(dd))
        if np.sqrt(dd[j]) > threshold:
            dep["hit"] = True
            dep["t"] = t
            dep["side"] = float(np.sign(np.dot(z[:m] - frame.fast_curve[j], dirs[j])))
            return True
        return False

    times, states, _ = integrate_field(rhs, z0, (0.0, t_span), opts, callback=watch)
    run = FanRun(
        departed=dep["hit"],
        departure_time=abs(dep["t"]) if dep["hit"] else np.nan,
        side=dep["side"],
        times=np.asarray(times),
        states=np.asarray(states),
    )
    if not dep["hit"]:
        return run

    t1, z1 = times[-1], states[-1]
    if section is not None:
        extra = section_t_extra if section_t_extra is not None else abs(t_span)
        try:
            times2, states2, hit = integrate_field(
                rhs,
                z1,
                (t1, t1 + np.sign(t_span) * extra),
                opts,
                section=section,
                callback=escape,
            )
        except SmstError:
            return run
        run.times = np.concatenate([run.times, np.asarray(times2)[1:]])
        run.states = np.vstack([run.states, np.asarray(states2)[1:]])
        if hit is not None:
            run.hit = hit[1]
            run.hit_time = abs(hit[0])
        return run

    if stop_radius is not None and stop_radius > threshold:
        def tail_watch(t, z):
            d, _ = curve_min_distance(z[None, :m], frame.fast_curve)
            return bool(d[0] > stop_radius)

        try:
            times2, states2, _ = integrate_field(
                rhs, z1, (t1, np.sign(t_span) * abs(t_span)), opts, callback=tail_watch
            )
            run.times = np.concatenate([run.times, np.asarray(times2)[1:]])
            run.states = np.vstack([run.states, np.asarray(states2)[1:]])
        except SmstError:
            pass
    return run


def polyline_nearest_approach(a: np.ndarray, b: np.ndarray):
    """Closest pair between two polylines: knot scan plus exact local
    point-to-segment refinement around the best knot pair.

    Returns ``(distance, index_a, index_b, point_a, point_b)``.
    """
    best = (np.inf, 0, 0)
    chunk = 2048
    for lo in range(0, a.shape[0], chunk):
        block = a[lo : lo + chunk]
        diff = block[:, None, :] - b[None, :, :]
        dd = (diff * diff).sum(-1)
        j = int(np.argmin(dd))
        r, c = divmod(j, b.shape[0])
        if dd[r, c] < best[0]:
            best = (dd[r, c], lo + r, c)
    _, ia, ib = best

    def seg_point(p, q0, q1):
        d = q1 - q0
        denom = float(np.dot(d, d))
        s = 0.0 if denom == 0 else np.clip(np.dot(p - q0, d) / denom, 0.0, 1.0)
        return q0 + s * d

    best_d = np.inf
    best_pa = a[ia]
    best_pb = b[ib]
    for i in range(max(0, ia - 1), min(a.shape[0] - 1, ia + 1) + 1):
        if i + 1 >= a.shape[0]:
            continue
        for jj in range(max(0, ib - 1), min(b.shape[0] - 1, ib + 1) + 1):
            if jj + 1 >= b.shape[0]:
                continue
            # alternate point-on-segment projections, a few sweeps
            pa = a[i].copy()
            pb = b[jj].copy()
            for _ in range(8):
                pb = seg_point(pa, b[jj], b[jj + 1])
                pa = seg_point(pb, a[i], a[i + 1])
            d = float(np.linalg.norm(pa - pb))
            if d < best_d:
                best_d, best_pa, best_pb = d, pa, pb
    return best_d, ia, ib, best_pa, best_pb


def downsample_indices(n: int, target: int) -> np.ndarray:
    if n <= target:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, target).astype(int))
