"""Bursting-neuron experiments: bracketing accuracy ladders, unstable/stable
manifold sweeps onto a cross-section, the crossing scan in the time-scale
ratio, and the section return map with spike counts."""

from __future__ import annotations

import numpy as np

from ..core import strong_directions
from ..errors import SmstError
from ..ivp import IvpOptions, Section, displaced_pair, integrate_field
from ..models import morris_lecar as ml
from ..solver import SmstOptions, shadowing_gap, smst_compute
from .common import FanRun, SlowManifoldFrame, downsample_indices, run_fan_trajectory
from .result import ExperimentResult

#: Distance from the computed slow manifold (fast coordinates) at which a
#: trajectory counts as departed.
DEPARTURE_THRESHOLD = 1e-2

#: Shadow-verification horizon for the rescaled solve, in multiples of eps.
#: (Measured in the rescaled time, where the slow coordinate advances at
#: unit rate.)
SHADOW_FACTOR = 5.0
SHADOW_BOUND = 1e-6


def _escape_guard(t, z):
    return abs(z[0]) > 0.6 or z[2] < -0.01 or z[2] > 0.13


def retime_to_slow_time(segment, k: float, rescaled_system=None):
    """Re-parametrize a rescaled-solve segment by true slow time.

    The rescaled mesh advances the drive current at unit rate, so real slow
    time accumulates as dt = d(sigma)/(k - v); Simpson quadrature with the
    spline midpoint keeps the re-timing error far below the spline error.
    The drive decreases in real time on the saddle branch, so the knot order
    reverses.
    """
    from ..core import assemble_field as _field
    from ..core import segment_from_arrays
    from ..solver import hermite_eval as _heval

    times = segment.times
    states = segment.states
    knot_fields = None
    if rescaled_system is not None:
        knot_fields = np.array([_field(rescaled_system, z) for z in states])
    tau = np.zeros(times.size)
    for j in range(times.size - 1):
        a, b = times[j], times[j + 1]
        v_a, v_b = states[j, 0], states[j + 1, 0]
        if knot_fields is not None:
            v_m = float(_heval(segment, knot_fields, 0.5 * (a + b))[0])
        else:
            v_m = 0.5 * (v_a + v_b)
        rate_a = 1.0 / (k - v_a)
        rate_m = 1.0 / (k - v_m)
        rate_b = 1.0 / (k - v_b)
        tau[j + 1] = tau[j] + (b - a) / 6.0 * (rate_a + 4.0 * rate_m + rate_b)
    if tau[-1] < 0:
        return segment_from_arrays(tau[::-1] - tau[-1], states[::-1].copy())
    return segment_from_arrays(tau, states.copy())


def compute_manifold_frame(
    k: float,
    epsilon: float,
    v_range,
    mesh_points: int,
    smst_options: SmstOptions | None = None,
    verify_shadow: bool = True,
):
    """Slow-manifold segment via the rescaled solve plus fan machinery.

    Returns ``(frame, report)``; the frame's flow system is the unrescaled
    model, which is what fan trajectories integrate.  Before use the
    solution is re-verified by the shadowing check in true slow time.
    """
    params = ml.MorrisLecarParams(k=k, epsilon=epsilon)
    rescaled = ml.rescaled_system(params)
    flow = ml.system(params)
    candidate = ml.candidate_segment(params, v_range[0], v_range[1], mesh_points)
    segment, report = smst_compute(rescaled, candidate, smst_options)
    if not report.converged:
        raise SmstError(
            f"slow-manifold solve did not converge (residual {report.final_residual:.3e})"
        )
    if verify_shadow:
        gap = shadowing_gap(
            flow,
            retime_to_slow_time(segment, k, rescaled),
            horizon=SHADOW_FACTOR * epsilon,
        )
        if gap > SHADOW_BOUND:
            raise SmstError(
                f"slow-manifold shadowing check failed: gap {gap:.3e} > {SHADOW_BOUND:.0e}"
            )
    frame = SlowManifoldFrame.build(rescaled, flow, segment)
    return frame, report


def bracketing_test(
    k: float = -0.22,
    epsilon: float = 0.002,
    v_range=(-0.20, -0.06),
    mesh_points: int = 200,
    base_point_v: float = -0.11,
    distances=(1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9),
    t_span: float = 0.05,
    departure_threshold: float = DEPARTURE_THRESHOLD,
    stop_radius: float = 0.45,
    ivp: dict | None = None,
    smst: dict | None = None,
    keep_trajectories: bool = True,
) -> ExperimentResult:
    """Displaced-pair ladders along the strong stable/unstable directions.

    For each distance, the pair displaced along the strong unstable direction
    is integrated forward and the pair along the strong stable direction
    backward; a rung passes when the pair departs to opposite sides.
    """
    opts = IvpOptions(**{"rel_tol": 1e-12, "abs_tol": 1e-14, **(ivp or {})})
    frame, report = compute_manifold_frame(
        k, epsilon, v_range, mesh_points, SmstOptions(**(smst or {}))
    )
    seg = frame.segment
    idx = int(np.argmin(np.abs(seg.states[:, 0] - base_point_v)))
    base = seg.states[idx]
    s_dir, u_dir = frame.directions_at(base)

    result = ExperimentResult(
        name="bracketing-test",
        inputs={
            "k": k,
            "epsilon": epsilon,
            "v_range": list(v_range),
            "mesh_points": mesh_points,
            "base_point": base.tolist(),
            "distances": list(distances),
            "t_span": t_span,
            "departure_threshold": departure_threshold,
        },
    )
    result.add_report("slow-manifold", report)

    ladder_rows = []
    traj_rows = []

    def record_traj(family, distance, run: FanRun):
        if not keep_trajectories:
            return
        keep = downsample_indices(run.states.shape[0], 400)
        for i in keep:
            traj_rows.append(
                (
                    {"wu+": 0, "wu-": 1, "ws+": 2, "ws-": 3}[family],
                    distance,
                    run.times[i],
                    run.states[i, 0],
                    run.states[i, 1],
                    run.states[i, 2],
                )
            )

    for d in distances:
        runs = {}
        zp, zm = displaced_pair(base, u_dir, d)
        runs["wu+"] = run_fan_trajectory(
            frame, zp, t_span, opts, departure_threshold, stop_radius=stop_radius
        )
        runs["wu-"] = run_fan_trajectory(
            frame, zm, t_span, opts, departure_threshold, stop_radius=stop_radius
        )
        zp, zm = displaced_pair(base, s_dir, d)
        runs["ws+"] = run_fan_trajectory(
            frame, zp, -t_span, opts, departure_threshold,
            stop_radius=stop_radius, side_dirs=frame.stable_dirs,
        )
        runs["ws-"] = run_fan_trajectory(
            frame, zm, -t_span, opts, departure_threshold,
            stop_radius=stop_radius, side_dirs=frame.stable_dirs,
        )
        for fam, run in runs.items():
            record_traj(fam, d, run)
        for pair, (fa, fb) in {"unstable": ("wu+", "wu-"), "stable": ("ws+", "ws-")}.items():
            ra, rb = runs[fa], runs[fb]
            both = ra.departed and rb.departed
            opposite = both and ra.side * rb.side < 0
            ladder_rows.append(
                (
                    d,
                    0 if pair == "unstable" else 1,
                    1.0 if ra.departed else 0.0,
                    1.0 if rb.departed else 0.0,
                    ra.side,
                    rb.side,
                    1.0 if opposite else 0.0,
                    ra.departure_time,
                    rb.departure_time,
                )
            )

    result.add_table(
        "ladder",
        (
            "distance [state]",
            "family [0=unstable; 1=stable]",
            "departed_plus [bool]",
            "departed_minus [bool]",
            "side_plus [sign]",
            "side_minus [sign]",
            "opposite [bool]",
            "time_plus [slow time]",
            "time_minus [slow time]",
        ),
        ladder_rows,
    )
    if keep_trajectories:
        result.add_table(
            "trajectories",
            (
                "family [0=wu+; 1=wu-; 2=ws+; 3=ws-]",
                "distance [state]",
                "t [slow time]",
                "v [1]",
                "w [1]",
                "I [1]",
            ),
            traj_rows,
        )
    keepS = downsample_indices(seg.states.shape[0], 400)
    result.add_table(
        "manifold",
        ("v [1]", "w [1]", "I [1]", "critical_w [1]", "critical_I [1]"),
        [
            (
                seg.states[i, 0],
                seg.states[i, 1],
                seg.states[i, 2],
                ml.critical_curve(seg.states[i, 0])[1],
                ml.critical_curve(seg.states[i, 0])[2],
            )
            for i in keepS
        ],
    )

    arr = np.array(ladder_rows)
    opposite_all = bool(np.all(arr[:, 6] > 0.5)) if arr.size else False
    largest_failed = 0.0
    for row in ladder_rows:
        if row[6] < 0.5:
            largest_failed = max(largest_failed, row[0])
    result.summary = {
        "base_v": float(base[0]),
        "all_pairs_opposite": opposite_all,
        "largest_failed_distance": largest_failed,
    }
    return result


def _launch_times(frame, window, count):
    times = frame.segment.times
    lo = max(window[0], float(times[0]))
    hi = min(window[1], float(times[-1]))
    return np.linspace(lo, hi, count)


def _unstable_hits(frame, launch_window, n_points, displacement, section_level, opts,
                   threshold, collect=None):
    """Forward fan to the section from both unstable sides, per launch point."""
    section = Section(2, section_level, "decreasing")
    rows = []
    for launch_t in _launch_times(frame, launch_window, n_points):
        base = frame.point_at(launch_t)
        _, u_dir = frame.directions_at(base)
        for side, z0 in zip((1, -1), displaced_pair(base, u_dir, displacement)):
            run = run_fan_trajectory(
                frame, z0, 3.0, opts, threshold,
                section=section, escape=_escape_guard,
            )
            if collect is not None:
                collect(side, launch_t, base, run)
            rows.append((launch_t, base[0], side, run))
    return rows


def _stable_hits(frame, launch_window, n_points, displacement, section_level, opts,
                 threshold, collect=None):
    """Backward fan to the section; crossing sense is increasing along the
    backward run, the forward-decreasing sense of the spiking families."""
    section = Section(2, section_level, "increasing")
    rows = []
    for launch_t in _launch_times(frame, launch_window, n_points):
        base = frame.point_at(launch_t)
        s_dir, _ = frame.directions_at(base)
        for side, z0 in zip((1, -1), displaced_pair(base, s_dir, displacement)):
            run = run_fan_trajectory(
                frame, z0, -3.0, opts, threshold,
                section=section, escape=_escape_guard,
                side_dirs=frame.stable_dirs, section_t_extra=3.0,
            )
            if collect is not None:
                collect(side, launch_t, base, run)
            rows.append((launch_t, base[0], side, run))
    return rows


def manifold_sweep(
    k: float = -0.22,
    epsilon: float = 0.006366,
    v_range=(-0.213, -0.17),
    mesh_points: int = 200,
    n_points: int = 20,
    displacement: float = 5e-5,
    unstable_window=(0.0665, 0.0745),
    stable_points: int = 4,
    stable_displacement: float = 5e-8,
    stable_window=(0.0709, 0.0717),
    section_level: float = 0.075,
    departure_threshold: float = DEPARTURE_THRESHOLD,
    ivp: dict | None = None,
    smst: dict | None = None,
    keep_trajectories: bool = True,
) -> ExperimentResult:
    """Sweep of the unstable manifold onto the section, plus a short stable
    fan reaching the same section backward."""
    opts = IvpOptions(**{"rel_tol": 1e-10, "abs_tol": 1e-12, "max_steps": 2_000_000,
                         **(ivp or {})})
    frame, report = compute_manifold_frame(
        k, epsilon, v_range, mesh_points, SmstOptions(**(smst or {}))
    )
    result = ExperimentResult(
        name="manifold-sweep",
        inputs={
            "k": k,
            "epsilon": epsilon,
            "v_range": list(v_range),
            "n_points": n_points,
            "displacement": displacement,
            "unstable_window": list(unstable_window),
            "stable_points": stable_points,
            "stable_displacement": stable_displacement,
            "stable_window": list(stable_window),
            "section_level": section_level,
        },
    )
    result.add_report("slow-manifold", report)

    traj_rows = []

    def collector(branch_code):
        def collect(side, launch_t, base, run: FanRun):
            if not keep_trajectories:
                return
            keep = downsample_indices(run.states.shape[0], 350)
            code = branch_code if side > 0 else branch_code + 1
            for i in keep:
                traj_rows.append(
                    (code, launch_t, run.times[i], run.states[i, 0],
                     run.states[i, 1], run.states[i, 2])
                )
        return collect

    u_rows = _unstable_hits(
        frame, unstable_window, n_points, displacement, section_level, opts,
        departure_threshold, collect=collector(0),
    )
    s_rows = _stable_hits(
        frame, stable_window, stable_points, stable_displacement, section_level, opts,
        departure_threshold, collect=collector(2),
    )

    hit_rows = []
    umap_rows = []
    for branch_base, rows in ((0, u_rows), (2, s_rows)):
        for launch_t, launch_v, side, run in rows:
            code = branch_base if side > 0 else branch_base + 1
            if run.hit is None:
                hit_rows.append((code, launch_t, launch_v, np.nan, np.nan, np.nan, np.nan, 0.0))
            else:
                hit_rows.append(
                    (code, launch_t, launch_v, run.hit[0], run.hit[1], run.hit[2],
                     run.hit_time, 1.0)
                )
                if branch_base == 0:
                    umap_rows.append((launch_v, run.hit[0], run.hit[1]))
    result.add_table(
        "hits",
        (
            "branch [0=wu+; 1=wu-; 2=ws+; 3=ws-]",
            "launch_time [section time]",
            "launch_v [1]",
            "hit_v [1]",
            "hit_w [1]",
            "hit_I [1]",
            "hit_time [slow time]",
            "reached [bool]",
        ),
        hit_rows,
    )
    result.add_table(
        "umap",
        ("initial_v [1]", "final_v [1]", "final_w [1]"),
        umap_rows,
    )
    if keep_trajectories:
        result.add_table(
            "trajectories",
            (
                "branch [0=wu+; 1=wu-; 2=ws+; 3=ws-]",
                "launch_time [section time]",
                "t [slow time]",
                "v [1]",
                "w [1]",
                "I [1]",
            ),
            traj_rows,
        )
    keepS = downsample_indices(frame.segment.states.shape[0], 400)
    result.add_table(
        "manifold",
        ("v [1]", "w [1]", "I [1]", "critical_w [1]", "critical_I [1]"),
        [
            (
                frame.segment.states[i, 0],
                frame.segment.states[i, 1],
                frame.segment.states[i, 2],
                ml.critical_curve(frame.segment.states[i, 0])[1],
                ml.critical_curve(frame.segment.states[i, 0])[2],
            )
            for i in keepS
        ],
    )

    finals = np.array([r for r in umap_rows]) if umap_rows else np.empty((0, 3))
    summary = {"unstable_hits": int(len(umap_rows)),
               "stable_hits": int(sum(1 for r in hit_rows if r[0] >= 2 and r[7] > 0.5))}
    if len(umap_rows):
        vmin = float(finals[:, 1].min())
        cluster = finals[np.abs(finals[:, 1] - vmin) < 1.5e-3]
        summary.update(
            {
                "funnel_v": vmin,
                "funnel_w": float(finals[np.argmin(finals[:, 1]), 2]),
                "cluster_count": int(cluster.shape[0]),
                "cluster_radius": float(
                    np.max(np.linalg.norm(cluster[:, 1:] - cluster[:, 1:].mean(0), axis=1))
                ),
            }
        )
    result.summary = summary
    return result


def section_scan(
    k: float = -0.22,
    epsilons=(0.006362, 0.006366, 0.006367),
    v_range=(-0.213, -0.17),
    mesh_points: int = 200,
    n_points: int = 20,
    displacement: float = 5e-5,
    unstable_window=(0.0665, 0.0745),
    stable_scan_points: int = 48,
    stable_displacement: float = 5e-8,
    stable_window=(0.0709, 0.0717),
    section_level: float = 0.075,
    ws_v_window=(0.001, 0.016),
    ws_w_window=(0.35, 0.39),
    departure_threshold: float = DEPARTURE_THRESHOLD,
    ivp: dict | None = None,
    smst: dict | None = None,
) -> ExperimentResult:
    """Signed vertical gap between the unstable-manifold hits and the
    piecewise-linear stable-manifold trace on the section, per epsilon."""
    opts = IvpOptions(**{"rel_tol": 1e-11, "abs_tol": 1e-13, "max_steps": 2_000_000,
                         **(ivp or {})})
    result = ExperimentResult(
        name="section-scan",
        inputs={
            "k": k,
            "epsilons": list(epsilons),
            "v_range": list(v_range),
            "n_points": n_points,
            "displacement": displacement,
            "unstable_window": list(unstable_window),
            "stable_scan_points": stable_scan_points,
            "stable_window": list(stable_window),
            "section_level": section_level,
        },
    )
    gap_rows = []
    hit_rows = []
    per_eps = {}
    for eps in epsilons:
        frame, report = compute_manifold_frame(
            k, eps, v_range, mesh_points, SmstOptions(**(smst or {}))
        )
        result.add_report(f"slow-manifold-{eps}", report)
        u_rows = _unstable_hits(
            frame, unstable_window, n_points, displacement, section_level, opts,
            departure_threshold,
        )
        u_hits = np.array(
            [r[3].hit[:2] for r in u_rows if r[3].hit is not None]
        )
        s_rows = _stable_hits(
            frame, stable_window, stable_scan_points, stable_displacement,
            section_level, opts, departure_threshold,
        )
        s_all = [r[3].hit[:2] for r in s_rows if r[3].hit is not None]
        s_hits = np.array(
            sorted(
                {
                    (float(v), float(w))
                    for v, w in s_all
                    if ws_v_window[0] < v < ws_v_window[1]
                    and ws_w_window[0] < w < ws_w_window[1]
                }
            )
        )
        for v, w in (u_hits if u_hits.size else np.empty((0, 2))):
            hit_rows.append((eps, 0, v, w))
        for v, w in (s_hits if s_hits.size else np.empty((0, 2))):
            hit_rows.append((eps, 1, v, w))
        if s_hits.shape[0] < 2:
            raise SmstError(
                f"insufficient stable-manifold hits to interpolate at eps={eps}"
            )
        xp, fp = s_hits[:, 0], s_hits[:, 1]
        inside = (u_hits[:, 0] >= xp[0]) & (u_hits[:, 0] <= xp[-1])
        gaps = u_hits[inside, 1] - np.interp(u_hits[inside, 0], xp, fp)
        for v, g in zip(u_hits[inside, 0], gaps):
            gap_rows.append((eps, v, g))
        per_eps[eps] = gaps

    result.add_table(
        "gaps", ("epsilon [1]", "hit_v [1]", "gap [1]"), gap_rows
    )
    result.add_table(
        "hits", ("epsilon [1]", "branch [0=wu,1=ws]", "v [1]", "w [1]"), hit_rows
    )
    summary = {}
    for eps, gaps in per_eps.items():
        key = f"{eps}"
        summary[f"median_gap_{key}"] = float(np.median(gaps))
        summary[f"min_abs_gap_{key}"] = float(np.min(np.abs(gaps)))
        summary[f"negative_fraction_{key}"] = float(np.mean(gaps < 0))
    result.summary = summary
    return result


def return_map(
    k: float = -0.22,
    epsilon: float = 0.006366,
    n_points: int = 300,
    v_interval=(0.007, 0.01),
    line_slope: float = 1.2107,
    line_intercept: float = 0.35959,
    section_level: float = 0.075,
    arm_level: float = 0.08,
    t_max: float = 5.0,
    jump_factor: float = 10.0,
    spike_threshold: float = 0.0,
    ivp: dict | None = None,
) -> ExperimentResult:
    """Return map of a segment on the section back to itself.

    Initial states sit on the line w = slope*v + intercept in the section
    plane.  The return event is armed only after the drive current has risen
    through ``arm_level`` (every returning trajectory passes the stable
    branch and its fold first), avoiding spurious hits during the inbound
    canard.  Spikes are membrane-potential maxima above ``spike_threshold``
    over the whole excursion.
    """
    params = ml.MorrisLecarParams(k=k, epsilon=epsilon)
    flow = ml.system(params)
    rhs = lambda t, z: flow.rhs(z)  # noqa: E731
    opts = IvpOptions(**{"rel_tol": 1e-10, "abs_tol": 1e-12, "max_steps": 2_000_000,
                         **(ivp or {})})
    arm = Section(2, arm_level, "increasing")
    ret = Section(2, section_level, "decreasing")

    rows = []
    for v0 in np.linspace(v_interval[0], v_interval[1], n_points):
        w0 = line_slope * v0 + line_intercept
        z0 = np.array([v0, w0, section_level])
        try:
            t1, z1, hit1 = integrate_field(rhs, z0, (0.0, t_max), opts, section=arm)
            if hit1 is None:
                rows.append((v0, w0, np.nan, -1, np.nan, 1.0))
                continue
            t2, z2, hit2 = integrate_field(
                rhs, hit1[1], (hit1[0], hit1[0] + t_max), opts, section=ret
            )
        except SmstError:
            rows.append((v0, w0, np.nan, -1, np.nan, 1.0))
            continue
        if hit2 is None:
            rows.append((v0, w0, np.nan, -1, np.nan, 1.0))
            continue
        v_path = np.concatenate([np.array(z1)[:, 0], np.array(z2)[1:, 0]])
        peaks = (v_path[1:-1] > v_path[:-2]) & (v_path[1:-1] > v_path[2:])
        spikes = int(np.sum(peaks & (v_path[1:-1] > spike_threshold)))
        rows.append((v0, w0, hit2[1][0], spikes, hit2[0], 0.0))

    result = ExperimentResult(
        name="return-map",
        inputs={
            "k": k,
            "epsilon": epsilon,
            "n_points": n_points,
            "v_interval": list(v_interval),
            "line_slope": line_slope,
            "line_intercept": line_intercept,
            "section_level": section_level,
            "arm_level": arm_level,
            "jump_factor": jump_factor,
        },
    )
    result.add_table(
        "map",
        (
            "v_initial [1]",
            "w_initial [1]",
            "v_final [1]",
            "spikes [count]",
            "return_time [slow time]",
            "censored [bool]",
        ),
        rows,
    )

    ok = [r for r in rows if r[5] < 0.5]
    v_final = np.array([r[2] for r in ok])
    spikes = np.array([r[3] for r in ok])
    jumps = detect_jumps(v_final, jump_factor)
    result.add_table(
        "jumps",
        ("left_index [index]", "right_index [index]", "v_left [1]", "v_right [1]"),
        [(a, b, ok[a][0], ok[b][0]) for a, b in jumps],
    )
    summary = {
        "jump_count": len(jumps),
        "min_return_v": float(np.min(v_final)) if v_final.size else np.nan,
        "censored": int(len(rows) - len(ok)),
    }
    if len(jumps) == 2:
        (a1, b1), (a2, b2) = jumps
        inner = spikes[b1 : a2 + 1]
        outer = np.concatenate([spikes[: a1 + 1], spikes[b2:]])
        summary["inner_spikes"] = int(np.median(inner)) if inner.size else -1
        summary["outer_spikes"] = int(np.median(outer)) if outer.size else -1
    result.summary = summary
    return result


def detect_jumps(values: np.ndarray, factor: float = 10.0):
    """Jump discontinuities as maximal runs of adjacent gaps above
    ``factor`` times the median adjacent gap.  Returns (left, right) index
    pairs bounding each run."""
    diffs = np.abs(np.diff(values))
    if diffs.size == 0:
        return []
    med = np.median(diffs)
    if med == 0:
        return []
    big = diffs > factor * med
    jumps = []
    i = 0
    while i < big.size:
        if big[i]:
            j = i
            while j + 1 < big.size and big[j + 1]:
                j += 1
            jumps.append((i, j + 1))
            i = j + 1
        i += 1
    return jumps
