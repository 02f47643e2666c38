"""Benchmark of the collocation solver against the linear model's closed
forms: exact reproduction on the slow manifold, the discrete contraction
ratio of off-manifold deviations, its agreement with the continuous decay,
and fourth-order mesh convergence."""

from __future__ import annotations

import math

import numpy as np

from ..core import BoundaryManifold, segment_from_arrays
from ..models import linear
from ..solver import CollocationProblem, SmstOptions, newton_solve, uniform_mesh
from .result import ExperimentResult


def _boundaries(exact_states):
    left = BoundaryManifold(
        np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]), exact_states[0]
    )
    right = BoundaryManifold(np.array([[0.0, 1.0, 0.0]]), exact_states[-1])
    return left, right


def _solve_against_exact(system, epsilon, z0, span, intervals, opts):
    mesh = uniform_mesh(0.0, span, intervals)
    exact = np.array([linear.exact(z0, t, epsilon) for t in mesh.times])
    left, right = _boundaries(exact)
    problem = CollocationProblem(system, mesh, left, right)
    guess = np.array([[z0[2] + t, 0.0, z0[2] + t] for t in mesh.times])
    solution, report = newton_solve(problem, segment_from_arrays(mesh.times, guess), opts)
    err = float(np.max(np.abs(solution.states - exact)))
    return solution, exact, err, report


def run(
    epsilon: float = 0.1,
    mesh_sizes=(8, 16, 32, 64),
    span: float = 1.0,
    recurrence_intervals: int = 16,
    recurrence_span: float = 0.8,
    ratio_samples: int = 50,
    y0: float = 0.5,
    off_manifold_x1: float = 0.05,
    off_manifold_x2: float = 0.03,
    smst: dict | None = None,
) -> ExperimentResult:
    opts = SmstOptions(**(smst or {}))
    system = linear.system(epsilon)
    result = ExperimentResult(
        name="linear-benchmark",
        inputs={
            "epsilon": epsilon,
            "mesh_sizes": list(mesh_sizes),
            "span": span,
            "recurrence_intervals": recurrence_intervals,
            "recurrence_span": recurrence_span,
            "ratio_samples": ratio_samples,
        },
    )

    # (a) max-norm error vs the closed form for boundary data off the slow
    # manifold (consistent with an exact off-manifold trajectory).
    z0 = np.array(
        [y0 - epsilon + off_manifold_x1, off_manifold_x2 * math.exp(-span / epsilon), y0]
    )
    errors = []
    for n in mesh_sizes:
        solution, exact, err, report = _solve_against_exact(system, epsilon, z0, span, n, opts)
        errors.append(err)
        result.add_report(f"mesh-{n}", report)
    result.add_table(
        "errors",
        ("intervals [count]", "max_error [state]"),
        [(n, e) for n, e in zip(mesh_sizes, errors)],
    )

    # (b) observed convergence order between successive meshes.
    orders = [
        math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)
    ]
    result.add_table(
        "orders",
        ("intervals_coarse [count]", "intervals_fine [count]", "order [1]"),
        [(mesh_sizes[i], mesh_sizes[i + 1], o) for i, o in enumerate(orders)],
    )

    # (c) per-interval deviation ratio of a converged solve vs the closed form.
    mesh = uniform_mesh(0.0, recurrence_span, recurrence_intervals)
    delta = recurrence_span / recurrence_intervals
    states = np.array([[y0 + t, 0.0, y0 + t] for t in mesh.times])  # critical manifold
    left, right = _boundaries(states)
    problem = CollocationProblem(system, mesh, left, right)
    solution, report = newton_solve(problem, segment_from_arrays(mesh.times, states), opts)
    result.add_report("recurrence", report)
    w = solution.states[:, 2] - solution.states[:, 0] - epsilon
    rho = linear.ratio(delta, epsilon)
    ratio_rows = []
    for j in range(recurrence_intervals):
        if abs(w[j]) > 1e-13:
            measured = w[j + 1] / w[j]
            ratio_rows.append((j, w[j], measured, rho, abs(measured - rho) / rho))
    result.add_table(
        "ratios",
        (
            "interval [index]",
            "w [state]",
            "measured_ratio [1]",
            "closed_form_ratio [1]",
            "relative_error [1]",
        ),
        ratio_rows,
    )

    # (d) relative error of the closed-form ratio vs exp(-delta/eps), delta <= eps.
    rho_rows = []
    for h in np.linspace(0.02, 1.0, ratio_samples):
        r = linear.ratio(h * epsilon, epsilon)
        e = math.exp(-h)
        rho_rows.append((h, r, e, (r - e) / e))
    result.add_table(
        "rho_accuracy",
        ("delta_over_eps [1]", "ratio [1]", "exp [1]", "relative_error [1]"),
        rho_rows,
    )

    result.summary = {
        "max_ratio_relative_error": max(r[4] for r in ratio_rows) if ratio_rows else 0.0,
        "min_order": min(orders),
        "max_order": max(orders),
        "rho_error_min": min(r[3] for r in rho_rows),
        "rho_error_max": max(r[3] for r in rho_rows),
        "finest_mesh_error": errors[-1],
    }
    return result
