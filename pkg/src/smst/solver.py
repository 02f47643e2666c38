"""Collocation boundary-value solver for trajectories on saddle-type slow
manifolds.

A candidate trajectory of the slow flow on the critical manifold is refined
into a trajectory of the full system by requiring the cubic Hermite spline
through the mesh states (with tangents F(z_j)) to satisfy the ODE at every
interval midpoint, plus affine boundary-manifold equations at the two ends.
The resulting square system of (N+1)(m+n) equations is solved with Newton's
method and a dense LU factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    BoundaryManifold,
    Mesh,
    SlowFastSystem,
    TrajectorySegment,
    assemble_field,
    critical_point,
    fd_full_jacobian,
    strong_directions,
)
from .errors import (
    LinearSolveError,
    ModelEvaluationError,
    ResidualDivergenceError,
)
from .ivp import IvpOptions, integrate


@dataclass(frozen=True)
class SmstOptions:
    newton_tolerance: float = 1e-12
    max_iterations: int = 25
    damping: float = 1.0
    max_halvings: int = 4
    jacobian_mode: str = "analytic"  # "analytic" | "finite-difference"

    def __post_init__(self):
        if not (self.newton_tolerance > 0):
            raise ValueError("newton_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not (0 < self.damping <= 1):
            raise ValueError("damping must lie in (0, 1]")
        if self.jacobian_mode not in ("analytic", "finite-difference"):
            raise ValueError("jacobian_mode must be 'analytic' or 'finite-difference'")


@dataclass(frozen=True)
class SolverReport:
    """Newton iteration history: residual_history has iterations + 1 entries."""

    iterations: int
    residual_history: list[float]
    converged: bool
    final_residual: float
    step_norms: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "final_residual": self.final_residual,
            "residual_history": list(self.residual_history),
            "step_norms": list(self.step_norms),
        }


@dataclass(frozen=True)
class CollocationProblem:
    system: SlowFastSystem
    mesh: Mesh
    left: BoundaryManifold
    right: BoundaryManifold

    def __post_init__(self):
        dim = self.system.dim
        if self.mesh.intervals < 1:
            raise ValueError("collocation mesh needs at least one interval")
        if self.left.codimension + self.right.codimension != dim:
            raise ValueError(
                "boundary codimensions must sum to the state dimension: "
                f"{self.left.codimension} + {self.right.codimension} != {dim}"
            )
        if self.left.base_point.size != dim or self.right.base_point.size != dim:
            raise ValueError("boundary manifolds must live in the system state space")

    @property
    def size(self) -> int:
        return (self.mesh.intervals + 1) * self.system.dim


def hermite_midpoint(z_a, z_b, f_a, f_b, t_a: float, t_b: float):
    """Value and slope of the cubic Hermite spline at the interval midpoint.

    sigma(mid)  = (z_a + z_b)/2 - (t_b - t_a)(F_b - F_a)/8
    sigma'(mid) = 3 (z_b - z_a) / (2 (t_b - t_a)) - (F_a + F_b)/4
    """
    if not t_b > t_a:
        raise ValueError("t_b must exceed t_a")
    z_a = np.asarray(z_a, dtype=float)
    z_b = np.asarray(z_b, dtype=float)
    f_a = np.asarray(f_a, dtype=float)
    f_b = np.asarray(f_b, dtype=float)
    dt = t_b - t_a
    sigma = 0.5 * (z_a + z_b) - dt * (f_b - f_a) / 8.0
    # (z_b - z_a)/dt first: exact when the slow component advances one mesh
    # width per time unit, which keeps rescaled slow residuals at exact zero.
    sigma_prime = 1.5 * ((z_b - z_a) / dt) - 0.25 * (f_a + f_b)
    return sigma, sigma_prime


def collocation_residual(problem: CollocationProblem, segment: TrajectorySegment) -> np.ndarray:
    """Residual of the collocation equations, interval blocks first.

    Entry ordering: for each interval j (in mesh order) the m+n components of
    F(sigma(mid)) - sigma'(mid) (fast components then slow, i.e. natural state
    order), then the left boundary rows, then the right boundary rows.
    """
    _check_conforming(problem, segment)
    sys = problem.system
    times = segment.times
    states = segment.states
    n_int = problem.mesh.intervals
    dim = sys.dim

    fields = np.empty_like(states)
    for j in range(n_int + 1):
        try:
            fields[j] = assemble_field(sys, states[j])
        except ModelEvaluationError as exc:
            raise ModelEvaluationError(f"field evaluation failed at knot {j}: {exc}", z=states[j]) from exc

    out = np.empty(problem.size)
    for j in range(n_int):
        sigma, sigma_prime = hermite_midpoint(
            states[j], states[j + 1], fields[j], fields[j + 1], times[j], times[j + 1]
        )
        try:
            f_mid = assemble_field(sys, sigma)
        except ModelEvaluationError as exc:
            raise ModelEvaluationError(
                f"field evaluation failed at midpoint of interval {j}: {exc}", z=sigma
            ) from exc
        out[j * dim : (j + 1) * dim] = f_mid - sigma_prime
    out[n_int * dim : n_int * dim + problem.left.codimension] = problem.left.residual(states[0])
    out[n_int * dim + problem.left.codimension :] = problem.right.residual(states[-1])
    return out


def _full_jacobian(problem: CollocationProblem, z: np.ndarray, mode: str) -> np.ndarray:
    if mode == "analytic":
        if problem.system.full_jacobian is None:
            raise ValueError("analytic jacobian_mode requires full_jacobian on the system")
        return np.asarray(problem.system.full_jacobian(z), dtype=float)
    return fd_full_jacobian(problem.system, z)


def residual_jacobian(
    problem: CollocationProblem,
    segment: TrajectorySegment,
    mode: str = "analytic",
) -> np.ndarray:
    """Exact derivative of :func:`collocation_residual` w.r.t. all knot states.

    Interval j couples only z_j and z_{j+1}; boundary rows are the constant
    constraint matrices.
    """
    _check_conforming(problem, segment)
    sys = problem.system
    dim = sys.dim
    n_int = problem.mesh.intervals
    times = segment.times
    states = segment.states

    fields = np.array([assemble_field(sys, z) for z in states])
    knot_jacs = [_full_jacobian(problem, z, mode) for z in states]

    jac = np.zeros((problem.size, problem.size))
    eye = np.eye(dim)
    for j in range(n_int):
        dt = times[j + 1] - times[j]
        sigma, _ = hermite_midpoint(
            states[j], states[j + 1], fields[j], fields[j + 1], times[j], times[j + 1]
        )
        df_mid = _full_jacobian(problem, sigma, mode)
        da, db = knot_jacs[j], knot_jacs[j + 1]
        rows = slice(j * dim, (j + 1) * dim)
        jac[rows, j * dim : (j + 1) * dim] = (
            df_mid @ (0.5 * eye + dt * da / 8.0) + 1.5 * eye / dt + da / 4.0
        )
        jac[rows, (j + 1) * dim : (j + 2) * dim] = (
            df_mid @ (0.5 * eye - dt * db / 8.0) - 1.5 * eye / dt + db / 4.0
        )
    row0 = n_int * dim
    jac[row0 : row0 + problem.left.codimension, :dim] = problem.left.constraint_matrix
    jac[row0 + problem.left.codimension :, n_int * dim :] = problem.right.constraint_matrix
    return jac


def newton_solve(
    problem: CollocationProblem,
    initial: TrajectorySegment,
    opts: SmstOptions | None = None,
) -> tuple[TrajectorySegment, SolverReport]:
    """Newton iteration on the collocation equations from an initial segment.

    Convergence means the infinity norm of the residual is at or below
    ``newton_tolerance``.  When the iteration cap is hit, the best iterate is
    returned with ``converged=False``.  A singular linear system raises
    :class:`LinearSolveError`; a residual exceeding 10x the initial residual
    after damping is exhausted raises :class:`ResidualDivergenceError`.
    """
    opts = opts or SmstOptions()
    _check_conforming(problem, initial)
    dim = problem.system.dim

    states = initial.states.copy()
    segment = TrajectorySegment(problem.mesh, states)
    residual = collocation_residual(problem, segment)
    res_norm = float(np.max(np.abs(residual)))
    initial_norm = res_norm
    history = [res_norm]
    step_norms: list[float] = []
    best_states = states.copy()
    best_norm = res_norm

    iterations = 0
    while res_norm > opts.newton_tolerance and iterations < opts.max_iterations:
        jac = residual_jacobian(problem, segment, opts.jacobian_mode)
        try:
            step = np.linalg.solve(jac, -residual)
        except np.linalg.LinAlgError as exc:
            raise LinearSolveError(
                f"singular collocation Jacobian at iteration {iterations}",
                iteration=iterations,
            ) from exc

        alpha = opts.damping
        halvings = 0
        while True:
            trial_states = states + alpha * step.reshape(-1, dim)
            trial = TrajectorySegment(problem.mesh, trial_states)
            trial_residual = collocation_residual(problem, trial)
            trial_norm = float(np.max(np.abs(trial_residual)))
            if trial_norm <= res_norm or halvings >= opts.max_halvings:
                break
            alpha *= 0.5
            halvings += 1

        states = trial_states
        segment = trial
        residual = trial_residual
        res_norm = trial_norm
        iterations += 1
        history.append(res_norm)
        step_norms.append(float(np.max(np.abs(alpha * step))))
        if res_norm < best_norm:
            best_norm = res_norm
            best_states = states.copy()
        if res_norm > 10.0 * max(initial_norm, opts.newton_tolerance) and halvings >= opts.max_halvings:
            raise ResidualDivergenceError(
                f"residual {res_norm:.3e} exceeds 10x the initial residual "
                f"{initial_norm:.3e} at iteration {iterations}",
                iteration=iterations,
                residual=res_norm,
            )

    converged = res_norm <= opts.newton_tolerance
    if not converged:
        segment = TrajectorySegment(problem.mesh, best_states)
        res_norm = best_norm
    report = SolverReport(
        iterations=iterations,
        residual_history=history,
        converged=converged,
        final_residual=res_norm,
        step_norms=step_norms,
    )
    return segment, report


def default_boundary_manifolds(
    system: SlowFastSystem,
    p_left: np.ndarray,
    p_right: np.ndarray,
) -> tuple[BoundaryManifold, BoundaryManifold]:
    """Boundary manifolds from the fast eigen-splitting at the end points.

    Left: the affine subspace through ``p_left`` spanned by the unstable fast
    directions (dimension u); its constraints pin the slow coordinates and
    the stable-direction components of the fast deviation.  Right: the affine
    subspace through ``p_right`` spanned by the stable fast directions and
    all slow directions; its constraints pin the unstable-direction
    components.  Codimensions sum to m + n.
    """
    m, n = system.fast_dim, system.slow_dim
    left_rows = _direction_rows(system, p_left, pin="stable")
    a_left = np.vstack([left_rows, np.hstack([np.zeros((n, m)), np.eye(n)])])
    right_rows = _direction_rows(system, p_right, pin="unstable")
    return (
        BoundaryManifold(a_left, np.asarray(p_left, dtype=float)),
        BoundaryManifold(right_rows, np.asarray(p_right, dtype=float)),
    )


def _direction_rows(system: SlowFastSystem, point: np.ndarray, pin: str) -> np.ndarray:
    """Rows extracting the stable or unstable components of the fast deviation.

    Columns of the fast eigenbasis are inverted so each row annihilates the
    complementary directions (left eigenvectors for real spectra).
    """
    sd = strong_directions(system, point)
    m, n = system.fast_dim, system.slow_dim
    basis = np.vstack([sd.stable_vectors[:, :m], sd.unstable_vectors[:, :m]]).T
    left_all = np.linalg.inv(basis)
    n_stable = sd.stable_vectors.shape[0]
    rows = left_all[:n_stable] if pin == "stable" else left_all[n_stable:]
    return np.hstack([rows, np.zeros((rows.shape[0], n))])


def unstable_pinning_manifold(system: SlowFastSystem, point: np.ndarray) -> BoundaryManifold:
    """Right manifold pinning the strong-unstable component of the fast block
    and of the slow block (used when the left end pins fast coordinates)."""
    sd = strong_directions(system, point)
    m, n = system.fast_dim, system.slow_dim
    if m != n:
        raise ValueError("fast and slow blocks must have equal dimension for this pinning")
    basis = np.vstack([sd.stable_vectors[:, :m], sd.unstable_vectors[:, :m]]).T
    left_all = np.linalg.inv(basis)
    lu = left_all[sd.stable_vectors.shape[0] :]
    rows = np.vstack(
        [
            np.hstack([lu, np.zeros_like(lu)]),
            np.hstack([np.zeros_like(lu), lu]),
        ]
    )
    return BoundaryManifold(rows, np.asarray(point, dtype=float))


def smst_compute(
    system: SlowFastSystem,
    candidate: TrajectorySegment,
    opts: SmstOptions | None = None,
    left: BoundaryManifold | None = None,
    right: BoundaryManifold | None = None,
    candidate_tolerance: float = 1e-8,
    closeness_factor: float | None = 10.0,
) -> tuple[TrajectorySegment, SolverReport]:
    """Refine a critical-manifold candidate into a slow-manifold trajectory.

    The candidate must satisfy the fast equations to ``candidate_tolerance``
    at every knot.  Boundary manifolds default to
    :func:`default_boundary_manifolds` at the candidate end points.  When
    ``closeness_factor`` is set, the converged interior fast components are
    verified to lie within ``closeness_factor * epsilon`` of the critical
    manifold.
    """
    opts = opts or SmstOptions()
    sys = system
    for j, z in enumerate(candidate.states):
        x, y = sys.split(z)
        res = float(np.max(np.abs(np.asarray(sys.fast_field(x, y, 0.0), dtype=float))))
        if res > candidate_tolerance:
            raise ValueError(
                f"candidate knot {j} is off the critical manifold "
                f"(fast residual {res:.3e} > {candidate_tolerance:.0e})"
            )
    if (left is None) != (right is None):
        raise ValueError("supply both boundary manifolds or neither")
    if left is None:
        left, right = default_boundary_manifolds(sys, candidate.first, candidate.last)
    problem = CollocationProblem(system=sys, mesh=candidate.mesh, left=left, right=right)
    solution, report = newton_solve(problem, candidate, opts)

    if closeness_factor is not None and report.converged:
        bound = closeness_factor * sys.epsilon
        for j in range(1, candidate.states.shape[0] - 1):
            x, y = sys.split(solution.states[j])
            x_star = critical_point(sys, y, x)
            dist = float(np.max(np.abs(x - x_star)))
            if dist > bound:
                raise ResidualDivergenceError(
                    f"interior knot {j} is {dist:.3e} from the critical manifold "
                    f"(bound {bound:.3e})",
                    iteration=report.iterations,
                    residual=dist,
                )
    return solution, report


def uniform_mesh(a: float, b: float, intervals: int) -> Mesh:
    if intervals < 1:
        raise ValueError("need at least one interval")
    return Mesh(np.linspace(a, b, intervals + 1))


def hermite_eval(
    segment: TrajectorySegment,
    knot_fields: np.ndarray,
    t: float | np.ndarray,
) -> np.ndarray:
    """Evaluate the C1 cubic Hermite spline of a segment (tangents F(z_j))."""
    times = segment.times
    states = segment.states
    tq = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tq < times[0] - 1e-12) or np.any(tq > times[-1] + 1e-12):
        raise ValueError("query time outside the segment")
    idx = np.clip(np.searchsorted(times, tq, side="right") - 1, 0, times.size - 2)
    out = np.empty((tq.size, states.shape[1]))
    for row, (ti, j) in enumerate(zip(tq, idx)):
        dt = times[j + 1] - times[j]
        theta = (ti - times[j]) / dt
        h00 = (1 + 2 * theta) * (1 - theta) ** 2
        h10 = theta * (1 - theta) ** 2
        h01 = theta**2 * (3 - 2 * theta)
        h11 = theta**2 * (theta - 1)
        out[row] = (
            h00 * states[j]
            + h10 * dt * knot_fields[j]
            + h01 * states[j + 1]
            + h11 * dt * knot_fields[j + 1]
        )
    return out[0] if np.isscalar(t) or np.asarray(t).ndim == 0 else out


def shadowing_gap(
    system: SlowFastSystem,
    segment: TrajectorySegment,
    horizon: float | None = None,
    probes: int = 5,
    ivp_opts: IvpOptions | None = None,
    interior: float = 0.2,
) -> float:
    """Largest distance between re-integrated interior knots and the spline.

    From each probe knot the full system is integrated forward for ``horizon``
    slow-time units (default 5 * epsilon, clipped at the segment end) and
    compared against the Hermite spline at the integrator's own knots.
    Probes sample the central part of the mesh (fraction ``interior`` trimmed
    at each end): converged solutions are exponentially close to the slow
    manifold only away from the boundary layers at the interval ends.
    """
    if horizon is None:
        horizon = 5.0 * system.epsilon
    ivp_opts = ivp_opts or IvpOptions(rel_tol=1e-12, abs_tol=1e-14)
    times = segment.times
    n_knots = times.size
    fields = np.array([assemble_field(system, z) for z in segment.states])
    lo = max(1, int(interior * (n_knots - 1)))
    hi = min(n_knots - 2, int((1.0 - interior) * (n_knots - 1)))
    probe_idx = np.unique(np.linspace(lo, max(lo, hi), probes).astype(int))
    gap = 0.0
    for j in probe_idx:
        t_end = min(times[j] + horizon, times[-1])
        if t_end <= times[j]:
            continue
        arc = integrate(system, segment.states[j], (times[j], t_end), ivp_opts)
        ref = hermite_eval(segment, fields, arc.times)
        gap = max(gap, float(np.max(np.abs(arc.states - ref))))
    return gap


def _check_conforming(problem: CollocationProblem, segment: TrajectorySegment):
    if segment.states.shape != (problem.mesh.intervals + 1, problem.system.dim):
        raise ValueError("segment does not conform to the problem mesh")
    if not np.array_equal(segment.times, problem.mesh.times):
        raise ValueError("segment mesh differs from the problem mesh")
