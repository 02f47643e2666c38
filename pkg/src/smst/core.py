"""Domain types for slow-fast systems: vector fields, meshes, trajectory
segments, boundary manifolds, and the fast-subsystem eigen-analysis used to
build boundary conditions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import (
    FoldSingularityError,
    ModelEvaluationError,
    NormalHyperbolicityError,
    SmstError,
)

#: Eigenvalues with |Re| below this are treated as loss of normal
#: hyperbolicity (the mesh ran too close to a fold).
HYPERBOLICITY_TOLERANCE = 1e-6

#: Components smaller than this are ignored when fixing eigenvector signs.
SIGN_THRESHOLD = 1e-12


@dataclass(frozen=True)
class SlowFastSystem:
    """A slow-fast vector field  eps * x' = f(x, y, eps),  y' = g(x, y, eps).

    ``x`` is the fast variable (dimension ``fast_dim``), ``y`` the slow one
    (dimension ``slow_dim``).  On the slow time scale the assembled field is
    ``F(z) = (f/eps, g)`` with ``z = (x, y)``.

    ``fast_jacobian`` is ``D_x f`` and may be omitted (a central
    finite-difference fallback is used).  ``full_jacobian`` is the Jacobian of
    the assembled slow-time field ``F`` and is required for analytic Newton
    solves.  ``rhs`` optionally provides a fused evaluation of ``F`` for hot
    loops; it must agree with ``(f/eps, g)``.
    """

    name: str
    fast_dim: int
    slow_dim: int
    epsilon: float
    fast_field: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    slow_field: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    fast_jacobian: Callable[[np.ndarray, np.ndarray, float], np.ndarray] | None = None
    full_jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    rhs: Callable[[np.ndarray], np.ndarray] | None = None
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.fast_dim < 1 or self.slow_dim < 1:
            raise ValueError("fast_dim and slow_dim must be at least 1")
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")

    @property
    def dim(self) -> int:
        return self.fast_dim + self.slow_dim

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        return z[: self.fast_dim], z[self.fast_dim :]

    def field(self, z: np.ndarray) -> np.ndarray:
        return assemble_field(self, z)

    def fast_jacobian_at(self, z: np.ndarray, eps: float | None = None) -> np.ndarray:
        """D_x f at ``z``, analytic when available, else central differences."""
        x, y = self.split(z)
        e = self.epsilon if eps is None else eps
        if self.fast_jacobian is not None:
            return np.asarray(self.fast_jacobian(x, y, e), dtype=float)
        return _fd_jacobian(lambda xx: self.fast_field(xx, y, e), x)


def _fd_step(v: np.ndarray) -> float:
    return max(1e-7, 1e-7 * float(np.max(np.abs(v), initial=0.0)))


def _fd_jacobian(fun, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = _fd_step(x)
    cols = []
    for j in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        cols.append((np.asarray(fun(xp)) - np.asarray(fun(xm))) / (2 * h))
    return np.column_stack(cols)


def fd_full_jacobian(system: SlowFastSystem, z: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of the assembled slow-time field."""
    return _fd_jacobian(lambda zz: assemble_field(system, zz), np.asarray(z, dtype=float))


def assemble_field(system: SlowFastSystem, z: np.ndarray) -> np.ndarray:
    """Slow-time-scale field F(z) = (f(x,y,eps)/eps, g(x,y,eps))."""
    z = np.asarray(z, dtype=float)
    if z.shape != (system.dim,):
        raise ValueError(f"state must have shape ({system.dim},), got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ModelEvaluationError("non-finite state passed to field evaluation", z=z)
    if system.rhs is not None:
        out = system.rhs(z)
    else:
        x, y = system.split(z)
        fast = np.asarray(system.fast_field(x, y, system.epsilon), dtype=float)
        slow = np.asarray(system.slow_field(x, y, system.epsilon), dtype=float)
        out = np.concatenate([fast / system.epsilon, slow])
    if not np.all(np.isfinite(out)):
        raise ModelEvaluationError("model field returned a non-finite value", z=z)
    return out


@dataclass(frozen=True)
class Mesh:
    """Strictly increasing time knots t_0 < t_1 < ... < t_N (slow-time units).

    A single-knot mesh is allowed as a degenerate carrier for instantaneous
    integrator output; collocation problems require at least one interval.
    """

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if t.ndim != 1 or t.size < 1:
            raise ValueError("mesh needs at least one knot")
        if not np.all(np.isfinite(t)):
            raise ValueError("mesh times must be finite")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("mesh times must be strictly increasing")

    @property
    def intervals(self) -> int:
        return self.times.size - 1

    @property
    def a(self) -> float:
        return float(self.times[0])

    @property
    def b(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class TrajectorySegment:
    """States z_0 ... z_N attached to the knots of a mesh."""

    mesh: Mesh
    states: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.states, dtype=float)
        object.__setattr__(self, "states", s)
        if s.ndim != 2 or s.shape[0] != self.mesh.times.size:
            raise ValueError("state count must equal mesh knot count")
        if not np.all(np.isfinite(s)):
            raise ValueError("trajectory states must be finite")

    @property
    def times(self) -> np.ndarray:
        return self.mesh.times

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def first(self) -> np.ndarray:
        return self.states[0]

    @property
    def last(self) -> np.ndarray:
        return self.states[-1]

    def reversed(self) -> "TrajectorySegment":
        """Same curve with time running in the opposite direction."""
        return TrajectorySegment(Mesh(-self.mesh.times[::-1]), self.states[::-1].copy())


def segment_from_arrays(times, states) -> TrajectorySegment:
    return TrajectorySegment(Mesh(np.asarray(times, dtype=float)), np.asarray(states, dtype=float))


@dataclass(frozen=True)
class BoundaryManifold:
    """Affine constraint set {z : A (z - z*) = 0} of codimension r = rows(A)."""

    constraint_matrix: np.ndarray
    base_point: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.constraint_matrix, dtype=float))
        p = np.asarray(self.base_point, dtype=float)
        object.__setattr__(self, "constraint_matrix", a)
        object.__setattr__(self, "base_point", p)
        if a.shape[1] != p.size:
            raise ValueError("constraint matrix width must match state dimension")
        r = a.shape[0]
        if r < 1 or r > p.size:
            raise ValueError("codimension must satisfy 1 <= r <= dim")
        if np.linalg.matrix_rank(a) != r:
            raise ValueError("constraint matrix must have full row rank")

    @property
    def codimension(self) -> int:
        return self.constraint_matrix.shape[0]

    def residual(self, z: np.ndarray) -> np.ndarray:
        return self.constraint_matrix @ (np.asarray(z, dtype=float) - self.base_point)


@dataclass(frozen=True)
class StrongDirections:
    """Eigen-decomposition of D_x f split by the sign of the real part.

    Vectors are unit length, embedded in the full state space with zero slow
    components, and sign-normalized (first component larger than
    ``SIGN_THRESHOLD`` made positive).  A complex pair contributes two basis
    vectors (real and imaginary parts) and two eigenvalues.
    """

    stable_values: np.ndarray
    unstable_values: np.ndarray
    stable_vectors: np.ndarray
    unstable_vectors: np.ndarray
    fast_dim: int
    slow_dim: int

    @property
    def unstable_count(self) -> int:
        """Dimension u of the strong unstable fibers."""
        return int(self.unstable_values.size)

    @property
    def stable_count(self) -> int:
        return int(self.stable_values.size)


def _normalize_direction(v: np.ndarray) -> np.ndarray:
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        raise SmstError("zero eigenvector")
    v = v / nrm
    for comp in v:
        if abs(comp) > SIGN_THRESHOLD:
            if comp < 0:
                v = -v
            break
    return v


def _embed_fast(v: np.ndarray, fast_dim: int, slow_dim: int) -> np.ndarray:
    out = np.zeros(fast_dim + slow_dim)
    out[:fast_dim] = v
    return out


def strong_directions(system: SlowFastSystem, z: np.ndarray) -> StrongDirections:
    """Strong stable/unstable directions of the fast subsystem at ``z``.

    Raises :class:`NormalHyperbolicityError` when an eigenvalue of D_x f has
    |Re| below :data:`HYPERBOLICITY_TOLERANCE` (fold proximity).
    """
    jac = system.fast_jacobian_at(z)
    values, vectors = np.linalg.eig(jac)
    worst = values[np.argmin(np.abs(values.real))]
    if abs(worst.real) <= HYPERBOLICITY_TOLERANCE:
        raise NormalHyperbolicityError(
            f"eigenvalue {worst} of the fast subsystem is too close to the imaginary axis",
            eigenvalue=worst,
        )

    stable_vals, unstable_vals = [], []
    stable_vecs, unstable_vecs = [], []
    handled = np.zeros(values.size, dtype=bool)
    order = np.lexsort((values.imag, values.real))
    for idx in order:
        if handled[idx]:
            continue
        handled[idx] = True
        lam = values[idx]
        col = vectors[:, idx]
        target_vals = stable_vals if lam.real < 0 else unstable_vals
        target_vecs = stable_vecs if lam.real < 0 else unstable_vecs
        if abs(lam.imag) > 0:
            # Complex pair: consume the conjugate and store a real 2D basis.
            mate = None
            for jdx in range(values.size):
                if not handled[jdx] and abs(values[jdx] - lam.conjugate()) < 1e-12 * max(
                    1.0, abs(lam)
                ):
                    mate = jdx
                    break
            if mate is not None:
                handled[mate] = True
            # Rotate the phase so the leading component is real and positive.
            lead = 0
            for i, comp in enumerate(col):
                if abs(comp) > SIGN_THRESHOLD:
                    lead = i
                    break
            col = col * np.exp(-1j * np.angle(col[lead]))
            target_vals.extend([lam, lam.conjugate()])
            target_vecs.append(_normalize_direction(col.real))
            imag_part = col.imag
            if np.linalg.norm(imag_part) > SIGN_THRESHOLD:
                target_vecs.append(_normalize_direction(imag_part))
            else:
                target_vecs.append(_normalize_direction(col.real))
        else:
            target_vals.append(lam.real + 0j)
            target_vecs.append(_normalize_direction(col.real))

    m, n = system.fast_dim, system.slow_dim
    stable_order = np.argsort([v.real for v in stable_vals]) if stable_vals else []
    unstable_order = (
        np.argsort([-v.real for v in unstable_vals]) if unstable_vals else []
    )
    return StrongDirections(
        stable_values=np.array([stable_vals[i] for i in stable_order], dtype=complex),
        unstable_values=np.array([unstable_vals[i] for i in unstable_order], dtype=complex),
        stable_vectors=np.array(
            [_embed_fast(stable_vecs[i], m, n) for i in stable_order]
        ).reshape(len(stable_vals), m + n),
        unstable_vectors=np.array(
            [_embed_fast(unstable_vecs[i], m, n) for i in unstable_order]
        ).reshape(len(unstable_vals), m + n),
        fast_dim=m,
        slow_dim=n,
    )


def critical_point(
    system: SlowFastSystem,
    y: np.ndarray,
    x_guess: np.ndarray,
    tol: float = 1e-12,
    max_iterations: int = 50,
) -> np.ndarray:
    """Newton solve of f(x, y, 0) = 0 starting from ``x_guess``.

    Returns the root on the same branch as the guess; the residual satisfies
    ``max|f| <= tol``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x = np.atleast_1d(np.asarray(x_guess, dtype=float)).copy()
    for _ in range(max_iterations):
        res = np.asarray(system.fast_field(x, y, 0.0), dtype=float)
        if np.max(np.abs(res)) <= tol:
            return x
        if system.fast_jacobian is not None:
            jac = np.asarray(system.fast_jacobian(x, y, 0.0), dtype=float)
        else:
            jac = _fd_jacobian(lambda xx: system.fast_field(xx, y, 0.0), x)
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise FoldSingularityError(
                f"singular fast Jacobian while locating the critical manifold at y={y}"
            ) from exc
        x = x + step
        if not np.all(np.isfinite(x)):
            raise ModelEvaluationError("critical-point Newton iterate diverged", z=x)
    res = np.asarray(system.fast_field(x, y, 0.0), dtype=float)
    if np.max(np.abs(res)) <= tol:
        return x
    raise SmstError(
        f"critical-point Newton did not converge after {max_iterations} iterations "
        f"(residual {np.max(np.abs(res)):.3e})"
    )


@dataclass(frozen=True)
class SlowFlowChart:
    """A coordinate chart for the slow flow on one normally hyperbolic branch.

    ``tangent(u)`` is the slow-flow vector field in chart coordinates and
    ``lift(u)`` embeds a chart point into the full state space on the critical
    manifold.
    """

    name: str
    dim: int
    tangent: Callable[[np.ndarray], np.ndarray]
    lift: Callable[[np.ndarray], np.ndarray]


def slow_flow_field(chart: SlowFlowChart, u) -> np.ndarray:
    """Slow-flow tangent in chart coordinates; fold singularities raise."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (chart.dim,):
        raise ValueError(f"chart point must have shape ({chart.dim},)")
    out = np.atleast_1d(np.asarray(chart.tangent(u), dtype=float))
    if not np.all(np.isfinite(out)):
        raise FoldSingularityError(f"slow flow undefined at chart point {u}")
    return out
