"""Boundary-value computation of saddle-type slow manifolds in slow-fast
ODE systems, with an experiment harness and CLI."""

import os

# Threaded BLAS reductions are not bitwise reproducible between runs, which
# both breaks the CLI determinism contract and (near equilibrium crawls) can
# flip Newton between coexisting discrete solutions.  Pin to one thread
# before numpy initializes; explicit user settings win.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")
del os, _var

from .core import (  # noqa: E402
    BoundaryManifold,
    Mesh,
    SlowFastSystem,
    SlowFlowChart,
    StrongDirections,
    TrajectorySegment,
    assemble_field,
    critical_point,
    segment_from_arrays,
    slow_flow_field,
    strong_directions,
)
from .ivp import (  # noqa: E402
    IvpOptions,
    Section,
    displaced_pair,
    integrate,
    integrate_field,
    integrate_to_section,
)
from .solver import (  # noqa: E402
    CollocationProblem,
    SmstOptions,
    SolverReport,
    collocation_residual,
    default_boundary_manifolds,
    hermite_eval,
    hermite_midpoint,
    newton_solve,
    residual_jacobian,
    shadowing_gap,
    smst_compute,
    uniform_mesh,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryManifold",
    "CollocationProblem",
    "IvpOptions",
    "Mesh",
    "Section",
    "SlowFastSystem",
    "SlowFlowChart",
    "SmstOptions",
    "SolverReport",
    "StrongDirections",
    "TrajectorySegment",
    "assemble_field",
    "collocation_residual",
    "critical_point",
    "default_boundary_manifolds",
    "displaced_pair",
    "hermite_eval",
    "hermite_midpoint",
    "integrate",
    "integrate_field",
    "integrate_to_section",
    "newton_solve",
    "residual_jacobian",
    "segment_from_arrays",
    "shadowing_gap",
    "slow_flow_field",
    "smst_compute",
    "strong_directions",
    "uniform_mesh",
    "__version__",
]
