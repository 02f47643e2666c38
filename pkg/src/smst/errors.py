"""Exception hierarchy shared by all smst modules."""

from __future__ import annotations


class SmstError(Exception):
    """Base class for all errors raised by this package."""


class ModelEvaluationError(SmstError):
    """A model field returned a non-finite value or was evaluated outside its domain."""

    def __init__(self, message, z=None):
        super().__init__(message)
        self.z = z


class NormalHyperbolicityError(SmstError):
    """The fast-subsystem Jacobian has an eigenvalue too close to the imaginary axis."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class FoldSingularityError(SmstError):
    """The fast-subsystem Jacobian is singular: the slow flow is undefined at a fold."""


class LinearSolveError(SmstError):
    """The Newton linear system was singular."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class ResidualDivergenceError(SmstError):
    """Newton residual grew by more than 10x over the initial residual with damping exhausted."""

    def __init__(self, message, iteration=None, residual=None):
        super().__init__(message)
        self.iteration = iteration
        self.residual = residual


class StiffnessError(SmstError):
    """The adaptive integrator step size collapsed; the trajectory cannot be continued."""

    def __init__(self, message, t=None, z=None):
        super().__init__(message)
        self.t = t
        self.z = z


class StepLimitError(SmstError):
    """The integrator exceeded its step-count guard."""

    def __init__(self, message, t=None, z=None):
        super().__init__(message)
        self.t = t
        self.z = z


class SectionMissError(SmstError):
    """No section crossing was found before the time limit."""

    def __init__(self, message, t=None, z=None):
        super().__init__(message)
        self.t = t
        self.z = z


class AssemblyError(SmstError):
    """Orbit assembly failed: traces do not intersect or a junction gap is too large."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
