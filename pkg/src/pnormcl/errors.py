"""Exception types raised across the package."""


class InvalidScenarioError(ValueError):
    """A grid, datum, kernel or scenario description is not admissible."""


class UnsupportedError(NotImplementedError):
    """The requested operator/scheme combination has no defined meaning here."""


class SolverError(RuntimeError):
    """Time integration had to be aborted."""


class CellInversionError(SolverError):
    """Two Lagrangian cell boundaries crossed during a step."""


class InvariantViolation(SolverError):
    """A proved invariant (e.g. the maximum principle) was breached under strict mode."""


class PicardNonConvergence(SolverError):
    """The within-step fixed-point iteration did not reach its tolerance."""
