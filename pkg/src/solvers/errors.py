"""
Exception hierarchy shared by the fixed-point engine and the Picard solvers.
"""


class SolverError(Exception):
    """Base class for every failure raised while iterating or bounding."""
    pass


class ChainDivergenceError(SolverError):
    """Raised when the limsup condition on (alpha_j * kappa_j) cannot be certified."""
    pass


class ChainMembershipError(SolverError):
    """Raised when an iterate leaves the chain level it must belong to."""

    def __init__(self, level: int, reason: str):
        super().__init__(f"point is not a member of H_{level}: {reason}")
        self.level = level
        self.reason = reason


class ProblemValidationError(SolverError):
    """Raised when the rectangle data of a problem contradicts sampled evidence."""
    pass


class BallCertificationError(SolverError):
    """Raised by strict callers when an iterate cannot be certified inside the b-ball."""
    pass
