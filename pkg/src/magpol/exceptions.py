"""Exception hierarchy shared by the solver, synthesis and fitting code."""


class MagpolError(Exception):
    """Base class for all package errors."""


class DomainError(MagpolError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularityError(DomainError):
    """The requested quantity diverges (e.g. division by a zero frequency)."""


class SupercriticalError(MagpolError):
    """The Hopfield matrix has a soft or unstable mode.

    Attributes
    ----------
    det : float
        ``det(M)`` of the offending Hopfield matrix (linear-frequency units, Hz**4).
    field : float or None
        Applied field (Tesla) at which the instability was met, when known.
    """

    def __init__(self, message, det=float("nan"), field=None):
        super().__init__(message)
        self.det = det
        self.field = field


class NoGoError(DomainError):
    """Suppression factor B >= 1: the critical coupling diverges (TRK limit)."""


class FitError(MagpolError):
    """Base class for estimation failures."""


class UnidentifiableError(FitError):
    """The data cannot constrain the requested free parameters."""

    def __init__(self, message, parameters=()):
        super().__init__(message)
        self.parameters = tuple(parameters)


class ConvergenceError(FitError):
    """The optimizer ran out of iterations; ``result`` holds the best point found."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(MagpolError, ValueError):
    """A run configuration violates the schema; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
