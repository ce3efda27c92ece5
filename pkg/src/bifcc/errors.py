"""Exception hierarchy shared by the numerical modules."""


class BifccError(Exception):
    """Base class for numerical failures (CLI exit code 3)."""


class DomainError(BifccError, ValueError):
    """Input lies outside the region where a quantity is defined."""


class BranchError(BifccError):
    """A root branch could not be followed unambiguously."""


class DegenerateError(BifccError, ValueError):
    """Coordinates or parameters are degenerate (e.g. c = 0)."""


class ContinuationError(BifccError):
    """Newton continuation stagnated; ``last_good`` holds the partial result."""

    def __init__(self, msg, last_good=None):
        super().__init__(msg)
        self.last_good = last_good


class ResolutionError(BifccError):
    """Grid too coarse to resolve the requested topology."""


class ConditioningError(BifccError):
    """Interpolation or linear solve too ill-conditioned to trust."""


class RegionExitError(ContinuationError):
    """The path left the region where phi^- is defined (G^+ >= 3^j G^-)."""
