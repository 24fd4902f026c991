"""Exception hierarchy shared by the numerical services, the CLI and the API."""


class FptError(Exception):
    """Base class for every error raised by fptpwl."""


class InvalidParameterError(FptError, ValueError):
    """A parameter violates the precondition of an operation."""


class DomainError(InvalidParameterError):
    """An argument lies outside the support of a function (e.g. t < t0)."""


class OrderingError(InvalidParameterError):
    """Times or knots are not in the required order."""


class DegenerateInputError(InvalidParameterError):
    """Inputs make a closed form collapse to 0/0."""


class InsufficientDataError(InvalidParameterError):
    """Not enough (uncensored) observations for the requested statistic."""


class ConvergenceError(FptError, RuntimeError):
    """An iterative method stopped before meeting its tolerance."""


class NoSignChangeError(ConvergenceError):
    """A root bracket does not enclose a sign change."""


class BracketingError(ConvergenceError):
    """A bracket could not be grown to enclose a root below the time cap."""
