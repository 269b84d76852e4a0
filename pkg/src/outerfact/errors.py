"""Exception hierarchy shared by all modules."""


class OuterFactError(Exception):
    """Base class for every error raised by :mod:`outerfact`."""


class ValidationError(OuterFactError, ValueError):
    """Malformed input: bad shapes, non-finite entries, broken symmetry."""


class NotPSDError(ValidationError):
    """A matrix or trigonometric polynomial is not positive semidefinite."""


class RankError(OuterFactError):
    """A numerical rank exceeds what the factorization admits."""


class ConditionFailed(OuterFactError):
    """A factorizability condition does not hold.

    The report describing the violation is kept on ``self.report`` so callers
    can still inspect the measured gaps.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
