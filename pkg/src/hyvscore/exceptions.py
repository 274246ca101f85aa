"""Exception hierarchy shared across the package."""


class HyvScoreError(Exception):
    """Base class for all errors raised by hyvscore."""


class InvalidInputError(HyvScoreError, ValueError):
    """Non-finite values, wrong shapes, or out-of-range parameters."""


class RankDeficiencyError(HyvScoreError, ValueError):
    """Design matrix does not have full column rank."""


class InsufficientDataError(HyvScoreError, ValueError):
    """Too few observations for the requested score."""


class OrderingError(HyvScoreError, ValueError):
    """The leading p x p block of the design is singular."""


class DegeneratePredictiveError(HyvScoreError, ArithmeticError):
    """Residual sum of squares is zero, so the Student-type predictive is undefined."""
