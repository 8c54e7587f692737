"""Exception hierarchy shared by every sjlab module."""


class SJLabError(Exception):
    """Base class for all library errors."""


class InvariantViolation(SJLabError, ValueError):
    """A value failed the invariants of its domain type."""


class NotPositiveDefinite(SJLabError):
    """Cholesky met a pivot at or below tolerance."""


class Singular(SJLabError):
    """Partial pivoting met a pivot below the relative threshold."""


class NoConvergence(SJLabError):
    """An iterative method hit its iteration cap."""


class Diverges(SJLabError):
    """A matrix power series was asked to sum outside its disc of convergence."""


class DistanceOutOfRange(SJLabError):
    """The series distance cannot be evaluated for this pair of points."""


class NormalizationViolated(SJLabError):
    """Special-geodesic exponents are not unit-normalized."""


class StepOverflow(SJLabError):
    """A geodesic left the admissible region of its chart."""
