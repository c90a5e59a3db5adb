"""Exception types shared across the package."""


class CaseRegError(Exception):
    """Base class for all package-specific failures."""


class ConfigurationError(CaseRegError):
    """Invalid parameter values or an inadmissible option combination."""


class IngestionError(CaseRegError):
    """Input data could not be read or validated."""


class DegenerateScaleError(CaseRegError):
    """A scale estimate came out exactly zero, so scale-relative rules are undefined."""


class RankDeficiencyError(CaseRegError):
    """A linear system required full rank and did not have it."""


class ConvergenceError(CaseRegError):
    """An iterative solver hit its iteration cap before meeting tolerance.

    The objective values accumulated so far are kept in ``trace`` so callers
    can report how far the solve got.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class DescentError(CaseRegError):
    """An alternating fit increased its own objective; internal inconsistency."""
