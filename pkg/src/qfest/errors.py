"""Exception and warning types shared across the package."""


class QfestError(Exception):
    """Base class for package errors."""


class ConfigError(QfestError, ValueError):
    """Invalid experiment configuration."""


class TruncationError(QfestError, ValueError):
    """Requested observation count would drop part of the signal or filter support."""


class NumericalError(QfestError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy value."""


class WindowError(NumericalError):
    """The window equation has no admissible root."""


class ExtremalError(NumericalError):
    """The least-favorable construction is degenerate for these parameters."""


class NumericalOverflowWarning(RuntimeWarning):
    """A quantity exceeded double range and was saturated to +inf."""
