"""Exception hierarchy shared by the fitters, generators and pipeline."""
from __future__ import annotations


class ResforgeError(Exception):
    """Base class for all package errors."""


class DomainError(ResforgeError, ValueError):
    """An input lies outside the domain where a model is defined."""


class NoDipFound(ResforgeError):
    """No resonance dip was detected in a trace."""


class NotConverged(ResforgeError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class IllConditioned(ResforgeError):
    """Two or more fit parameters cannot be separated by the data.

    ``direction`` maps parameter names to the components of the least
    constrained unit direction of the normal matrix; ``result`` carries the fit with a
    pseudo-inverse covariance so that identifiable quantities are still usable.
    """

    def __init__(self, message, direction=None, result=None, condition=None):
        super().__init__(message)
        self.direction = direction
        self.result = result
        self.condition = condition


class BifurcationInFitWindow(ResforgeError):
    def __init__(self, message, flags=None):
        super().__init__(message)
        self.flags = flags


class PositiveShiftDominates(ResforgeError):
    """Field sweep data shift upward on average; inconsistent with the model."""


class NegativeSlope(ResforgeError):
    def __init__(self, message, slope=None, intercept=None):
        super().__init__(message)
        self.slope = slope
        self.intercept = intercept


class QCFail(ResforgeError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ParseError(ResforgeError):
    def __init__(self, reason, line=None, column=None, path=None):
        self.reason = reason
        self.line = line
        self.column = column
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {reason}" if prefix else reason)


class UnitError(ParseError):
    pass


class LostResonance(ResforgeError):
    def __init__(self, message, field_b=None, previous_f0=None):
        super().__init__(message)
        self.field_b = field_b
        self.previous_f0 = previous_f0


class ConfigError(ResforgeError, ValueError):
    pass


class MissingInput(ResforgeError):
    def __init__(self, message, missing=None):
        super().__init__(message)
        self.missing = missing or {}
