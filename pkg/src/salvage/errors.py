"""Exception hierarchy shared by every module of the package."""


class SalvageError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SalvageError, ValueError):
    """Raised for malformed expressions; ``position`` is a 0-based column."""

    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class EvaluationError(SalvageError, ArithmeticError):
    """Math-domain failure while evaluating an expression (log/sqrt/division...)."""


class OutOfDomainError(EvaluationError):
    """A function was evaluated outside of its domain."""


class QuadratureError(SalvageError):
    """Adaptive quadrature did not reach the requested tolerance."""


class InversionError(SalvageError):
    """A target value lies outside the range of a monotone segment."""


class ConfigError(SalvageError, ValueError):
    """Invalid problem file or command-line configuration."""


class LinkError(SalvageError):
    """A link function violates its structural requirements.

    ``findings`` holds every detected problem (not only the first) and
    ``report`` the condition report computed despite the failure, if any.
    """

    def __init__(self, message, findings=(), report=None):
        super().__init__(message)
        self.findings = list(findings)
        self.report = report
