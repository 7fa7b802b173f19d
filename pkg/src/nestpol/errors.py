"""Exception hierarchy shared by all nestpol modules."""


class NestpolError(Exception):
    """Base class for every error raised by nestpol."""


class DomainError(NestpolError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class EvaluationError(NestpolError, ArithmeticError):
    """A user function failed or returned non-finite values (e.g. a pole was hit)."""


class ConfigurationError(NestpolError, ValueError):
    """An experiment or scenario is configured inconsistently."""


class HypothesisError(ConfigurationError):
    """The hypothesis of a bound (e.g. a minimal order) is not met, so it cannot be asserted."""


class AuditError(NestpolError, RuntimeError):
    """Internal consistency audit failed; indicates a construction bug."""


class LevelError(NestpolError, IndexError):
    """Chain level indices are out of range or out of order."""
