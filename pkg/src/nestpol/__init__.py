"""Chebyshev interpolation on Bernstein discs, iterated along nested interval chains."""

from ._kernels import BACKEND
from .chebyshev import ChebyshevRule, Interpolant, chebyshev_rule, interpolate, lebesgue_constant
from .errors import (
    AuditError,
    ConfigurationError,
    DomainError,
    EvaluationError,
    HypothesisError,
    LevelError,
    NestpolError,
)
from .geometry import BernsteinDisc, Interval, joukowsky, joukowsky_dagger, nesting_sigma

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AuditError",
    "BernsteinDisc",
    "ChebyshevRule",
    "ConfigurationError",
    "DomainError",
    "EvaluationError",
    "HypothesisError",
    "Interpolant",
    "Interval",
    "LevelError",
    "NestpolError",
    "chebyshev_rule",
    "interpolate",
    "joukowsky",
    "joukowsky_dagger",
    "lebesgue_constant",
    "nesting_sigma",
]
