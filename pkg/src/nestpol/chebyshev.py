"""Chebyshev interpolation at the zeros of C_{m+1}, evaluated barycentrically on R and C.

Coefficients follow the expansion convention ``f = a_0 + 2 * sum_{n>=1} a_n C_n``
throughout, both for Laurent coefficients of holomorphic functions and for the
coefficients of interpolating polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from . import _kernels
from .errors import DomainError
from .geometry import (
    REFERENCE,
    BernsteinDisc,
    Interval,
    disc_sup_norm,
    evaluate_checked,
    interval_sup_norm,
    joukowsky,
)

NODE_TOL = 1e-14  # relative to the interval length
LEBESGUE_GRID = 4096


@dataclass(frozen=True, eq=False)
class ChebyshevRule:
    """The ``m + 1`` Chebyshev zeros (descending) and their barycentric weights."""

    order: int
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.order + 1

    def lagrange(self, x) -> np.ndarray:
        """Matrix ``L[k, nu] = l_nu(x_k)`` for real reference points ``x``."""
        x = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
        return _kernels.lagrange_matrix(x, self.points, self.weights)


@lru_cache(maxsize=256)
def chebyshev_rule(m: int) -> ChebyshevRule:
    """Rule of order ``m``: points ``cos(pi (2 nu + 1) / (2m + 2))``, nu = 0..m."""
    m = int(m)
    if m < 0:
        raise DomainError(f"order must be nonnegative, got {m}")
    theta = np.pi * (2 * np.arange(m + 1) + 1) / (2 * m + 2)
    points = np.cos(theta)
    if m % 2 == 0:
        points[m // 2] = 0.0
    weights = (-1.0) ** np.arange(m + 1) * np.sin(theta)
    points.setflags(write=False)
    weights.setflags(write=False)
    return ChebyshevRule(m, points, weights)


def chebyshev_polynomial(n: int, w):
    """``C_n(w)`` by the three-term recurrence; ``w`` may be complex or an array."""
    if n < 0:
        raise DomainError(f"degree must be nonnegative, got {n}")
    w = np.asarray(w, dtype=np.complex128)
    prev, cur = np.ones_like(w), w
    if n == 0:
        out = prev
    else:
        for _ in range(n - 1):
            prev, cur = cur, 2.0 * w * cur - prev
        out = cur
    return out[()] if out.ndim == 0 else out


def _clenshaw(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    # evaluates a_0 + 2 sum a_n C_n(x)
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for k in range(len(a) - 1, 0, -1):
        b1, b2 = 2.0 * a[k] + 2.0 * x * b1 - b2, b1
    return a[0] + x * b1 - b2


class ChebyshevSeries:
    """Evaluator for ``a_0 + 2 sum_{n=1}^{m} a_n C_n`` on an interval."""

    def __init__(self, coefficients, interval: Interval = REFERENCE):
        self.coefficients = np.asarray(coefficients, dtype=np.complex128)
        self.interval = interval

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, w):
        x = np.asarray(self.interval.phi_inv(np.asarray(w, dtype=np.complex128)))
        out = _clenshaw(self.coefficients, x)
        return out[()] if np.ndim(out) == 0 else out


class Interpolant:
    """Polynomial interpolant of degree ``<= m`` on ``interval``, stored by its samples.

    Calling the object evaluates the barycentric formula at real or complex
    arguments; arguments within ``1e-14 * (b - a)`` of a node return the stored
    sample.
    """

    def __init__(self, interval: Interval, rule: ChebyshevRule, samples):
        self.interval = interval
        self.rule = rule
        self.samples = np.ascontiguousarray(samples, dtype=np.complex128)
        if self.samples.shape != (rule.size,):
            raise DomainError(f"expected {rule.size} samples, got {self.samples.shape}")
        self._coefficients: Optional[np.ndarray] = None

    @property
    def order(self) -> int:
        return self.rule.order

    @property
    def nodes(self) -> np.ndarray:
        """Interpolation points mapped to the interval."""
        return self.interval.phi(self.rule.points)

    @property
    def coefficients(self) -> np.ndarray:
        """Chebyshev coefficients ``a_0..a_m`` by a direct cosine sum."""
        if self._coefficients is None:
            m = self.order
            theta = np.pi * (2 * np.arange(m + 1) + 1) / (2 * m + 2)
            cos = np.cos(np.outer(np.arange(m + 1), theta))
            # with this convention a_n = sum_k f_k cos(n theta_k) / (m + 1) for every n
            self._coefficients = cos @ self.samples / (m + 1)
        return self._coefficients

    def __call__(self, w):
        w = np.asarray(w)
        x = np.ascontiguousarray(np.atleast_1d(self.interval.phi_inv(w)), dtype=np.complex128).ravel()
        out = _kernels.barycentric_eval(
            x, self.rule.points, self.rule.weights, self.samples, 2.0 * NODE_TOL
        )
        out = out.reshape(w.shape)
        return out[()] if out.ndim == 0 else out

    def derivative(self) -> "Interpolant":
        return derivative(self)

    def __repr__(self):
        return f"Interpolant([{self.interval.a}, {self.interval.b}], m={self.order})"


def interpolate(f: Callable, interval: Interval, m: int) -> Interpolant:
    """Interpolate ``f`` at the ``m + 1`` Chebyshev zeros mapped to ``interval``."""
    rule = chebyshev_rule(m)
    nodes = interval.phi(rule.points).astype(np.complex128)
    return Interpolant(interval, rule, evaluate_checked(f, nodes))


def evaluate(p: Interpolant, w):
    """Value of the interpolating polynomial at ``w`` (scalar or array, real or complex)."""
    return p(w)


def lebesgue_function(m: int, x) -> np.ndarray:
    """``sum_nu |l_nu(x)|`` for real reference points ``x``."""
    rule = chebyshev_rule(m)
    x = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    return _kernels.lebesgue_function(x, rule.points, rule.weights)


@lru_cache(maxsize=512)
def lebesgue_constant(m: int) -> float:
    """Lebesgue constant of order ``m`` maximised over a 4096-point grid and the endpoints."""
    if m < 0:
        raise DomainError(f"order must be nonnegative, got {m}")
    x = np.concatenate([np.linspace(-1.0, 1.0, LEBESGUE_GRID), [-1.0, 1.0]])
    return float(lebesgue_function(m, x).max())


def chebyshev_coefficients_analytic(
    f: Callable, rho: float, r: Optional[float] = None, m: int = 20, n_quad: int = 4096
) -> np.ndarray:
    """Chebyshev coefficients ``a_0..a_m`` of ``f`` holomorphic on ``D_rho``.

    Uses the trapezoidal rule on the circle ``|z| = r`` for the Laurent
    coefficients of ``f o joukowsky``; ``r`` defaults to ``(1 + rho) / 2``.
    """
    if not rho > 1.0:
        raise DomainError(f"need rho > 1, got {rho}")
    if r is None:
        r = 0.5 * (1.0 + rho)
    if not 1.0 < r < rho:
        raise DomainError(f"need 1 < r < rho, got r={r}, rho={rho}")
    theta = 2.0 * np.pi * np.arange(n_quad) / n_quad
    vals = evaluate_checked(f, joukowsky(r * np.exp(1j * theta)))
    n = np.arange(m + 1)
    phase = np.exp(-1j * np.outer(n, theta))
    return (phase @ vals) / n_quad / r ** n


def truncated_expansion(coefficients, m: int, interval: Interval = REFERENCE) -> ChebyshevSeries:
    """The truncated expansion ``a_0 + 2 sum_{n=1}^{m} a_n C_n``."""
    coefficients = np.asarray(coefficients)
    if len(coefficients) < m + 1:
        raise DomainError(f"need {m + 1} coefficients, got {len(coefficients)}")
    return ChebyshevSeries(coefficients[: m + 1], interval)


def single_level_error_bound(m: int, rho: float, rho_hat: float, f_norm: float, lambda_m: float) -> float:
    """``2 (1 + Lambda_m) / (rho/rho_hat - 1) * (rho_hat/rho)^m * ||f||``."""
    if not 1.0 <= rho_hat < rho:
        raise DomainError(f"need 1 <= rho_hat < rho, got rho_hat={rho_hat}, rho={rho}")
    if f_norm < 0:
        raise DomainError("f_norm must be nonnegative")
    ratio = rho_hat / rho
    return 2.0 * (1.0 + lambda_m) / (rho / rho_hat - 1.0) * ratio ** m * f_norm


def derivative(p: Interpolant) -> Interpolant:
    """Interpolant of ``p'`` (degree ``m - 1``) on the same interval."""
    m = p.order
    if m == 0:
        return Interpolant(p.interval, chebyshev_rule(0), np.zeros(1))
    a = p.coefficients
    c = 2.0 * a
    c[0] = a[0]
    dc = npcheb.chebder(c) * (2.0 / p.interval.length)
    rule = chebyshev_rule(m - 1)
    return Interpolant(p.interval, rule, npcheb.chebval(rule.points, dc))


ROUNDOFF_FACTOR = 100.0


class ConvergenceRow(NamedTuple):
    m: int
    lebesgue: float
    measured: float
    bound: float
    floor: float  # roundoff level of the measurement

    @property
    def violates(self) -> bool:
        """Measured error above the bound by more than the roundoff level."""
        return self.measured > self.bound + self.floor


def convergence_study(f: Callable, interval: Interval, rho: float, rho_hat: float, orders,
                      n: int = 1024) -> list:
    """Single-level interpolation error on the disc ``rho_hat`` against the bound from ``rho``.

    ``measured`` samples ``|f - I_m f|`` on ``n`` boundary points of the
    ``rho_hat`` disc.  ``floor`` estimates the roundoff a double-precision
    measurement carries: perturbing the samples by ``eps |f|`` moves the
    interpolant by at most ``(1 + Lambda_m) rho_hat^m eps ||f||`` on that disc,
    scaled here by a safety factor of 100.
    """
    if not 1.0 <= rho_hat < rho:
        raise DomainError(f"need 1 <= rho_hat < rho, got rho_hat={rho_hat}, rho={rho}")
    disc_hat = BernsteinDisc(interval, rho_hat)
    f_norm = disc_sup_norm(f, BernsteinDisc(interval, rho), 8192, refine=True)
    f_line = interval_sup_norm(f, interval)
    eps = np.finfo(float).eps
    rows = []
    for m in orders:
        lam = lebesgue_constant(m)
        p = interpolate(f, interval, m)
        measured = disc_sup_norm(lambda w: f(w) - p(w), disc_hat, n)
        bound = single_level_error_bound(m, rho, rho_hat, f_norm, lam)
        floor = ROUNDOFF_FACTOR * eps * (1.0 + lam) * rho_hat ** m * f_line
        rows.append(ConvergenceRow(int(m), lam, measured, bound, floor))
    return rows
