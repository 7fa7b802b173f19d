"""Joukowsky map, Bernstein elliptic discs and the nested-disc calculus.

The closed Bernstein disc of radius ``rho >= 1`` around ``[-1, 1]`` is the set
``{w : |w - 1| + |w + 1| <= 2 * joukowsky(rho)}``; it is the image of the
closed annulus ``1/rho <= |z| <= rho`` under the Joukowsky map.  Discs around a
general interval ``[a, b]`` are obtained through the affine map ``Phi_{a,b}``.

Sup norms over discs are estimated by sampling the boundary ellipse.  By the
maximum-modulus principle the boundary maximum equals the disc maximum for
holomorphic functions, and the sampled value approaches it from below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, EvaluationError

CONTAINS_SLACK = 1e-12
DEFAULT_BOUNDARY_SAMPLES = 1024


@dataclass(frozen=True)
class Interval:
    """Real interval ``[a, b]`` with ``a < b`` and its affine reference map."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
            raise DomainError(f"interval needs finite a < b, got [{a}, {b}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def half_length(self) -> float:
        return 0.5 * (self.b - self.a)

    def phi(self, x):
        """Map reference coordinates in ``[-1, 1]`` (or the plane) to this interval."""
        return self.midpoint + self.half_length * np.asarray(x)

    def phi_inv(self, w):
        """Pull ``w`` back to reference coordinates."""
        return (np.asarray(w) - self.midpoint) / self.half_length

    def contains(self, other: "Interval") -> bool:
        return self.a <= other.a and other.b <= self.b

    def grid(self, n: int) -> np.ndarray:
        """``n`` equispaced points including both endpoints."""
        return np.linspace(self.a, self.b, n)


REFERENCE = Interval(-1.0, 1.0)


@dataclass(frozen=True)
class BernsteinDisc:
    """Closed Bernstein elliptic disc ``Phi_{a,b}(D_rho)``."""

    interval: Interval
    rho: float

    def __post_init__(self):
        rho = float(self.rho)
        if not rho >= 1.0 or not math.isfinite(rho):
            raise DomainError(f"disc radius must be >= 1, got {rho}")
        object.__setattr__(self, "rho", rho)

    @property
    def semi_major(self) -> float:
        return self.interval.half_length * joukowsky(self.rho).real

    @property
    def semi_minor(self) -> float:
        return self.interval.half_length * 0.5 * (self.rho - 1.0 / self.rho)


def joukowsky(z):
    """Joukowsky map ``(z + 1/z) / 2``; accepts scalars or arrays."""
    z = np.asarray(z, dtype=np.complex128)
    if np.any(z == 0):
        raise DomainError("the Joukowsky map is undefined at z = 0")
    out = 0.5 * (z + 1.0 / z)
    return out[()] if out.ndim == 0 else out


def joukowsky_dagger(rho):
    """Right inverse ``rho + sqrt(rho^2 - 1)`` of the Joukowsky map on ``[1, inf)``."""
    r = np.asarray(rho, dtype=np.float64)
    if np.any(~(r >= 1.0)):
        raise DomainError(f"joukowsky_dagger needs rho >= 1, got {rho}")
    rad = np.sqrt(np.maximum((r - 1.0) * (r + 1.0), 0.0))
    out = np.where(r < 1.0 + 1e-14, 1.0, r + rad)
    return float(out) if out.ndim == 0 else out


def rho_ab(rho: float, delta: float) -> float:
    """Radius of the transformed disc around a subinterval of relative half-length ``delta``.

    The disc of this radius around any subinterval ``[a, b]`` of ``[-1, 1]``
    with ``(b - a) / 2 = delta`` lies inside ``D_rho``.
    """
    if not rho > 1.0:
        raise DomainError(f"rho_ab needs rho > 1, got {rho}")
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"rho_ab needs 0 < delta <= 1, got {delta}")
    g = joukowsky(rho).real
    return joukowsky_dagger((g - 1.0) / delta + 1.0)


def sigma_hat(rho: float, delta: float) -> float:
    """Growth factor ``rho_ab(rho, delta) / rho``; increasing in rho, decreasing in delta."""
    if not rho >= 1.0:
        raise DomainError(f"sigma_hat needs rho >= 1, got {rho}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"sigma_hat needs 0 < delta < 1, got {delta}")
    g = joukowsky(rho).real
    return joukowsky_dagger((g - 1.0) / delta + 1.0) / rho


def nesting_sigma(rho0: float, delta0: float) -> float:
    """Uniform disc growth factor for all radii ``>= rho0`` and length ratios ``<= delta0``."""
    if not rho0 > 1.0:
        raise DomainError(f"nesting_sigma needs rho0 > 1, got {rho0}")
    return sigma_hat(rho0, delta0)


def bernstein_radius(interval: Interval, w: complex) -> float:
    """Smallest ``rho`` with ``w`` in the closed disc around ``interval``."""
    wh = complex(interval.phi_inv(w))
    s = 0.5 * (abs(wh - 1.0) + abs(wh + 1.0))
    return joukowsky_dagger(max(s, 1.0))


def disc_contains(disc: BernsteinDisc, w) -> bool | np.ndarray:
    """Closed-disc membership test in pullback coordinates with ``+1e-12`` slack."""
    wh = disc.interval.phi_inv(np.asarray(w, dtype=np.complex128))
    lhs = np.abs(wh - 1.0) + np.abs(wh + 1.0)
    out = lhs <= 2.0 * joukowsky(disc.rho).real + CONTAINS_SLACK
    return bool(out) if np.ndim(out) == 0 else out


def disc_boundary(disc: BernsteinDisc, n: int) -> np.ndarray:
    """``n`` points ``Phi(joukowsky(rho * exp(2 pi i k / n)))`` on the boundary ellipse."""
    if n < 4:
        raise DomainError(f"need at least 4 boundary samples, got {n}")
    theta = 2.0 * np.pi * np.arange(n) / n
    z = disc.rho * np.exp(1j * theta)
    return disc.interval.phi(joukowsky(z))


def evaluate_checked(f: Callable, w) -> np.ndarray:
    """Evaluate ``f`` on an array, turning failures and non-finite output into EvaluationError."""
    w = np.asarray(w)
    try:
        with np.errstate(divide="raise", invalid="raise", over="raise"):
            vals = np.asarray(f(w), dtype=np.complex128)
    except (ZeroDivisionError, FloatingPointError, OverflowError) as exc:
        raise EvaluationError(f"function evaluation failed: {exc}") from exc
    if vals.shape != w.shape:
        vals = np.broadcast_to(vals, w.shape).copy()
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("function returned non-finite values (pole on the sampled set?)")
    return vals


def disc_sup_norm(f: Callable, disc: BernsteinDisc, n: int = DEFAULT_BOUNDARY_SAMPLES,
                  refine: bool = False) -> float:
    """Boundary-sampled estimate of ``max |f|`` over the closed disc.

    ``f`` must accept a complex numpy array.  The plain estimate never exceeds
    the true sup norm of a function holomorphic on the disc.  With ``refine``
    the three largest samples are polished by bounded Brent search over the
    boundary angle, which is how bound-side norms are computed.
    """
    if n < 64:
        raise DomainError(f"disc_sup_norm needs n >= 64, got {n}")
    theta = 2.0 * np.pi * np.arange(n) / n
    vals = np.abs(evaluate_checked(f, disc_boundary(disc, n)))
    best = float(vals.max())
    if not refine:
        return best

    def neg_abs(t):
        w = disc.interval.phi(joukowsky(disc.rho * np.exp(1j * np.array([t]))))
        return -float(np.abs(evaluate_checked(f, w))[0])

    h = 2.0 * np.pi / n
    for k in np.argsort(vals)[::-1][:3]:
        res = minimize_scalar(neg_abs, bounds=(theta[k] - h, theta[k] + h), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def interval_sup_norm(f: Callable, interval: Interval, n: int = 4097, refine: bool = True) -> float:
    """Sup of ``|f|`` on ``[a, b]`` from a Chebyshev-extrema grid plus local refinement.

    The grid clusters near the endpoints, where polynomials and interpolation
    errors tend to peak.  With ``refine`` the three largest grid maxima are
    polished by bounded Brent search.
    """
    x = interval.phi(np.cos(np.pi * np.arange(n) / (n - 1)))
    vals = np.abs(evaluate_checked(f, x.astype(np.complex128)))
    best = float(vals.max())
    if not refine:
        return best
    order = np.argsort(vals)[::-1][:3]
    for k in order:
        lo, hi = x[min(k + 1, n - 1)], x[max(k - 1, 0)]
        if hi <= lo:
            continue
        res = minimize_scalar(
            lambda t: -abs(complex(np.asarray(f(np.array([t + 0j])))[0])),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-14 * interval.length},
        )
        best = max(best, -float(res.fun))
    return best


def imaginary_extent(interval: Interval, rho: float) -> float:
    """Maximal ``|Im w|`` over the disc: ``(b - a)(rho - 1/rho) / 4``."""
    return interval.length * (rho - 1.0 / rho) / 4.0
