"""Test-function families used by the experiments and the CLI.

Every family is a small callable class that accepts complex numpy arrays and,
where it makes sense, exposes an analytic ``derivative``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .geometry import Interval, bernstein_radius


@dataclass(frozen=True)
class Pole:
    """``w -> 1 / (w - w0)``, holomorphic away from ``w0``."""

    w0: complex

    def __call__(self, w):
        return 1.0 / (np.asarray(w, dtype=np.complex128) - self.w0)

    def derivative(self):
        return PoleDerivative(self.w0)

    def radius(self, interval: Interval) -> float:
        """Bernstein radius of the singularity with respect to ``interval``."""
        return bernstein_radius(interval, self.w0)

    def interpolation_error(self, interval: Interval, m: int, w):
        """Exact ``f - I_m f`` at ``w`` for interpolation at the Chebyshev zeros.

        With node polynomial ``C_{m+1}`` the error of interpolating
        ``1 / (w - w0)`` is ``C_{m+1}(w^) / (C_{m+1}(w0^) (w - w0))`` in pulled-back
        coordinates ``w^``.  No cancellation occurs, so this stays accurate far
        below the roundoff level of a direct measurement.
        """
        w = np.asarray(w, dtype=np.complex128)
        num = _chebyshev_closed(m + 1, interval.phi_inv(w))
        den = _chebyshev_closed(m + 1, complex(interval.phi_inv(self.w0))) * (w - self.w0)
        return num / den


def _chebyshev_closed(n: int, x):
    # C_n(x) = (z^n + z^-n) / 2 with x = (z + 1/z) / 2 and |z| >= 1
    x = np.asarray(x, dtype=np.complex128)
    z = x + np.sqrt(x - 1.0) * np.sqrt(x + 1.0)
    return 0.5 * (z ** n + z ** (-n))


@dataclass(frozen=True)
class PoleDerivative:
    w0: complex

    def __call__(self, w):
        return -1.0 / (np.asarray(w, dtype=np.complex128) - self.w0) ** 2


@dataclass(frozen=True)
class Constant:
    value: complex = 1.0

    def __call__(self, w):
        return np.full(np.shape(w), self.value, dtype=np.complex128)

    def derivative(self):
        return Constant(0.0)

    def radius(self, interval: Interval) -> float:
        return np.inf


@dataclass(frozen=True)
class Monomial:
    """``w -> w**k``."""

    k: int

    def __call__(self, w):
        return np.asarray(w, dtype=np.complex128) ** self.k

    def derivative(self):
        if self.k == 0:
            return Constant(0.0)
        return _Scaled(float(self.k), Monomial(self.k - 1))

    def radius(self, interval: Interval) -> float:
        return np.inf


@dataclass(frozen=True)
class _Scaled:
    factor: complex
    inner: object

    def __call__(self, w):
        return self.factor * self.inner(w)


@dataclass(frozen=True)
class HelmholtzSlice:
    """Holomorphic continuation of ``x -> exp(i kappa |x - y0|) / |x - y0|`` from the real side of ``x`` opposite ``y0``.

    With ``y0`` to the right of the interval of interest, ``|x - y0| = y0 - x``;
    with ``y0`` to the left, ``|x - y0| = x - y0``.  The plane wave is removed by
    modulating with ``c = -kappa * side`` where ``side = +1`` for a source on
    the right.
    """

    kappa: float
    y0: float
    side: int = 1  # +1: y0 lies right of the interval, -1: left

    def _s(self, w):
        w = np.asarray(w, dtype=np.complex128)
        return self.side * (self.y0 - w)

    def __call__(self, w):
        s = self._s(w)
        return np.exp(1j * self.kappa * s) / s

    @property
    def direction(self) -> float:
        """Modulation direction that removes the plane wave."""
        return -self.kappa * self.side

    def derivative(self):
        return HelmholtzSliceDerivative(self.kappa, self.y0, self.side)

    def radius(self, interval: Interval) -> float:
        return bernstein_radius(interval, self.y0)


@dataclass(frozen=True)
class HelmholtzSliceDerivative:
    kappa: float
    y0: float
    side: int = 1

    def __call__(self, w):
        s = self.side * (self.y0 - np.asarray(w, dtype=np.complex128))
        # d/dw = -side * d/ds
        return -self.side * np.exp(1j * self.kappa * s) * (1j * self.kappa * s - 1.0) / s ** 2


@dataclass(frozen=True)
class Sawtooth:
    """Continuous, sign-oscillating, piecewise linear function with ``teeth`` periods on ``[a, b]``.

    Only meaningful on the real line; complex arguments use their real part.
    """

    a: float
    b: float
    teeth: int = 7

    def __call__(self, w):
        x = (np.real(np.asarray(w)) - self.a) / (self.b - self.a) * self.teeth
        frac = x - np.floor(x)
        return (1.0 - 4.0 * np.abs(frac - 0.5)).astype(np.complex128)


FAMILIES = ("pole", "const", "helmholtz", "sawtooth")


def make_function(name: str, *, pole: complex = 3.0, kappa: float = 40.0, y0: float = 1.5,
                  interval: Interval | None = None, teeth: int = 7):
    """Build a test function by registry name."""
    if name == "pole":
        return Pole(complex(pole))
    if name == "const":
        return Constant(1.0)
    if name == "helmholtz":
        side = 1
        if interval is not None and y0 < interval.a:
            side = -1
        return HelmholtzSlice(float(kappa), float(y0), side)
    if name == "sawtooth":
        if interval is None:
            raise ConfigurationError("sawtooth needs an interval")
        return Sawtooth(interval.a, interval.b, int(teeth))
    raise ConfigurationError(f"unknown function family {name!r}; choose from {FAMILIES}")
