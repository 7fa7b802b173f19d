"""Plane-wave modulated interpolation and directional chains.

Oscillatory functions such as ``exp(i kappa x) g(x)`` are interpolated by first
dividing out a plane wave ``exp(i c x)``, interpolating the smooth remainder and
multiplying the wave back in.  Along a chain every level carries its own
direction ``c_l``; neighbouring directions must stay within a budget ``omega``
measured in phase per interval length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .chain import (
    BOUND_SAMPLES,
    MEASURE_SAMPLES,
    BoundParams,
    Chain,
    PassThrough,
    _check_levels,
    safe_exp,
)
from .chebyshev import Interpolant, interpolate, lebesgue_constant
from .errors import AuditError, ConfigurationError, DomainError, HypothesisError
from .geometry import BernsteinDisc, Interval, disc_boundary, disc_sup_norm, evaluate_checked

SUP_GRID = 2000
BUDGET_TOL = 1e-12  # relative slack in the direction budget checks


class Modulated:
    """``w -> exp(i c w) f(w)``."""

    def __init__(self, c: float, f: Callable):
        self.c = float(c)
        self.f = f

    def __call__(self, w):
        w = np.asarray(w, dtype=np.complex128)
        return np.exp(1j * self.c * w) * self.f(w)


def modulate(c: float, f: Callable) -> Callable:
    """Multiply ``f`` by the plane wave ``exp(i c w)``; ``c = 0`` returns ``f`` itself."""
    if c == 0:
        return f
    return Modulated(c, f)


class OscillatoryInterpolant:
    """``exp(i c w) p(w)`` for a polynomial interpolant ``p`` of the demodulated function."""

    def __init__(self, c: float, smooth: Interpolant):
        self.c = float(c)
        self.smooth = smooth

    @property
    def interval(self) -> Interval:
        return self.smooth.interval

    @property
    def order(self) -> int:
        return self.smooth.order

    def __call__(self, w):
        w = np.asarray(w, dtype=np.complex128)
        return np.exp(1j * self.c * w) * self.smooth(w)


def oscillatory_interpolate(f: Callable, interval: Interval, m: int, c: float) -> OscillatoryInterpolant:
    """Interpolate ``exp(-i c x) f(x)`` at order ``m`` and re-apply ``exp(i c x)``."""
    return OscillatoryInterpolant(c, interpolate(modulate(-c, f), interval, m))


@dataclass(frozen=True)
class DirectionalChain:
    """A :class:`~nestpol.chain.Chain` with a direction per level and a neighbour budget ``omega``.

    Construction enforces ``|c_l - c_{l-1}| (b_l - a_l) <= omega`` and then
    confirms the implied long-range bound
    ``|c_j - c_i| (b_j - a_j) <= omega / (1 - delta0)`` for every pair.
    """

    base: Chain
    directions: tuple
    omega: float

    def __post_init__(self):
        c = tuple(float(x) for x in self.directions)
        object.__setattr__(self, "directions", c)
        if len(c) != self.base.L + 1:
            raise DomainError(f"need {self.base.L + 1} directions, got {len(c)}")
        if not self.omega > 0:
            raise DomainError(f"omega must be positive, got {self.omega}")
        levels = self.base.levels
        for l in range(1, len(c)):
            used = abs(c[l] - c[l - 1]) * levels[l].length
            if used > self.omega * (1 + BUDGET_TOL):
                raise DomainError(
                    f"direction step at level {l} uses {used:.6g} > omega={self.omega}")
        limit = self.omega / (1.0 - self.base.delta0) * (1 + BUDGET_TOL)
        for i in range(len(c)):
            for j in range(i, len(c)):
                if abs(c[j] - c[i]) * levels[j].length > limit:
                    raise AuditError(f"long-range direction bound fails for i={i}, j={j}")

    @property
    def L(self) -> int:
        return self.base.L

    @property
    def levels(self):
        return self.base.levels


def constant_directions(chain: Chain, c: float) -> tuple:
    return (float(c),) * (chain.L + 1)


def zero_directions(chain: Chain) -> tuple:
    return constant_directions(chain, 0.0)


def nearest_directions(chain: Chain, target: float, omega: float, c0: float = 0.0) -> tuple:
    """Start at ``c0`` and move towards ``target`` as far as the budget allows per level."""
    out = [float(c0)]
    for l in range(1, chain.L + 1):
        step = omega / chain.levels[l].length
        out.append(out[-1] + float(np.clip(target - out[-1], -step, step)))
    return tuple(out)


def random_directions(rng: np.random.Generator, chain: Chain, omega: float, c0: float = 0.0) -> tuple:
    """Random walk whose steps use a uniform fraction of the per-level budget."""
    out = [float(c0)]
    for l in range(1, chain.L + 1):
        step = omega / chain.levels[l].length
        out.append(out[-1] + rng.uniform(-step, step))
    return tuple(out)


def compute_C_os(omega: float, delta0: float, rho: float) -> float:
    """``exp(omega / (1 - delta0) * (rho - 1/rho) / 4)``."""
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega}")
    if not 0.0 < delta0 < 1.0:
        raise DomainError(f"delta0 must lie in (0, 1), got {delta0}")
    if not rho >= 1.0:
        raise DomainError(f"rho must be >= 1, got {rho}")
    return safe_exp(omega / (1.0 - delta0) * (rho - 1.0 / rho) / 4.0)


def chain_C_os(chain: DirectionalChain, params: BoundParams) -> float:
    """Oscillation constant on the disc of radius ``sigma rho0``, as the chain estimates need."""
    return compute_C_os(chain.omega, params.delta0, params.sigma * params.rho0)


def bounded_oscillation_check(chain: DirectionalChain, rho: float, i: int, j: int,
                              n_samples: int = MEASURE_SAMPLES) -> float:
    """Sampled max of ``|exp(i (c_j - c_i) w)|`` on the boundary of the level-``j`` disc."""
    _check_levels(chain.base, i, j)
    dc = chain.directions[j] - chain.directions[i]
    w = disc_boundary(BernsteinDisc(chain.levels[j], rho), n_samples)
    return float(np.max(np.abs(np.exp(1j * dc * w))))


def oscillatory_chain_interpolate(chain: DirectionalChain, f: Callable, i: int, j: int):
    """Apply the oscillatory interpolation of levels ``i+1..j`` in turn; identity for ``i == j``."""
    _check_levels(chain.base, i, j)
    if i == j:
        return PassThrough(f)
    p = f
    for l in range(i + 1, j + 1):
        p = oscillatory_interpolate(p, chain.levels[l], chain.base.order(l), chain.directions[l])
    return p


def oscillatory_bounds(chain: DirectionalChain, params: BoundParams, C_os: float, i: int, j: int):
    """Smoothed stability product and accuracy sum.

    Returns
    -------
    (stability, accuracy) : tuple of float
        ``prod_{l=i+1}^{j} (1 + C_os^2 C_in q^{m_l})`` and
        ``sum_k prod_{l=i+1}^{k-1} (1 + C_os^2 C_in q^{m_l}) C_os^2 C_in q^{m_k}``.
    """
    _check_levels(chain.base, i, j)
    if not C_os >= 1.0:
        raise DomainError(f"C_os must be >= 1, got {C_os}")
    k2 = C_os ** 2 * params.C_in
    factors = [1.0 + k2 * params.q ** chain.base.order(l) for l in range(i + 1, j + 1)]
    stability = float(np.prod(factors))
    accuracy = 0.0
    for k in range(i + 1, j + 1):
        accuracy += float(np.prod(factors[: k - i - 1])) * k2 * params.q ** chain.base.order(k)
    return stability, accuracy


def min_oscillatory_order(L: int, q: float, p: float) -> int:
    """Smallest ``alpha >= 1`` with ``alpha >= log(L) / (log p - log q)``, so ``L (q/p)^alpha <= 1``."""
    if L < 1:
        raise DomainError(f"L must be positive, got {L}")
    if not 0.0 < q < p <= 1.0:
        raise DomainError(f"need 0 < q < p <= 1, got q={q}, p={p}")
    alpha = max(1, math.ceil(math.log(L) / (math.log(p) - math.log(q)) - 1e-12))
    while L * (q / p) ** alpha > 1.0:
        alpha += 1
    return alpha


def oscillatory_stability_constant(C_os: float, C_in: float, p: float, alpha: int) -> float:
    """``1 + C_os C_in exp(C_os^2 C_in) p^alpha``; infinite once the exponential overflows."""
    e = safe_exp(C_os ** 2 * C_in)
    if math.isinf(e):
        return math.inf
    return 1.0 + C_os * C_in * e * p ** alpha


class OscillatoryMeasurement(NamedTuple):
    stab_measured: float
    stab_bound: float
    err_measured: float
    err_bound: float
    uniform_bound: float  # exp(C_os^2 C_in) ||E f||, meaningful once alpha >= alpha0

    @property
    def ok(self) -> bool:
        return self.stab_measured <= self.stab_bound and self.err_measured <= self.err_bound


def measure_oscillatory(chain: DirectionalChain, params: BoundParams, f: Callable, i: int, j: int
                        ) -> OscillatoryMeasurement:
    """Smoothed norms ``||exp(-i c_i w) (.)||`` on the level-``j`` disc of radius ``rho0``."""
    if chain.base.delta0 > params.delta0 * (1 + 1e-12):
        raise ConfigurationError("chain shrinks more slowly than the constants assume")
    rho = params.rho0
    C_os = chain_C_os(chain, params)
    stab, acc = oscillatory_bounds(chain, params, C_os, i, j)
    ci = chain.directions[i]
    p = oscillatory_chain_interpolate(chain, f, i, j)
    lj = chain.levels[j]
    smooth_p = modulate(-ci, p)
    smooth_err = modulate(-ci, lambda w: f(w) - p(w))
    f_norm = disc_sup_norm(modulate(-ci, f), BernsteinDisc(chain.levels[i], rho), BOUND_SAMPLES, refine=True)
    uniform = safe_exp(C_os ** 2 * params.C_in)
    return OscillatoryMeasurement(
        disc_sup_norm(smooth_p, BernsteinDisc(lj, rho), MEASURE_SAMPLES),
        stab * f_norm,
        disc_sup_norm(smooth_err, BernsteinDisc(lj, rho), MEASURE_SAMPLES),
        acc * f_norm,
        uniform * f_norm,
    )


class SupStabilityMeasurement(NamedTuple):
    measured: float
    bound: float
    alpha: int
    alpha0: int
    C_st: float


def oscillatory_sup_stability_check(chain: DirectionalChain, params: BoundParams, f: Callable,
                                    i: int, j: int) -> SupStabilityMeasurement:
    """Interval sup of the iterated interpolant against ``C_st Lambda_{m_{i+1}} ||f||``.

    Only continuity of ``f`` on ``[a_i, b_i]`` is needed.  Orders must be
    constant and at least ``min_oscillatory_order(L, q, p)``.
    """
    _check_levels(chain.base, i, j)
    if not i < j:
        raise DomainError(f"need i < j, got i={i}, j={j}")
    orders = set(chain.base.orders)
    if len(orders) != 1:
        raise ConfigurationError("the sup-norm stability check needs constant orders")
    alpha = orders.pop()
    alpha0 = min_oscillatory_order(chain.L, params.q, params.p)
    if alpha < alpha0:
        raise HypothesisError(f"order {alpha} is below the oscillatory threshold {alpha0}")
    C_st = oscillatory_stability_constant(chain_C_os(chain, params), params.C_in, params.p, alpha)
    p = oscillatory_chain_interpolate(chain, f, i, j)
    xj = chain.levels[j].grid(SUP_GRID).astype(np.complex128)
    xi = chain.levels[i].grid(SUP_GRID).astype(np.complex128)
    measured = float(np.max(np.abs(p(xj))))
    f_sup = float(np.max(np.abs(evaluate_checked(f, xi))))
    bound = C_st * lebesgue_constant(chain.base.order(i + 1)) * f_sup
    return SupStabilityMeasurement(measured, bound, alpha, alpha0, C_st)

