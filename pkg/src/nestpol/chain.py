"""Iterated interpolation along nested interval chains and its error/stability bounds.

A chain is a sequence of nested intervals ``[a_0, b_0] ⊇ ... ⊇ [a_L, b_L]``
with orders ``m_1..m_L``.  The iterated operator from level ``i`` to level
``j`` interpolates at level ``i + 1``, re-interpolates that polynomial at level
``i + 2`` and so on up to ``j``.

Two families of bounds are provided.  The *approximation-first* bounds control
each single-level error directly and need decreasing orders to stay uniformly
stable; the *stability-first* bounds measure stability on inflated discs and
give uniform constants for constant orders above a threshold.  Bound
constants are gathered in :class:`BoundParams`.

All functions here are pure; experiments over parameter grids may run in
parallel without coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .chebyshev import derivative, interpolate
from .errors import ConfigurationError, DomainError, HypothesisError, LevelError
from .geometry import (
    BernsteinDisc,
    Interval,
    disc_sup_norm,
    evaluate_checked,
    nesting_sigma,
)

MEASURE_SAMPLES = 1024  # boundary samples on the measured side
BOUND_SAMPLES = 8192  # boundary samples (plus refinement) on the bound side
DERIVATIVE_GRID = 1000
NEST_TOL = 1e-12  # relative slack in the nesting/shrinking checks


# --------------------------------------------------------------------------
# chains
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Chain:
    """Nested intervals ``levels[0] ⊇ ... ⊇ levels[L]`` with orders ``m_1..m_L``.

    Parameters
    ----------
    levels : sequence of Interval
        ``L + 1`` nested intervals, coarsest first.
    orders : sequence of int
        ``L`` positive interpolation orders; ``orders[l - 1]`` belongs to level ``l``.
    delta0 : float
        Shrinking factor, every level is at most ``delta0`` times its parent.
    delta1 : float, optional
        Slow-shrinking factor, every level is at least ``delta1`` times its
        parent.  Only needed for derivative estimates.
    """

    levels: tuple
    orders: tuple
    delta0: float
    delta1: Optional[float] = None

    def __post_init__(self):
        levels = tuple(self.levels)
        orders = tuple(int(m) for m in self.orders)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "orders", orders)
        if len(levels) < 1:
            raise DomainError("a chain needs at least one level")
        if len(orders) != len(levels) - 1:
            raise DomainError(f"{len(levels)} levels need {len(levels) - 1} orders, got {len(orders)}")
        if any(m < 1 for m in orders):
            raise DomainError(f"orders must be positive, got {orders}")
        if not 0.0 < self.delta0 < 1.0:
            raise DomainError(f"delta0 must lie in (0, 1), got {self.delta0}")
        if self.delta1 is not None and not 0.0 < self.delta1 <= 1.0:
            raise DomainError(f"delta1 must lie in (0, 1], got {self.delta1}")
        for l in range(1, len(levels)):
            parent, child = levels[l - 1], levels[l]
            slack = NEST_TOL * parent.length
            if child.a < parent.a - slack or child.b > parent.b + slack:
                raise DomainError(f"level {l} {child} is not inside level {l - 1} {parent}")
            if child.length > self.delta0 * parent.length * (1 + NEST_TOL):
                raise DomainError(f"level {l} shrinks by less than delta0={self.delta0}")
            if self.delta1 is not None and child.length < self.delta1 * parent.length * (1 - NEST_TOL):
                raise DomainError(f"level {l} shrinks by more than delta1={self.delta1}")

    @property
    def L(self) -> int:
        return len(self.levels) - 1

    def order(self, level: int) -> int:
        """Order ``m_level`` for ``level`` in ``[1, L]``."""
        if not 1 <= level <= self.L:
            raise LevelError(f"orders exist for levels 1..{self.L}, got {level}")
        return self.orders[level - 1]

    @property
    def min_order(self) -> int:
        return min(self.orders) if self.orders else 0

    def with_orders(self, orders) -> "Chain":
        return Chain(self.levels, tuple(orders), self.delta0, self.delta1)


def _as_orders(orders, L: int) -> tuple:
    if np.isscalar(orders):
        return (int(orders),) * L
    orders = tuple(int(m) for m in orders)
    if len(orders) != L:
        raise DomainError(f"need {L} orders, got {len(orders)}")
    return orders


def dyadic_chain(root: Interval, L: int, orders, anchor="center", delta1: Optional[float] = 0.5) -> Chain:
    """Chain whose level ``l`` has length ``2**-l`` times the root length.

    ``anchor`` places each child inside its parent: ``"left"``, ``"center"``,
    ``"right"``, or a sequence of those, one per level.
    """
    if L < 0:
        raise DomainError(f"L must be nonnegative, got {L}")
    anchors = [anchor] * L if isinstance(anchor, str) else list(anchor)
    if len(anchors) != L:
        raise DomainError(f"need {L} anchors, got {len(anchors)}")
    levels = [root]
    for where in anchors:
        parent = levels[-1]
        h = 0.5 * parent.length
        if where == "left":
            a = parent.a
        elif where == "right":
            a = parent.b - h
        elif where == "center":
            a = parent.a + 0.5 * h
        else:
            raise DomainError(f"unknown anchor {where!r}")
        levels.append(Interval(a, a + h))
    return Chain(tuple(levels), _as_orders(orders, L), 0.5, delta1)


def random_dyadic_chain(rng: np.random.Generator, root: Interval, L: int, orders,
                        delta1: Optional[float] = 0.5) -> Chain:
    """Dyadic chain with each child placed uniformly at random inside its parent."""
    levels = [root]
    for _ in range(L):
        parent = levels[-1]
        h = 0.5 * parent.length
        a = parent.a + rng.uniform(0.0, parent.length - h)
        levels.append(Interval(a, a + h))
    return Chain(tuple(levels), _as_orders(orders, L), 0.5, delta1)


def _check_levels(chain: Chain, i: int, j: int):
    if not 0 <= i <= j <= chain.L:
        raise LevelError(f"need 0 <= i <= j <= L={chain.L}, got i={i}, j={j}")


# --------------------------------------------------------------------------
# constants
# --------------------------------------------------------------------------


def compute_C_in(sigma: float, q: float, Lambda: float = 1.0, lambda_: float = 1.0,
                 m_max: Optional[int] = None) -> float:
    """Supremum over ``m >= 1`` of ``2 (1 + Lambda (1+m)^lambda) / (sigma - 1) * (sigma q)^-m``.

    The scan covers ``[1, m_max]`` (default 100) and keeps going until 50
    consecutive decreasing terms confirm the maximum.
    """
    if not sigma > 1.0:
        raise DomainError(f"need sigma > 1, got {sigma}")
    growth = sigma * q
    if not growth > 1.0:
        raise DomainError(f"need sigma * q > 1, got {growth}")
    m_max = 100 if m_max is None else int(m_max)
    best = 0.0
    prev = math.inf
    run = 0
    m = 1
    while True:
        t = 2.0 * (1.0 + Lambda * (1.0 + m) ** lambda_) / (sigma - 1.0) * growth ** (-m)
        best = max(best, t)
        run = run + 1 if t < prev else 0
        prev = t
        if m >= m_max and run >= 50:
            break
        m += 1
    return best


def compute_C_ca(rho0: float) -> float:
    """Cauchy-estimate constant ``4 rho0 / (rho0 - 1)^2``."""
    if not rho0 > 1.0:
        raise DomainError(f"need rho0 > 1, got {rho0}")
    return 4.0 * rho0 / (rho0 - 1.0) ** 2


def min_stable_order(C_in: float, q1: float, q2: float, delta1: Optional[float] = None) -> int:
    """Smallest ``alpha >= 1`` with ``(q2^alpha / delta1) (1 + C_in q1^alpha) <= 1/2``.

    Without ``delta1`` the factor ``1 / delta1`` is dropped.
    """
    if not (0.0 < q1 < 1.0 and 0.0 < q2 < 1.0):
        raise DomainError(f"need q1, q2 in (0, 1), got q1={q1}, q2={q2}")
    scale = 1.0 if delta1 is None else 1.0 / delta1
    alpha = 1
    while scale * q2 ** alpha * (1.0 + C_in * q1 ** alpha) > 0.5:
        alpha += 1
    return alpha


@dataclass(frozen=True)
class BoundParams:
    """Free parameters and derived constants of the chain bounds.

    Use :meth:`derive` for the default choices.  ``C_in`` belongs to the pair
    ``(sigma, q)`` and drives the approximation-first and oscillatory bounds;
    ``C_in_sf`` belongs to ``(sigma**theta1, q1)`` and drives the
    stability-first and derivative bounds.
    """

    rho0: float
    delta0: float
    sigma: float
    q: float
    theta1: float
    theta2: float
    q1: float
    p: float
    Lambda: float = 1.0
    lambda_: float = 1.0
    q2: float = field(init=False)
    C_in: float = field(init=False)
    C_in_sf: float = field(init=False)
    C_ca: float = field(init=False)
    alpha0: int = field(init=False)

    def __post_init__(self):
        if not self.rho0 > 1.0:
            raise ConfigurationError(f"rho0 must exceed 1, got {self.rho0}")
        if not 0.0 < self.delta0 < 1.0:
            raise ConfigurationError(f"delta0 must lie in (0, 1), got {self.delta0}")
        sigma_max = nesting_sigma(self.rho0, self.delta0)
        if not 1.0 < self.sigma <= sigma_max * (1 + 1e-12):
            raise ConfigurationError(f"sigma must lie in (1, {sigma_max}], got {self.sigma}")
        if not 1.0 / self.sigma < self.q <= 1.0:
            raise ConfigurationError(f"q must lie in (1/sigma, 1], got {self.q}")
        if not (0.0 < self.theta1 < 1.0 and 0.0 < self.theta2 < 1.0
                and abs(self.theta1 + self.theta2 - 1.0) <= 1e-12):
            raise ConfigurationError("theta1, theta2 must lie in (0, 1) and sum to 1")
        if not self.sigma ** -self.theta1 < self.q1 < 1.0:
            raise ConfigurationError(f"q1 must lie in (sigma^-theta1, 1), got {self.q1}")
        if not self.q < self.p <= 1.0:
            raise ConfigurationError(f"p must lie in (q, 1], got {self.p}")
        q2 = self.sigma ** -self.theta2
        c_in = compute_C_in(self.sigma, self.q, self.Lambda, self.lambda_)
        c_in_sf = compute_C_in(self.sigma ** self.theta1, self.q1, self.Lambda, self.lambda_)
        object.__setattr__(self, "q2", q2)
        object.__setattr__(self, "C_in", c_in)
        object.__setattr__(self, "C_in_sf", c_in_sf)
        object.__setattr__(self, "C_ca", compute_C_ca(self.rho0))
        object.__setattr__(self, "alpha0", min_stable_order(c_in_sf, self.q1, q2))

    @classmethod
    def derive(cls, rho0: float = 2.0, delta0: float = 0.5, *, sigma: Optional[float] = None,
               q: Optional[float] = None, theta1: float = 0.5, q1: Optional[float] = None,
               p: Optional[float] = None, Lambda: float = 1.0, lambda_: float = 1.0) -> "BoundParams":
        """Fill unspecified parameters with geometric midpoints of their admissible ranges."""
        if not rho0 > 1.0:
            raise ConfigurationError(f"rho0 must exceed 1, got {rho0}")
        if not 0.0 < delta0 < 1.0:
            raise ConfigurationError(f"delta0 must lie in (0, 1), got {delta0}")
        sigma = nesting_sigma(rho0, delta0) if sigma is None else sigma
        q = sigma ** -0.5 if q is None else q
        q1 = sigma ** (-theta1 / 2.0) if q1 is None else q1
        p = math.sqrt(q) if p is None else p
        return cls(rho0, delta0, sigma, q, theta1, 1.0 - theta1, q1, p, Lambda, lambda_)

    @property
    def C_ap(self) -> float:
        """Accuracy constant ``2 C_in_sf`` of the constant-order stability estimate."""
        return 2.0 * self.C_in_sf

    def derivative_alpha0(self, delta1: float) -> int:
        return min_stable_order(self.C_in_sf, self.q1, self.q2, delta1)


def _check_params(chain: Chain, params: BoundParams):
    if chain.delta0 > params.delta0 * (1 + 1e-12):
        raise ConfigurationError(
            f"chain shrinks by delta0={chain.delta0} but the constants assume {params.delta0}")


# --------------------------------------------------------------------------
# iterated interpolation
# --------------------------------------------------------------------------


class PassThrough:
    """The identity operator applied to ``f``: calling it evaluates ``f`` itself."""

    is_identity = True

    def __init__(self, f: Callable):
        self.f = f

    def __call__(self, w):
        return self.f(w)

    def derivative(self):
        return self.f.derivative()


def iterated_interpolate(chain: Chain, f: Callable, i: int, j: int):
    """Interpolate ``f`` at level ``i + 1``, then re-interpolate level by level up to ``j``.

    Returns a :class:`PassThrough` for ``i == j`` and an
    :class:`~nestpol.chebyshev.Interpolant` on ``levels[j]`` otherwise.
    """
    _check_levels(chain, i, j)
    if i == j:
        return PassThrough(f)
    p = interpolate(f, chain.levels[i + 1], chain.order(i + 1))
    for l in range(i + 2, j + 1):
        p = interpolate(p, chain.levels[l], chain.order(l))
    return p


def single_step_error(f: Callable, interval: Interval, m: int, rho: float, tau: float = 1.0,
                      sigma: float = None, q: float = None, C_in: Optional[float] = None,
                      half: bool = False, n: int = MEASURE_SAMPLES):
    """Measured and bounded single-level interpolation error on the disc of radius ``rho``.

    The bound is ``C_in q^m tau^-m ||f||`` with the norm taken on the disc of
    radius ``sigma tau rho``.  With ``half`` the weakened variant is used:
    ``sigma`` and ``q`` are replaced by their square roots, so the rate halves
    in exchange for only needing ``f`` on the disc of radius
    ``sqrt(sigma) tau rho``.  ``C_in`` defaults to the constant of the pair
    actually used.

    Returns
    -------
    (measured, bound) : tuple of float
    """
    if sigma is None or q is None:
        raise ConfigurationError("single_step_error needs sigma and q")
    if rho < 1.0 or tau < 1.0:
        raise DomainError(f"need rho >= 1 and tau >= 1, got rho={rho}, tau={tau}")
    s, qq = (math.sqrt(sigma), math.sqrt(q)) if half else (sigma, q)
    if C_in is None:
        C_in = compute_C_in(s, qq)
    p = interpolate(f, interval, m)
    measured = disc_sup_norm(lambda w: f(w) - p(w), BernsteinDisc(interval, rho), n)
    f_norm = disc_sup_norm(f, BernsteinDisc(interval, s * tau * rho), BOUND_SAMPLES, refine=True)
    bound = C_in * qq ** m * tau ** (-m) * f_norm
    return measured, bound


# --------------------------------------------------------------------------
# bound formulas
# --------------------------------------------------------------------------


class ErrorFirstBounds(NamedTuple):
    stability: float
    terms: tuple

    @property
    def accuracy(self) -> float:
        return float(sum(self.terms))

    @property
    def largest_term(self) -> float:
        return max(self.terms) if self.terms else 0.0


def error_first_bounds(chain: Chain, params: BoundParams, i: int, j: int,
                       r: Optional[int] = None) -> ErrorFirstBounds:
    """Approximation-first stability product and per-level accuracy terms.

    ``stability = prod_{l=i+1}^{j} (1 + C_in q^{m_l})``; term ``k`` of the
    accuracy sum is ``prod_{l=k+1}^{j} (1 + C_in q^{m_l}) C_in q^{m_k (k - r)}``
    and multiplies ``||f||`` on the level-``r`` disc.  ``r`` defaults to ``i``.
    """
    _check_levels(chain, i, j)
    r = i if r is None else r
    if not 0 <= r <= i:
        raise LevelError(f"need 0 <= r <= i, got r={r}, i={i}")
    C, q = params.C_in, params.q
    factors = {l: 1.0 + C * q ** chain.order(l) for l in range(i + 1, j + 1)}
    stability = float(np.prod([factors[l] for l in range(i + 1, j + 1)]))
    terms = []
    for k in range(i + 1, j + 1):
        tail = float(np.prod([factors[l] for l in range(k + 1, j + 1)]))
        terms.append(tail * C * q ** (chain.order(k) * (k - r)))
    return ErrorFirstBounds(stability, tuple(terms))


def variable_order_schedule(alpha: int, beta: int, L: int) -> tuple:
    """Orders ``m_l = alpha + beta (L - l)`` for ``l = 1..L``."""
    if alpha < 1 or beta < 1 or L < 1:
        raise DomainError(f"need alpha, beta, L >= 1, got {alpha}, {beta}, {L}")
    return tuple(alpha + beta * (L - l) for l in range(1, L + 1))


def variable_order_stability_constant(alpha: int, beta: int, q: float, C_in: float) -> float:
    """Uniform stability constant ``exp(C_in q^alpha / (1 - q^beta))``."""
    if not 0.0 < q < 1.0:
        raise DomainError(f"need q in (0, 1), got {q}")
    return safe_exp(C_in * q ** alpha / (1.0 - q ** beta))


def variable_order_error_bound(alpha: int, beta: int, L: int, q: float, C_in: float, C_st: float) -> float:
    """``2 C_st C_in q^(min(alpha, beta) L) / (1 - q^(beta floor(L/2)))``."""
    if not q < 1.0:
        raise DomainError(f"need q < 1, got {q}")
    if L < 2:
        raise DomainError(f"need L > 1, got {L}")
    return 2.0 * C_st * C_in * q ** (min(alpha, beta) * L) / (1.0 - q ** (beta * (L // 2)))


def stability_first_bounds(chain: Chain, params: BoundParams, i: int, j: int):
    """Stability-first product (valid on the inflated disc) and accuracy sum.

    Returns
    -------
    (stability, accuracy) : tuple of float
        ``prod (1 + C q1^{m_l})`` and
        ``C sum_k q2^{m_k (k - i)} q1^{m_k} prod_{l=i+1}^{k-1} (1 + C q1^{m_l})``
        with ``C = C_in_sf``.
    """
    _check_levels(chain, i, j)
    C, q1, q2 = params.C_in_sf, params.q1, params.q2
    factors = [1.0 + C * q1 ** chain.order(l) for l in range(i + 1, j + 1)]
    stability = float(np.prod(factors))
    accuracy = 0.0
    for k in range(i + 1, j + 1):
        mk = chain.order(k)
        accuracy += C * q2 ** (mk * (k - i)) * q1 ** mk * float(np.prod(factors[: k - i - 1]))
    return stability, accuracy


class ConstantOrderConstants(NamedTuple):
    alpha: int
    alpha0: int
    C_ap: float
    C_st: float
    accuracy: float  # C_ap q1^alpha q2^alpha


def constant_order_constants(params: BoundParams, alpha: int) -> ConstantOrderConstants:
    """Uniform constants for minimal order ``alpha``; raises HypothesisError below ``alpha0``."""
    if alpha < params.alpha0:
        raise HypothesisError(f"minimal order {alpha} is below alpha0={params.alpha0}")
    acc = params.C_ap * params.q1 ** alpha * params.q2 ** alpha
    return ConstantOrderConstants(alpha, params.alpha0, params.C_ap, 1.0 + acc, acc)


def derivative_bound(params: BoundParams, alpha: int, length_i: float, f_norm: float) -> float:
    """``2 C_ca C_in_sf q1^alpha / (b_i - a_i) * ||f||``."""
    return 2.0 * params.C_ca * params.C_in_sf * params.q1 ** alpha / length_i * f_norm


def safe_exp(x: float) -> float:
    """``exp(x)``, or ``inf`` instead of OverflowError."""
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


# --------------------------------------------------------------------------
# measurements
# --------------------------------------------------------------------------


def disc_norm(f: Callable, interval: Interval, rho: float, bound_side: bool = False) -> float:
    """Sup norm on the disc of radius ``rho`` around ``interval``.

    Measured quantities use 1024 plain samples; bound-side norms use 8192
    samples plus local refinement.
    """
    disc = BernsteinDisc(interval, rho)
    if bound_side:
        return disc_sup_norm(f, disc, BOUND_SAMPLES, refine=True)
    return disc_sup_norm(f, disc, MEASURE_SAMPLES)


class ChainMeasurement(NamedTuple):
    stab_measured: float
    stab_bound: float
    err_measured: float
    err_bound: float

    @property
    def ok(self) -> bool:
        return self.stab_measured <= self.stab_bound and self.err_measured <= self.err_bound


def _error_fn(f, p):
    return lambda w: f(w) - p(w)


def measure_error_first(chain: Chain, params: BoundParams, f: Callable, i: int, j: int,
                        rho: Optional[float] = None, r: Optional[int] = None) -> ChainMeasurement:
    """Approximation-first stability and accuracy, measured on the level-``j`` disc."""
    _check_params(chain, params)
    rho = params.rho0 if rho is None else rho
    r = i if r is None else r
    b = error_first_bounds(chain, params, i, j, r)
    p = iterated_interpolate(chain, f, i, j)
    lj = chain.levels[j]
    return ChainMeasurement(
        disc_norm(p, lj, rho),
        b.stability * disc_norm(f, chain.levels[i], rho, True),
        disc_norm(_error_fn(f, p), lj, rho),
        b.accuracy * disc_norm(f, chain.levels[r], rho, True),
    )


def measure_stability_first(chain: Chain, params: BoundParams, f: Callable, i: int, j: int,
                            rho: Optional[float] = None) -> ChainMeasurement:
    """Stability-first measurements; stability is taken on the inflated level-``j`` disc."""
    _check_params(chain, params)
    rho = params.rho0 if rho is None else rho
    stab, acc = stability_first_bounds(chain, params, i, j)
    p = iterated_interpolate(chain, f, i, j)
    lj = chain.levels[j]
    f_norm = disc_norm(f, chain.levels[i], rho, True)
    inflated = params.sigma ** (params.theta2 * (j - i)) * rho
    return ChainMeasurement(
        disc_norm(p, lj, inflated),
        stab * f_norm,
        disc_norm(_error_fn(f, p), lj, rho),
        acc * f_norm,
    )


def measure_constant_order(chain: Chain, params: BoundParams, f: Callable, i: int, j: int,
                      rho: Optional[float] = None) -> ChainMeasurement:
    """Uniform stability ``C_st`` and accuracy ``C_ap q1^a q2^a`` at minimal order ``a``."""
    _check_params(chain, params)
    rho = params.rho0 if rho is None else rho
    cc = constant_order_constants(params, chain.min_order)
    p = iterated_interpolate(chain, f, i, j)
    lj = chain.levels[j]
    f_norm = disc_norm(f, chain.levels[i], rho, True)
    return ChainMeasurement(
        disc_norm(p, lj, rho),
        cc.C_st * f_norm,
        disc_norm(_error_fn(f, p), lj, rho),
        cc.accuracy * f_norm,
    )


class VariableOrderMeasurement(NamedTuple):
    L: int
    err_measured: float
    err_bound: float  # closed-form geometric bound times ||f||
    sum_bound: float  # approximation-first sum with r = i = 0, times ||f||
    stab_measured: float
    stab_bound: float  # uniform constant times ||f||


def measure_variable_order(params: BoundParams, f: Callable, alpha: int, beta: int, L: int,
                           root: Interval, anchor="center", rho: Optional[float] = None
                           ) -> VariableOrderMeasurement:
    """Error of the full chain ``0 -> L`` under the variable-order schedule."""
    rho = params.rho0 if rho is None else rho
    chain = dyadic_chain(root, L, variable_order_schedule(alpha, beta, L), anchor)
    _check_params(chain, params)
    c_st = variable_order_stability_constant(alpha, beta, params.q, params.C_in)
    f_norm = disc_norm(f, root, rho, True)
    p = iterated_interpolate(chain, f, 0, L)
    lL = chain.levels[L]
    closed = (variable_order_error_bound(alpha, beta, L, params.q, params.C_in, c_st)
              if L >= 2 else math.inf)
    return VariableOrderMeasurement(
        L,
        disc_norm(_error_fn(f, p), lL, rho),
        closed * f_norm,
        error_first_bounds(chain, params, 0, L, 0).accuracy * f_norm,
        disc_norm(p, lL, rho),
        c_st * f_norm,
    )


def decay_slope(xs: Sequence[float], errors: Sequence[float], floor: float = 0.0):
    """Least-squares slope of ``log(error)`` against ``x``, ignoring errors at or below ``floor``.

    Returns
    -------
    (slope, used) : tuple
        ``slope`` is NaN when fewer than two points remain.
    """
    xs = np.asarray(xs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = errors > floor
    if keep.sum() < 2:
        return math.nan, int(keep.sum())
    slope = np.polyfit(xs[keep], np.log(errors[keep]), 1)[0]
    return float(slope), int(keep.sum())


class DerivativeMeasurement(NamedTuple):
    measured: float
    bound: float
    alpha: int
    alpha0: int


def derivative_error_experiment(chain: Chain, params: BoundParams, f: Callable, i: int, j: int,
                                df: Optional[Callable] = None, rho: Optional[float] = None
                                ) -> DerivativeMeasurement:
    """Grid maximum of ``|f' - (I_{j,i} f)'|`` on level ``j`` against its bound.

    The chain must carry ``delta1`` and its minimal order must reach the
    derivative threshold ``alpha0(delta1)``; otherwise the bound does not
    apply and HypothesisError is raised.
    """
    _check_params(chain, params)
    _check_levels(chain, i, j)
    if chain.delta1 is None:
        raise ConfigurationError("derivative estimates need a chain with delta1")
    rho = params.rho0 if rho is None else rho
    if rho < params.rho0:
        raise DomainError(f"need rho >= rho0={params.rho0}, got {rho}")
    alpha = chain.min_order
    alpha0 = params.derivative_alpha0(chain.delta1)
    if alpha < alpha0:
        raise HypothesisError(f"minimal order {alpha} is below the derivative threshold {alpha0}")
    df = f.derivative() if df is None else df
    x = chain.levels[j].grid(DERIVATIVE_GRID).astype(np.complex128)
    p = iterated_interpolate(chain, f, i, j)
    if isinstance(p, PassThrough):
        measured = 0.0
    else:
        dp = derivative(p)
        measured = float(np.max(np.abs(evaluate_checked(df, x) - dp(x))))
    li = chain.levels[i]
    bound = derivative_bound(params, alpha, li.length, disc_norm(f, li, rho, True))
    return DerivativeMeasurement(measured, bound, alpha, alpha0)


def telescoping_error_first(chain: Chain, f: Callable, i: int, j: int) -> Callable:
    """``sum_{l=i+1}^{j} I_{j,l}[f - I_l f]`` as a callable; equals ``f - I_{j,i} f``."""
    _check_levels(chain, i, j)
    parts = []
    for l in range(i + 1, j + 1):
        step = interpolate(f, chain.levels[l], chain.order(l))
        parts.append(iterated_interpolate(chain, _error_fn(f, step), l, j))
    return lambda w: sum((part(w) for part in parts), np.zeros(np.shape(w), dtype=np.complex128))


def telescoping_stability_first(chain: Chain, f: Callable, i: int, j: int) -> Callable:
    """``sum_{l=i+1}^{j} (I_{l-1,i} f - I_l I_{l-1,i} f)`` as a callable."""
    _check_levels(chain, i, j)
    parts = []
    for l in range(i + 1, j + 1):
        prev = iterated_interpolate(chain, f, i, l - 1)
        step = interpolate(prev, chain.levels[l], chain.order(l))
        parts.append(_error_fn(prev, step))
    return lambda w: sum((part(w) for part in parts), np.zeros(np.shape(w), dtype=np.complex128))

