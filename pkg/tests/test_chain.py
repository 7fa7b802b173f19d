import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nestpol.chain import (
    BoundParams,
    Chain,
    PassThrough,
    compute_C_ca,
    compute_C_in,
    constant_order_constants,
    decay_slope,
    derivative_bound,
    derivative_error_experiment,
    disc_norm,
    dyadic_chain,
    error_first_bounds,
    iterated_interpolate,
    measure_constant_order,
    measure_error_first,
    measure_stability_first,
    measure_variable_order,
    min_stable_order,
    random_dyadic_chain,
    safe_exp,
    single_step_error,
    stability_first_bounds,
    telescoping_error_first,
    telescoping_stability_first,
    variable_order_error_bound,
    variable_order_schedule,
    variable_order_stability_constant,
)
from nestpol.chebyshev import interpolate
from nestpol.errors import ConfigurationError, DomainError, HypothesisError, LevelError
from nestpol.functions import HelmholtzSlice, Monomial, Pole
from nestpol.geometry import Interval, nesting_sigma

ROOT = Interval(-1.0, 1.0)


@pytest.fixture(scope="module")
def params():
    return BoundParams.derive(2.0, 0.5)


def brute_C_in(sigma, q, Lambda=1.0, lambda_=1.0, m_max=5000):
    m = np.arange(1, m_max + 1, dtype=float)
    return float(np.max(2 * (1 + Lambda * (1 + m) ** lambda_) / (sigma - 1) * (sigma * q) ** -m))


class TestChainType:
    def test_nesting_enforced(self):
        with pytest.raises(DomainError):
            Chain((ROOT, Interval(0.5, 1.5)), (3,), 0.5)

    def test_shrinking_enforced(self):
        with pytest.raises(DomainError):
            Chain((ROOT, Interval(-1.0, 0.5)), (3,), 0.5)

    def test_slow_shrinking_enforced(self):
        with pytest.raises(DomainError):
            Chain((ROOT, Interval(0.0, 0.25)), (3,), 0.5, delta1=0.5)

    def test_order_count(self):
        with pytest.raises(DomainError):
            Chain((ROOT, Interval(0.0, 1.0)), (3, 4), 0.5)

    @pytest.mark.parametrize("anchor", ["left", "center", "right", ["left", "right", "center"]])
    def test_dyadic(self, anchor):
        chain = dyadic_chain(ROOT, 3, 5, anchor)
        assert [lv.length for lv in chain.levels] == [2.0, 1.0, 0.5, 0.25]
        assert chain.orders == (5, 5, 5)
        assert chain.delta0 == 0.5 and chain.delta1 == 0.5

    def test_random_chain_nested(self):
        chain = random_dyadic_chain(np.random.default_rng(0), ROOT, 6, 4)
        for parent, child in zip(chain.levels, chain.levels[1:]):
            assert parent.contains(child)

    def test_order_index(self):
        chain = dyadic_chain(ROOT, 2, (4, 5))
        assert chain.order(2) == 5
        with pytest.raises(LevelError):
            chain.order(0)


class TestConstants:
    def test_C_in_examples(self):
        assert compute_C_in(2.0, 1.0) == 3.0
        assert compute_C_in(4.0, 1.0) == 0.5

    @pytest.mark.parametrize("sigma,q,Lambda,lam", [(1.309, 0.874, 1, 1), (1.05, 0.99, 1, 1),
                                                    (2.0, 0.6, 3.0, 2.0), (1.5, 0.8, 0.5, 0.5)])
    def test_C_in_matches_brute_force(self, sigma, q, Lambda, lam):
        assert compute_C_in(sigma, q, Lambda, lam) == pytest.approx(brute_C_in(sigma, q, Lambda, lam), rel=1e-14)

    def test_C_in_diverges_as_product_tends_to_one(self):
        values = [compute_C_in(1.5, q) for q in (0.9, 0.8, 0.7, 0.68, 0.67)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_C_in_domain(self):
        with pytest.raises(DomainError):
            compute_C_in(1.5, 0.6)

    def test_C_ca(self):
        assert compute_C_ca(2.0) == 8.0
        assert compute_C_ca(3.0) == 3.0
        with pytest.raises(DomainError):
            compute_C_ca(1.0)

    @pytest.mark.parametrize("w0", [3.0, 2 + 1j, -2.5])
    def test_cauchy_inequality(self, w0):
        f = Pole(w0)
        iv = Interval(-0.5, 0.5)
        x = iv.grid(2001)
        h = 1e-6
        fd = (f(x + h) - f(x - h)) / (2 * h)
        lhs = float(np.max(np.abs(fd)))
        rhs = compute_C_ca(2.0) / iv.length * disc_norm(f, iv, 2.0, bound_side=True)
        assert lhs <= rhs

    def test_min_stable_order_examples(self):
        assert min_stable_order(0.0, 0.5, 0.5) == 1
        assert min_stable_order(1.0, 0.5, 0.5) == 2
        assert min_stable_order(1.0, 0.5, 0.5, 0.5) > min_stable_order(1.0, 0.5, 0.5)

    @given(st.floats(0.0, 100.0), st.floats(0.05, 0.99), st.floats(0.05, 0.99))
    def test_min_stable_order_is_minimal(self, C, q1, q2):
        a = min_stable_order(C, q1, q2)
        holds = lambda k: q2 ** k * (1 + C * q1 ** k) <= 0.5
        assert holds(a)
        assert a == 1 or not holds(a - 1)

    def test_default_derivation(self, params):
        sigma = nesting_sigma(2.0, 0.5)
        assert params.sigma == sigma
        assert params.q == pytest.approx(sigma ** -0.5)
        assert params.q2 == sigma ** -params.theta2
        assert params.q1 == pytest.approx(sigma ** -0.25)
        assert params.p == pytest.approx(math.sqrt(params.q))
        assert params.C_in == compute_C_in(params.sigma, params.q)
        assert params.C_ca == 8.0
        assert params.alpha0 == min_stable_order(params.C_in_sf, params.q1, params.q2)

    @pytest.mark.parametrize("kwargs", [dict(q=0.5), dict(q1=0.5), dict(theta1=1.0), dict(p=0.5),
                                        dict(sigma=3.0), dict(sigma=1.0)])
    def test_parameter_ranges(self, kwargs):
        with pytest.raises(ConfigurationError):
            BoundParams.derive(2.0, 0.5, **kwargs)

    def test_safe_exp(self):
        assert safe_exp(1.0) == math.e
        assert safe_exp(1e5) == math.inf


class TestSingleStep:
    def test_constant(self):
        meas, bound = single_step_error(lambda w: np.ones_like(w), ROOT, 4, 1.5, sigma=1.2, q=0.9)
        assert meas <= 1e-15 and bound > 0

    def test_pole_example(self):
        sigma = nesting_sigma(1.1, 0.5)
        q = sigma ** -0.5
        for m in range(5, 21):
            meas, bound = single_step_error(Pole(3.0), ROOT, m, 1.1, sigma=sigma, q=q)
            assert meas <= bound

    def test_tau_scaling(self):
        const = lambda w: np.ones_like(w)
        _, b1 = single_step_error(const, ROOT, 10, 1.5, tau=1.0, sigma=1.2, q=0.9)
        _, b2 = single_step_error(const, ROOT, 10, 1.5, tau=2.0, sigma=1.2, q=0.9)
        assert b2 / b1 == pytest.approx(2.0 ** -10, rel=1e-12)

    def test_weakened_mode(self):
        sigma = nesting_sigma(2.0, 0.5)
        q = sigma ** -0.5
        for m in (4, 8, 12):
            meas, bound = single_step_error(Pole(3.0), ROOT, m, 2.0, sigma=sigma, q=q, half=True)
            assert meas <= bound

    def test_needs_sigma(self):
        with pytest.raises(ConfigurationError):
            single_step_error(Pole(3.0), ROOT, 4, 2.0)


class TestIteratedInterpolation:
    def test_identity(self):
        chain = dyadic_chain(ROOT, 3, 6)
        f = Pole(3.0)
        p = iterated_interpolate(chain, f, 2, 2)
        assert isinstance(p, PassThrough)
        assert p(0.3) == f(0.3)

    def test_polynomial_reproduced(self):
        chain = dyadic_chain(ROOT, 4, (6, 7, 8, 6), "right")
        f = Monomial(5)
        x = chain.levels[4].grid(200)
        assert np.max(np.abs(iterated_interpolate(chain, f, 0, 4)(x) - x ** 5)) <= 1e-10

    def test_recursive_definition(self):
        chain = dyadic_chain(ROOT, 3, (7, 6, 5), "left")
        f = Pole(3.0)
        inner = iterated_interpolate(chain, f, 0, 2)
        outer = interpolate(inner, chain.levels[3], chain.order(3))
        x = chain.levels[3].grid(300)
        np.testing.assert_allclose(iterated_interpolate(chain, f, 0, 3)(x), outer(x), rtol=1e-14)

    def test_associativity(self):
        chain = dyadic_chain(ROOT, 4, (9, 8, 7, 6), ["left", "center", "right", "center"])
        f = Pole(2 + 1j)
        for i in range(5):
            for j in range(i, 5):
                x = chain.levels[j].grid(500)
                direct = iterated_interpolate(chain, f, i, j)(x)
                scale = np.max(np.abs(direct))
                for k in range(i, j + 1):
                    mid = iterated_interpolate(chain, f, i, k)
                    composed = iterated_interpolate(chain, mid, k, j)(x)
                    assert np.max(np.abs(composed - direct)) <= 1e-10 * scale

    def test_index_errors(self):
        chain = dyadic_chain(ROOT, 2, 4)
        with pytest.raises(LevelError):
            iterated_interpolate(chain, Pole(3.0), 2, 1)
        with pytest.raises(LevelError):
            iterated_interpolate(chain, Pole(3.0), 0, 3)

    @pytest.mark.parametrize("identity", [telescoping_error_first, telescoping_stability_first])
    def test_telescoping(self, identity):
        # low orders keep f - I f far above roundoff, so the relative check is meaningful
        chain = dyadic_chain(ROOT, 4, (3, 2, 4, 2), "center")
        f = Pole(1.5 + 0.5j)
        for i, j in [(0, 4), (1, 3), (0, 1), (2, 4)]:
            x = chain.levels[j].grid(400)
            err = f(x) - iterated_interpolate(chain, f, i, j)(x)
            total = identity(chain, f, i, j)(x)
            assert np.max(np.abs(total - err)) <= 1e-9 * np.max(np.abs(err))


class TestErrorFirst:
    def test_empty_window(self, params):
        b = error_first_bounds(dyadic_chain(ROOT, 3, 30), params, 2, 2)
        assert b.stability == 1.0 and b.accuracy == 0.0 and b.largest_term == 0.0

    def test_terms_decay_for_constant_orders(self, params):
        b = error_first_bounds(dyadic_chain(ROOT, 6, 30), params, 0, 6)
        assert all(t2 < t1 for t1, t2 in zip(b.terms, b.terms[1:]))

    def test_term_formula(self, params):
        chain = dyadic_chain(ROOT, 3, (27, 29, 31))
        b = error_first_bounds(chain, params, 0, 3)
        C, q = params.C_in, params.q
        expected_first = (1 + C * q ** 29) * (1 + C * q ** 31) * C * q ** 27
        assert b.terms[0] == pytest.approx(expected_first, rel=1e-14)
        assert b.terms[2] == pytest.approx(C * q ** (31 * 3), rel=1e-14)

    def test_r_above_i_rejected(self, params):
        with pytest.raises(LevelError):
            error_first_bounds(dyadic_chain(ROOT, 3, 30), params, 1, 3, r=2)

    def test_measured_within_bounds_dyadic(self, params):
        f = Pole(3.0)
        for anchor in ("left", "center", "right"):
            chain = dyadic_chain(ROOT, 4, params.alpha0, anchor)
            for i in range(4):
                for j in range(i + 1, 5):
                    assert measure_error_first(chain, params, f, i, j).ok

    def test_random_chains_three_functions(self, params):
        rng = np.random.default_rng(2024)
        functions = [Pole(3.0), Pole(2.0 + 1.0j), HelmholtzSlice(10.0, 1.5)]
        failures = 0
        for _ in range(10):
            chain = random_dyadic_chain(rng, ROOT, 4, params.alpha0)
            for f in functions:
                for i, j in [(0, 1), (0, 4), (1, 3), (2, 4)]:
                    failures += not measure_error_first(chain, params, f, i, j).ok
        assert failures == 0

    def test_general_r_exploratory(self, params):
        # r < i is exposed but only the r = i case is exercised in the source material
        chain = dyadic_chain(ROOT, 4, params.alpha0)
        res = measure_error_first(chain, params, Pole(3.0), 2, 4, r=0)
        assert res.err_measured <= res.err_bound

    def test_chain_mismatch_rejected(self):
        params = BoundParams.derive(2.0, 0.25)
        with pytest.raises(ConfigurationError):
            measure_error_first(dyadic_chain(ROOT, 2, 30), params, Pole(3.0), 0, 2)


class TestVariableOrder:
    def test_schedule_examples(self):
        assert variable_order_schedule(2, 1, 4) == (5, 4, 3, 2)
        assert variable_order_schedule(3, 2, 1) == (3,)
        with pytest.raises(DomainError):
            variable_order_schedule(0, 1, 3)

    def test_error_bound_example(self):
        assert variable_order_error_bound(2, 2, 4, 0.5, 1.0, 1.0) == pytest.approx(2 * 0.5 ** 8 / (1 - 0.5 ** 4))
        assert variable_order_error_bound(2, 2, 4, 0.5, 1.0, 1.0) == pytest.approx(0.0083333333333, rel=1e-10)
        with pytest.raises(DomainError):
            variable_order_error_bound(2, 2, 4, 1.0, 1.0, 1.0)

    def test_doubling_L(self):
        q = 0.7
        a = variable_order_error_bound(1, 3, 4, q, 1.0, 1.0) * (1 - q ** 6)
        b = variable_order_error_bound(1, 3, 8, q, 1.0, 1.0) * (1 - q ** 12)
        assert b / a == pytest.approx(q ** 4, rel=1e-12)

    @given(st.integers(1, 6), st.integers(1, 4), st.integers(1, 12))
    def test_uniform_stability(self, alpha, beta, L):
        params = BoundParams.derive(2.0, 0.5)
        chain = dyadic_chain(ROOT, L, variable_order_schedule(alpha, beta, L))
        limit = variable_order_stability_constant(alpha, beta, params.q, params.C_in)
        for i in range(L + 1):
            for j in range(i, L + 1):
                assert error_first_bounds(chain, params, i, j).stability <= limit * (1 + 1e-12)

    @pytest.mark.parametrize("alpha,beta", [(1, 1), (1, 2), (2, 1), (2, 2)])
    def test_bounds_and_decay(self, params, alpha, beta):
        f = Pole(3.0)
        errors = []
        for L in range(2, 9):
            res = measure_variable_order(params, f, alpha, beta, L, ROOT)
            assert res.err_measured <= res.err_bound
            assert res.err_measured <= res.sum_bound
            assert res.stab_measured <= res.stab_bound
            errors.append(res.err_measured)
        slope, used = decay_slope(range(2, 9), errors)
        assert used == 7
        assert slope <= 0.8 * math.log(params.q) * min(alpha, beta)

    def test_decay_slope_floor(self):
        slope, used = decay_slope([1, 2, 3, 4], [1e-2, 1e-4, 1e-17, 1e-17], floor=1e-15)
        assert used == 2 and slope == pytest.approx(math.log(1e-2))
        assert math.isnan(decay_slope([1, 2], [1e-20, 1e-20], 1e-15)[0])


class TestStabilityFirst:
    def test_empty_window(self, params):
        assert stability_first_bounds(dyadic_chain(ROOT, 3, 30), params, 1, 1) == (1.0, 0.0)

    def test_accuracy_collapse(self, params):
        for alpha in range(params.alpha0, params.alpha0 + 5):
            chain = dyadic_chain(ROOT, 8, alpha)
            for i in range(8):
                for j in range(i + 1, 9):
                    _, acc = stability_first_bounds(chain, params, i, j)
                    first = params.C_in_sf * params.q1 ** alpha * params.q2 ** alpha
                    assert acc <= 2 * first * (1 + 1e-12)

    def test_measured_within_bounds(self, params):
        f = Pole(3.0)
        chain = dyadic_chain(ROOT, 5, params.alpha0 + 2, "left")
        for i in range(5):
            for j in range(i + 1, 6):
                assert measure_stability_first(chain, params, f, i, j).ok

    def test_constant_order(self, params):
        f = Pole(2.0 + 1.0j)
        chain = dyadic_chain(ROOT, 5, params.alpha0)
        for i in range(5):
            for j in range(i + 1, 6):
                assert measure_constant_order(chain, params, f, i, j).ok

    def test_constant_order_constants(self, params):
        cc = constant_order_constants(params, params.alpha0)
        assert cc.C_ap == params.C_ap == 2 * params.C_in_sf
        assert cc.C_st == pytest.approx(1 + cc.C_ap * params.q1 ** params.alpha0 * params.q2 ** params.alpha0)
        with pytest.raises(HypothesisError):
            constant_order_constants(params, params.alpha0 - 1)


class TestDerivatives:
    def test_polynomial(self, params):
        alpha = params.derivative_alpha0(0.5)
        chain = dyadic_chain(ROOT, 3, alpha)
        res = derivative_error_experiment(chain, params, Monomial(7), 0, 3)
        assert res.measured <= 1e-9

    def test_pole_within_bound(self, params):
        alpha = params.derivative_alpha0(0.5)
        chain = dyadic_chain(ROOT, 4, alpha, "left")
        for i in range(4):
            for j in range(i + 1, 5):
                res = derivative_error_experiment(chain, params, Pole(3.0), i, j)
                assert res.measured <= res.bound

    def test_refuses_low_order(self, params):
        chain = dyadic_chain(ROOT, 4, 8)
        with pytest.raises(HypothesisError):
            derivative_error_experiment(chain, params, Pole(3.0), 0, 4)

    def test_low_order_formula_exploratory(self, params):
        # below the threshold the estimate makes no claim; record how the formula fares anyway
        chain = dyadic_chain(ROOT, 4, 8)
        x = chain.levels[4].grid(1000)
        p = iterated_interpolate(chain, Pole(3.0), 0, 4).derivative()
        measured = float(np.max(np.abs(Pole(3.0).derivative()(x) - p(x))))
        bound = derivative_bound(params, 8, ROOT.length, disc_norm(Pole(3.0), ROOT, 2.0, True))
        assert measured <= bound

    def test_needs_delta1(self, params):
        chain = Chain(dyadic_chain(ROOT, 2, 30).levels, (30, 30), 0.5)
        with pytest.raises(ConfigurationError):
            derivative_error_experiment(chain, params, Pole(3.0), 0, 2)

    def test_bound_scales_with_length(self, params):
        assert derivative_bound(params, 30, 1.0, 1.0) == pytest.approx(2 * derivative_bound(params, 30, 2.0, 1.0))
