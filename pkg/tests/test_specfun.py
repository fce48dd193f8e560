import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from landau_tails.specfun import (
    LogValue,
    binomial_power_deviation,
    fit_binomial_constant,
    laguerre,
    laguerre_reduced,
    log_binomial,
    log_factorial,
    log_lower_gamma_integral,
    log_reg_lower_gamma,
    log_sum,
    reg_lower_gamma,
)


class TestLogValue:
    def test_multiplication_adds_logs_and_multiplies_signs(self):
        p = LogValue(2.0, -1) * LogValue(3.0, -1)
        assert p.log_abs == 5.0 and p.sign == 1

    def test_zero_absorbs(self):
        assert (LogValue.zero() * LogValue(10.0, 1)).sign == 0

    def test_from_float_roundtrip(self):
        for x in (-3.5, 0.0, 1e-300, 7.25):
            assert float(LogValue.from_float(x)) == pytest.approx(x, rel=1e-15)

    def test_rejects_bad_sign(self):
        with pytest.raises(ValueError):
            LogValue(0.0, 2)

    def test_log_sum_cancellation(self):
        total, ratio = log_sum([LogValue.from_float(1.0), LogValue.from_float(-1.0 + 1e-6)])
        assert float(total) == pytest.approx(1e-6, rel=1e-9)
        assert ratio == pytest.approx(2e6, rel=1e-5)

    def test_log_sum_survives_underflow(self):
        total, _ = log_sum([LogValue(-2000.0, 1), LogValue(-2000.0, 1)])
        assert total.log_abs == pytest.approx(-2000.0 + math.log(2))


class TestFactorialBinomial:
    def test_small(self):
        assert log_factorial(0) == 0.0
        assert log_factorial(1) == 0.0
        assert log_factorial(20) == pytest.approx(math.log(2432902008176640000), rel=1e-13)
        assert log_factorial(20) == pytest.approx(42.335616, abs=1e-6)

    @pytest.mark.parametrize("n", [21, 100, 1000, 10**5, 10**7])
    def test_against_mpmath(self, n):
        assert log_factorial(n) == pytest.approx(float(mpmath.loggamma(n + 1)), rel=1e-13)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            log_factorial(-1)

    def test_binomial(self):
        assert log_binomial(5, 0) == 0.0
        assert log_binomial(5, 5) == 0.0
        assert log_binomial(52, 5) == pytest.approx(math.log(2598960), rel=1e-13)
        assert log_binomial(3, 4) == -math.inf

    @given(st.integers(0, 300), st.integers(0, 300))
    def test_binomial_matches_math_comb(self, k, j):
        if j > k:
            assert log_binomial(k, j) == -math.inf
        else:
            assert log_binomial(k, j) == pytest.approx(math.log(math.comb(k, j)), rel=1e-12, abs=1e-12)


def _laguerre_exact(q, alpha, xi):
    xi = Fraction(xi)
    return sum(Fraction(math.comb(q + alpha, q - l)) * (-xi) ** l / math.factorial(l) for l in range(max(0, -alpha), q + 1))


class TestLaguerre:
    def test_examples(self):
        assert laguerre(0, 5, 3.7) == 1.0
        assert laguerre(2, 1, 0.0) == 3.0
        assert laguerre(1, 3, 1.5) == pytest.approx(2.5)

    def test_rejects_alpha_below_minus_q(self):
        with pytest.raises(ValueError):
            laguerre(2, -3, 1.0)

    @pytest.mark.parametrize("q,alpha,xi", [(3, 2, 0.7), (5, 0, 4.2), (8, 3, 12.5), (12, 7, 30.0), (4, -2, 2.5)])
    def test_against_exact_fractions(self, q, alpha, xi):
        assert laguerre(q, alpha, xi) == pytest.approx(float(_laguerre_exact(q, alpha, xi)), rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize("q,alpha", [(3, 2), (7, 0), (10, 5)])
    def test_against_scipy(self, q, alpha):
        for xi in (0.0, 0.3, 5.0, 17.0):
            assert laguerre(q, alpha, xi) == pytest.approx(special.eval_genlaguerre(q, alpha, xi), rel=1e-9, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 29), st.integers(0, 20), st.floats(0.0, 50.0))
    def test_three_term_recurrence(self, q, alpha, xi):
        lhs = (q + 1) * laguerre(q + 1, alpha, xi)
        rhs = (2 * q + 1 + alpha - xi) * laguerre(q, alpha, xi) - (q + alpha) * laguerre(q - 1, alpha, xi)
        scale = max(abs(lhs), abs((2 * q + 1 + alpha - xi) * laguerre(q, alpha, xi)), abs((q + alpha) * laguerre(q - 1, alpha, xi)), 1e-300)
        assert abs(lhs - rhs) <= 1e-9 * scale

    def test_reduced_factors_out_power(self):
        # L_q^{(k-q)}(xi) = (-xi)^{q-k} (k!/q!) ... check against direct evaluation away from 0
        for q, k in [(2, 0), (3, 1), (4, 2)]:
            xi = np.array([0.5, 1.7, 6.0])
            direct = np.array([laguerre(q, k - q, x) for x in xi])
            assert np.allclose(laguerre_reduced(q, k, xi) * xi ** (q - k), direct, rtol=1e-12)


class TestIncompleteGamma:
    def test_examples(self):
        assert reg_lower_gamma(1, 1) == pytest.approx(1 - math.exp(-1), abs=1e-12)
        assert reg_lower_gamma(3.3, 0.0) == 0.0
        oracle = integrate.quad(lambda t: t * t * math.exp(-t), 0, 2, epsabs=1e-14, epsrel=1e-13)[0] / 2
        assert reg_lower_gamma(3, 2) == pytest.approx(oracle, abs=1e-12)

    @pytest.mark.parametrize("a", [0.5, 1.0, 7.5, 40.0, 1000.0])
    @pytest.mark.parametrize("factor", [0.01, 0.5, 0.99, 1.0, 1.5, 4.0])
    def test_against_scipy(self, a, factor):
        x = a * factor
        assert reg_lower_gamma(a, x) == pytest.approx(special.gammainc(a, x), abs=1e-12)

    def test_log_domain_far_tail(self):
        # P underflows in double precision, its log does not
        a, x = 2001.0, 100.0
        expected = float(mpmath.log(mpmath.gammainc(a, 0, x, regularized=True)))
        assert log_reg_lower_gamma(a, x) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("a", [2.0, 9.0, 100.0, 2500.0])
    def test_limit_at_a_plus_20_sqrt_a(self, a):
        assert reg_lower_gamma(a, a + 20 * math.sqrt(a)) == pytest.approx(1.0, abs=1e-10)

    def test_a_equal_one_is_short_of_one(self):
        # 1 - P(1, 21) = e^-21 ~ 7.6e-10: the 1e-10 limit check starts at a = 2
        assert 1 - reg_lower_gamma(1.0, 21.0) == pytest.approx(math.exp(-21), rel=1e-6)

    @given(st.floats(0.1, 200.0), st.floats(0.0, 300.0), st.floats(0.0, 50.0))
    def test_monotone_in_x(self, a, x, dx):
        assert reg_lower_gamma(a, x) <= reg_lower_gamma(a, x + dx) + 1e-15

    def test_lower_integral(self):
        # ln int_0^x t^s e^-t dt for s = 4, x = 3
        expected = float(mpmath.log(mpmath.gammainc(5, 0, 3)))
        assert log_lower_gamma_integral(4, 3.0) == pytest.approx(expected, rel=1e-13)


class TestBinomialDeviation:
    def test_q0_and_q1_trivial(self):
        assert binomial_power_deviation(0, 500) == 0.0
        assert binomial_power_deviation(1, 500) == 0.0

    @pytest.mark.parametrize("q", [2, 3, 4, 5])
    def test_bounded_by_fitted_constant(self, q):
        cq = fit_binomial_constant(q)
        for k in (100, 1000, 10**4, 10**5):
            assert binomial_power_deviation(q, k) <= cq / k * (1 + 1e-12)

    def test_constants_monotone_in_q(self):
        cs = [fit_binomial_constant(q) for q in range(6)]
        assert all(a <= b for a, b in zip(cs, cs[1:]))
