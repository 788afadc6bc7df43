import math
from fractions import Fraction

import numpy as np
import pytest

from ncbm.errors import DomainError
from ncbm.model import Configuration, FiniteNModel, MultitimeRequest


class TestValidation:
    def test_odd_or_small_N_rejected(self):
        with pytest.raises(DomainError):
            FiniteNModel(3, 1.0, (0.5, 1.0))
        with pytest.raises(DomainError):
            FiniteNModel(0, 1.0, (1.0,))

    def test_times_must_increase_and_end_at_T(self):
        with pytest.raises(DomainError):
            FiniteNModel(2, 1.0, (0.7, 0.4, 1.0))
        with pytest.raises(DomainError):
            FiniteNModel(2, 1.0, (0.4, 0.9))
        with pytest.raises(DomainError):
            FiniteNModel(2, 1.0, (-0.1, 1.0))

    def test_tau_monotone_and_zero_at_horizon(self, model3):
        assert np.all(np.diff(model3.tau) > 0)
        assert model3.tau[-1] == 0.0
        assert np.all(model3.tau[:-1] < 0)

    def test_constants(self, model3):
        t, T = 0.4, 1.0
        assert model3.c[0] == pytest.approx(math.sqrt(t * (2 * T - t) / T))
        assert model3.z[0] == pytest.approx(math.sqrt((2 * T - t) / t))
        assert model3.gamma[0] == pytest.approx(-(T - t) / T)


class TestTables:
    def test_r_against_gamma_formula(self, model3):
        t1, T = 0.4, 1.0
        for j in range(6):
            want = (math.gamma(j + 0.5) * math.gamma(j + 1.0) / math.pi
                    * (t1 * t1 / T) ** (2 * j + 0.5))
            assert model3.r(j) == pytest.approx(want, rel=1e-12)

    def test_rstar_relation_to_r(self, model3):
        # r_k = r*_k (t1/(2T-t1))^{2k+1/2} / (2 pi T)
        t1, T = 0.4, 1.0
        for k in range(6):
            want = model3.rstar(k) * (t1 / (2 * T - t1)) ** (2 * k + 0.5) / (2 * math.pi * T)
            assert model3.r(k) == pytest.approx(want, rel=1e-12)

    def test_beta_alpha_inverse_exact_rational(self):
        # the c1 powers cancel term by term, so the sum is exact in Q
        def alpha_rat(k, j):
            if j == k:
                return Fraction(1, 2 ** k)
            if k % 2 == 1 and j == k - 2:
                return Fraction(-2 * (k - 1), 2 ** k)
            return Fraction(0)

        def beta_rat(k, j):
            if k % 2 == 0:
                return Fraction(2 ** k) if j == k else Fraction(0)
            if j % 2 == 1 and k >= j:
                return Fraction(2 ** k * math.factorial((k - 1) // 2),
                                math.factorial((j - 1) // 2))
            return Fraction(0)

        for k in range(12):
            for s in range(k + 1):
                tot = sum(beta_rat(k, j) * alpha_rat(j, s) for j in range(s, k + 1))
                assert tot == (1 if s == k else 0)

    def test_beta_alpha_inverse_float(self, model3):
        for k in range(10):
            for s in range(k + 1):
                tot = sum(model3.beta(k, j) * model3.alpha(j, s)
                          for j in range(s, k + 1))
                assert abs(tot - (1.0 if s == k else 0.0)) < 1e-10

    def test_det_L_equals_inverse_normalization(self):
        for N in (2, 4, 8):
            m = FiniteNModel(N, 1.0, (0.5, 1.0))
            assert abs(float(np.sum(m.log_r[:N // 2])) + m.log_C) < 1e-10

    def test_gram_star_is_antisymmetric_even_odd(self, model3):
        g = model3.gram_star(8)
        assert np.max(np.abs(g + g.T)) < 1e-12
        for k in range(0, 9, 2):
            for l in range(0, 9, 2):
                assert g[k, l] == 0.0
        for k in range(1, 9, 2):
            for l in range(1, 9, 2):
                assert g[k, l] == 0.0

    def test_log_b_horizon_is_constant(self, model3):
        for x in (-3.0, 0.0, 5.0):
            assert model3.log_b(model3.M, x) == pytest.approx(0.5 * math.log(1.0))


class TestConfigurations:
    def test_sorting_canonicalization(self):
        c = Configuration.from_unsorted((2.0, -1.0, 0.5), 0)
        assert c.positions == (-1.0, 0.5, 2.0)

    def test_decreasing_rejected(self):
        with pytest.raises(DomainError):
            Configuration((1.0, 0.0), 0)

    def test_request_shape_checks(self, model3):
        with pytest.raises(DomainError):
            MultitimeRequest.from_points(model3, [(0.0,)])  # wrong number of times
        with pytest.raises(DomainError):
            MultitimeRequest.from_points(model3, [(0.0,) * 5, (), ()])  # > N
        with pytest.raises(DomainError):
            MultitimeRequest.from_points(model3, [(), (), ()])  # all empty

    def test_counts(self, model3):
        req = MultitimeRequest.from_points(model3, [(0.0,), (), (1.0, 2.0)])
        assert req.counts == (1, 0, 2)
