"""Exact calculus tests, frozen against the independent oracle module."""

import math
from fractions import Fraction

import mpmath
import pytest

from retroalign.params import (
    SecrecyModel, admissible_rounds, asymptotic_per_user_dof,
    baseline_dof_no_secrecy, derive_params, min_feasible_n, optimal_rounds,
    profile_increasing_at, sdof_formula, sdof_lower_bound, sdof_value,
)

import oracles

CM = SecrecyModel.IC_CM
EE = SecrecyModel.IC_EE
CMEE = SecrecyModel.IC_CM_EE


class TestDeriveParams:
    def test_smallest_eavesdropper_point(self):
        p = derive_params(3, 1, 1, EE)
        assert (p.N, p.T, p.T2, p.T1) == (6, 65, 86, -21)
        assert p.block_length == 257
        assert not p.feasible

    def test_first_feasible_eavesdropper_point(self):
        p = derive_params(3, 1, 9, EE)
        assert p.T == 1_531_441
        assert p.T2 == 1_510_481
        assert p.T1 == 20_960

    def test_two_users_never_feasible(self):
        p = derive_params(2, 1, 1, CM)
        assert p.T2 >= p.T and p.T1 <= 0

    @pytest.mark.parametrize("K,R,n", [(3, 1, 1), (3, 1, 2), (3, 2, 1),
                                       (4, 1, 1), (5, 2, 2), (2, 1, 3)])
    @pytest.mark.parametrize("model", [CM, EE, CMEE])
    def test_matches_oracle(self, K, R, n, model):
        p = derive_params(K, R, n, model)
        N, T, T1, T2, block = oracles.scheme_numbers(K, R, n, model.value)
        assert (p.N, p.T, p.T1, p.T2, p.block_length) == (N, T, T1, T2, block)
        assert p.T == p.T1 + p.T2

    def test_cm_and_joint_model_dimensions_identical(self):
        for K in range(2, 8):
            for R in range(1, 4):
                for n in (1, 2):
                    a = derive_params(K, R, n, CM)
                    b = derive_params(K, R, n, CMEE)
                    assert (a.T, a.T1, a.T2, a.block_length) == \
                        (b.T, b.T1, b.T2, b.block_length)

    def test_joint_model_covers_eavesdropper_budget(self):
        # R*T + K*(n+1)^N <= K*T2 for the joint model's (ceiling) T2
        for K in range(2, 9):
            for R in range(1, 4):
                for n in (1, 2, 3):
                    p = derive_params(K, R, n, CMEE)
                    ext = p.phase2_extension
                    assert R * p.T + K * ext <= K * p.T2
                    assert p.T2 >= ext + 1

    def test_validation(self):
        with pytest.raises(ValueError):
            derive_params(1, 1, 1, CM)
        with pytest.raises(ValueError):
            derive_params(3, 0, 1, CM)
        with pytest.raises(ValueError):
            derive_params(3, 1, 0, CM)


class TestSdofFormula:
    def test_frozen_values(self):
        assert sdof_formula(9, 1, CM) == Fraction(27, 44)
        assert sdof_formula(3, 1, CM) == 0
        assert sdof_formula(9, 2, EE) == Fraction(4, 5)
        assert sdof_formula(16, 3, EE) == Fraction(9, 7)
        assert sdof_formula(64, 6, CM) == Fraction(21504, 6678)

    def test_cm_equals_joint(self):
        for K in range(2, 40):
            for R in admissible_rounds(K, CM):
                assert sdof_formula(K, R, CM) == sdof_formula(K, R, CMEE)

    @pytest.mark.parametrize("model", ["ic-cm", "ic-ee"])
    def test_against_oracle_grid(self, model):
        m = SecrecyModel(model)
        for K in range(2, 80):
            for R in admissible_rounds(K, m):
                assert sdof_formula(K, R, m) == \
                    oracles.sdof_rational(K, R, model)

    def test_negative_values_not_clamped(self):
        assert sdof_formula(5, 4, CM) < 0

    def test_per_user_identity(self):
        assert asymptotic_per_user_dof(9, 1, CM) == Fraction(3, 44)
        assert asymptotic_per_user_dof(3, 1, CM) == 0
        assert asymptotic_per_user_dof(9, 2, EE) == Fraction(4, 45)
        for K in (4, 9, 25, 100):
            for R in admissible_rounds(K, CM):
                assert K * asymptotic_per_user_dof(K, R, CM) == \
                    sdof_formula(K, R, CM)


class TestOptimalRounds:
    def test_eavesdropper_floor(self):
        assert optimal_rounds(16, EE).paper == 3

    def test_nine_users_gap_between_floor_and_argmax(self):
        opt = optimal_rounds(9, CM)
        assert abs(float(opt.continuous) - 1.898) < 1e-3
        assert opt.paper == 1
        assert opt.discrete == 2
        assert sdof_formula(9, 2, CM) == Fraction(3, 4) > Fraction(27, 44)

    def test_four_users_clamped(self):
        opt = optimal_rounds(4, CM)
        assert abs(float(opt.continuous) - 0.7749) < 1e-3
        assert opt.paper == 1 and opt.clamped

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            optimal_rounds(3, CM)
        with pytest.raises(ValueError):
            optimal_rounds(1, EE)

    def test_continuous_root_precision(self):
        opt = optimal_rounds(9, CM)
        with mpmath.workdps(100):
            ref = oracles.continuous_root(9, "ic-cm", dps=100)
            assert abs(mpmath.mpf(opt.continuous) - ref) < mpmath.mpf(10) ** -55

    def test_discrete_matches_brute_force(self):
        for model in (CM, EE):
            lo = 4 if model is CM else 2
            for K in range(lo, 120):
                best_r, _ = oracles.brute_force_best_rounds(K, model.value)
                assert optimal_rounds(K, model).discrete == best_r

    def test_paper_floor_matches_high_precision_root(self):
        with mpmath.workdps(80):
            for K in list(range(4, 300)) + [999, 5000]:
                root = oracles.continuous_root(K, "ic-cm", dps=80)
                assert optimal_rounds(K, CM).paper == max(int(mpmath.floor(root)), 1)


class TestLowerBound:
    def test_exact_perfect_squares(self):
        assert sdof_lower_bound(64, CM).exact_value() == 1
        assert sdof_lower_bound(9, CM).exact_value() == 0
        assert sdof_lower_bound(16, EE).exact_value() == Fraction(1, 2)

    def test_comparison_by_squaring(self):
        bound = sdof_lower_bound(64, CM)  # exactly 1
        assert bound.less_than(Fraction(101, 100))
        assert not bound.less_than(Fraction(1, 1))
        assert not bound.less_than(Fraction(99, 100))

    def test_comparison_against_high_precision(self):
        from random import Random

        rnd = Random(7)
        for _ in range(200):
            K = rnd.randint(1, 4000)
            c = rnd.choice([3, 6])
            q = Fraction(rnd.randint(-50, 400), rnd.randint(1, 97))
            ref = oracles.bound_half_sqrt_minus(K, c)
            expected = mpmath.mpf(q.numerator) / q.denominator > ref
            assert sdof_lower_bound(
                K, CM if c == 6 else EE).less_than(q) == expected

    def test_float_clamps(self):
        assert float(sdof_lower_bound(4, CM)) == 0.0


class TestBaseline:
    def test_frozen_values(self):
        assert baseline_dof_no_secrecy(16) == Fraction(16, 7)
        assert baseline_dof_no_secrecy(4) == Fraction(4, 3)
        assert baseline_dof_no_secrecy(9) == Fraction(9, 5)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            baseline_dof_no_secrecy(3)

    def test_oracle_grid(self):
        for K in range(4, 200):
            assert baseline_dof_no_secrecy(K) == oracles.baseline_dof(K)


class TestFeasibility:
    def test_first_feasible_order(self):
        assert min_feasible_n(3, 1, EE, 20) == 9

    def test_infeasible_cases(self):
        assert min_feasible_n(2, 1, CM, 100) is None
        assert min_feasible_n(3, 2, EE, 3) is None

    def test_feasibility_is_monotone_once_reached(self):
        first = min_feasible_n(3, 1, EE, 12)
        for n in range(first, 13):
            assert derive_params(3, 1, n, EE).feasible

    def test_sdof_value_carries_feasibility(self):
        v = sdof_value(3, 1, EE, n=1)
        assert v.feasible is False and v.value == Fraction(1, 5)
        assert sdof_value(3, 1, EE).feasible is None


class TestProfileShape:
    def test_unimodal_and_argmax_brackets_root(self):
        for model in (CM, EE):
            lo = 4 if model is CM else 2
            for K in range(lo, 120):
                rounds = list(admissible_rounds(K, model))
                vals = [sdof_formula(K, R, model) for R in rounds]
                increases = [vals[i + 1] > vals[i]
                             for i in range(len(vals) - 1)]
                # strictly up then strictly down, no second rise
                if False in increases:
                    first_down = increases.index(False)
                    assert all(not inc for inc in increases[first_down:])
                best = rounds[vals.index(max(vals))]
                opt = optimal_rounds(K, model)
                floor_ceil = {math.floor(float(opt.continuous)),
                              math.ceil(float(opt.continuous))}
                assert best in floor_ceil or (opt.clamped and best == 1)

    def test_exact_side_of_root_predicate(self):
        for K in (9, 25, 100):
            opt = optimal_rounds(K, CM)
            for R in admissible_rounds(K, CM):
                assert profile_increasing_at(K, R, CM) == \
                    (R < float(opt.continuous))

    def test_continuous_root_exceeds_sqrt_k_minus_5(self):
        # exact integer form: 64 K^3 - 416 K^2 + 900 K - 625 > 0 encodes
        # (sqrt(K) - 5) below the stationary point for every K >= 4
        for K in range(4, 10_001):
            assert 64 * K**3 - 416 * K**2 + 900 * K - 625 > 0
        for K in (4, 7, 16, 100, 4096):
            assert float(optimal_rounds(K, CM).continuous) > \
                math.sqrt(K) - 5
