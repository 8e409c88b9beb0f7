import json
import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lnterm import (
    PrecisionError,
    build_flat_curve,
    build_tenor,
    convexity_expectation,
    forward_libors,
    frozen_drift_libors,
    generating_function,
    gf_eval,
    limits,
    rebased_bond,
    solution_from_json,
    solution_to_json,
    solve,
    to_double,
    wide,
    working_bits,
)

from oracles import path_integral_solve


def rel_err(a, b):
    with working_bits(320):
        return abs(to_double((a - b) / b))


class TestSolve:
    def test_zero_vol_reproduces_forwards(self, curve, solve_cached):
        sol = solve_cached(0.0)
        fwd = forward_libors(curve)
        for i in range(40):
            assert to_double(sol.adjusted_libors[i]) == pytest.approx(
                fwd[i], rel=1e-12
            )

    def test_last_horizon_initial_condition(self, curve, solve_cached):
        sol = solve_cached(0.2)
        assert sol.coeffs[39] == (wide(1),)
        with working_bits(256):
            expect = (curve.rebased[39] - 1) / wide(0.25)
        assert rel_err(sol.adjusted_libors[39], expect) < 1e-70

    @pytest.mark.parametrize("psi", [0.0, 0.1, 0.3, 0.5, 1.0])
    def test_sum_rule(self, curve, solve_cached, psi):
        sol = solve_cached(psi)
        with working_bits(256):
            for i in range(40):
                total = mpmath.fsum(sol.coeffs[i])
                assert rel_err(total, curve.rebased[i + 1]) < 1e-60

    def test_leading_coefficient_is_one(self, solve_cached):
        for psi in (0.0, 0.25, 0.6):
            sol = solve_cached(psi)
            assert all(row[0] == 1 for row in sol.coeffs)

    def test_all_coefficients_positive(self, solve_cached):
        sol = solve_cached(0.4)
        assert all(c > 0 for row in sol.coeffs for c in row)

    @pytest.mark.parametrize("psi", [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    def test_fra_identity(self, curve, solve_cached, psi):
        # E[L tau Phat] known from the forward rate agreement:
        # Ltil_i tau_i N_i = Phat_{0,i} - Phat_{0,i+1}
        sol = solve_cached(psi)
        with working_bits(256):
            for i in range(40):
                lhs = sol.adjusted_libors[i] * wide(0.25) * sol.normalizations[i]
                rhs = curve.rebased[i] - curve.rebased[i + 1]
                assert rel_err(lhs, rhs) < 1e-60

    def test_normalization_nondecreasing_in_psi(self, solve_cached):
        psis = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
        n30 = [to_double(solve_cached(p).normalizations[30]) for p in psis]
        assert all(b >= a for a, b in zip(n30[:-1], n30[1:]))

    def test_three_step_recursion_by_hand(self):
        # fully unrolled n=3 backward recursion, double precision
        r0, tau, psi = 0.05, 0.25, 0.2
        curve = build_flat_curve(r0, build_tenor(3, tau))
        sol = solve(curve, psi)
        ph = [math.exp(r0 * tau * (3 - i)) for i in range(4)]  # rebased bonds
        t1 = tau
        lt2 = (ph[2] - 1.0) / tau
        c1_0, c1_1 = 1.0, lt2 * tau
        n1 = c1_0 + c1_1 * math.exp(psi * psi * t1)
        lt1 = (ph[1] - ph[2]) / (n1 * tau)
        c0_0 = 1.0
        c0_1 = c1_1 + lt1 * tau * c1_0
        c0_2 = lt1 * tau * c1_1 * math.exp(psi * psi * t1)
        n0 = c0_0 + c0_1 + c0_2  # t_0 = 0
        lt0 = (ph[0] - ph[1]) / (n0 * tau)
        assert to_double(sol.adjusted_libors[2]) == pytest.approx(lt2, rel=1e-12)
        assert to_double(sol.adjusted_libors[1]) == pytest.approx(lt1, rel=1e-12)
        assert to_double(sol.adjusted_libors[0]) == pytest.approx(lt0, rel=1e-12)
        got = [to_double(c) for c in sol.coeffs[0]]
        assert got == pytest.approx([c0_0, c0_1, c0_2], rel=1e-12)

    @pytest.mark.parametrize("n,psi", [(3, 0.2), (4, 0.5), (5, 0.3), (5, 0.0)])
    def test_matches_path_integral_oracle(self, n, psi):
        curve = build_flat_curve(0.05, build_tenor(n, 0.25))
        sol = solve(curve, psi)
        ltil_oracle, norms_oracle = path_integral_solve(0.05, n, 0.25, psi)
        for i in range(n):
            assert to_double(sol.adjusted_libors[i]) == pytest.approx(
                ltil_oracle[i], rel=1e-8
            )
            assert to_double(sol.normalizations[i]) == pytest.approx(
                norms_oracle[i], rel=1e-8
            )

    def test_precision_guard_names_horizon(self, curve):
        with pytest.raises(PrecisionError) as err:
            solve(curve, 100.0)
        assert err.value.horizon is not None
        assert "horizon" in str(err.value)

    def test_negative_psi_rejected(self, curve):
        with pytest.raises(ValueError):
            solve(curve, -0.1)

    @given(
        r0=st.floats(min_value=0.005, max_value=0.12),
        n=st.integers(min_value=2, max_value=10),
        psi=st.floats(min_value=0.0, max_value=0.6),
    )
    @settings(max_examples=20, deadline=None)
    def test_sum_rule_property(self, r0, n, psi):
        curve = build_flat_curve(r0, build_tenor(n, 0.25), precision_bits=192)
        sol = solve(curve, psi, precision_bits=192)
        with working_bits(192):
            for i in range(n):
                total = mpmath.fsum(sol.coeffs[i])
                assert rel_err(total, curve.rebased[i + 1]) < 1e-40


class TestGeneratingFunction:
    def test_last_horizon_is_constant_one(self, solve_cached):
        gf = generating_function(solve_cached(0.3), 39)
        assert gf.degree == 0
        assert gf.coefficients == (wide(1),)

    def test_value_at_zero_and_one(self, curve, solve_cached):
        sol = solve_cached(0.3)
        for i in (0, 15, 30):
            gf = generating_function(sol, i)
            assert gf_eval(gf, 0) == 1
            with working_bits(256):
                at_one = gf_eval(gf, 1)
            assert rel_err(at_one, curve.rebased[i + 1]) < 1e-60

    def test_degree(self, solve_cached):
        assert generating_function(solve_cached(0.2), 30).degree == 9

    def test_eval_at_normalization_point(self, solve_cached):
        sol = solve_cached(0.25)
        for i in (10, 30):
            got = convexity_expectation(sol, i, sol.params.psi)
            assert rel_err(got, sol.normalizations[i]) < 1e-60

    def test_horner_matches_naive_power_sum(self, solve_cached):
        sol = solve_cached(0.3)
        gf = generating_function(sol, 34)  # degree 5
        with working_bits(256):
            for z in (wide("0.7"), wide("1.9"), wide("13.5")):
                naive = mpmath.fsum(
                    c * z**j for j, c in enumerate(gf.coefficients)
                )
                assert rel_err(gf_eval(gf, z), naive) < 1e-30

    def test_complex_evaluation_conjugates(self, solve_cached):
        gf = generating_function(solve_cached(0.3), 30)
        with working_bits(256):
            z = mpmath.mpc("1.2", "0.7")
            a = gf_eval(gf, z)
            b = gf_eval(gf, mpmath.conj(z))
            assert abs(a - mpmath.conj(b)) < 1e-40

    def test_index_out_of_range(self, solve_cached):
        sol = solve_cached(0.2)
        with pytest.raises(IndexError):
            generating_function(sol, 40)
        with pytest.raises(IndexError):
            generating_function(sol, -1)


class TestRebasedBond:
    def test_zero_vol_is_state_independent(self, curve, solve_cached):
        sol = solve_cached(0.0)
        for x in (-3.0, 0.0, 5.0):
            assert rel_err(rebased_bond(sol, 12, x), curve.rebased[13]) < 1e-60

    def test_last_horizon_is_one(self, solve_cached):
        sol = solve_cached(0.35)
        for x in (-2.0, 1.0):
            assert rebased_bond(sol, 39, x) == 1

    def test_matches_term_by_term_sum(self, solve_cached):
        sol = solve_cached(0.2)
        i, x, t = 30, 0.0, 7.5
        expect = sum(
            to_double(c) * math.exp(j * 0.2 * x - 0.5 * (j * 0.2) ** 2 * t)
            for j, c in enumerate(sol.coeffs[i])
        )
        assert to_double(rebased_bond(sol, i, x)) == pytest.approx(expect, rel=1e-13)


class TestConvexityExpectation:
    def test_phi_zero_gives_rebased_bond(self, curve, solve_cached):
        sol = solve_cached(0.3)
        assert rel_err(convexity_expectation(sol, 30, 0.0), curve.rebased[31]) < 1e-60

    def test_phi_double_psi_is_second_moment_kernel(self, solve_cached):
        sol = solve_cached(0.3)
        gf = generating_function(sol, 30)
        with working_bits(256):
            z = mpmath.exp(wide(2) * wide(0.3) ** 2 * wide(7.5))
            assert rel_err(convexity_expectation(sol, 30, 0.6), gf_eval(gf, z)) < 1e-50


class TestLimits:
    def test_zero_vol_gf_telescopes(self, curve):
        lim = limits(curve, 30)
        with working_bits(256):
            at_one = lim.zero_vol_gf(1)
        assert rel_err(at_one, curve.rebased[31]) < 1e-60

    def test_zero_vol_gf_matches_solution_at_zero_psi(self, curve, solve_cached):
        sol = solve_cached(0.0)
        lim = limits(curve, 25)
        for a, b in zip(lim.zero_vol_gf.coefficients, sol.coeffs[25]):
            assert rel_err(a, b) < 1e-60

    def test_infinite_vol_leading_coefficient(self, curve):
        lim = limits(curve, 30)
        coeffs = lim.infinite_vol_gf.coefficients
        with working_bits(256):
            top = curve.rebased[31] - curve.rebased[32]
            first = curve.rebased[39] - 1
        assert rel_err(coeffs[-1], top) < 1e-70
        assert coeffs[0] == 1
        assert rel_err(coeffs[1], first) < 1e-70

    def test_asymptotic_adjusted_libor_large_psi(self, curve, solve_cached):
        # exact over asymptotic tends to 1 with corrections exp(-psi^2 t_i)
        sol = solve_cached(1.0)
        lim = limits(curve, 30)
        ratio = to_double(sol.adjusted_libors[30] / lim.asymptotic_adjusted_libor(1.0))
        assert abs(ratio - 1.0) < 0.2
        assert abs(ratio - 1.0) == pytest.approx(0.0, abs=50 * math.exp(-7.5))


class TestFrozenDrift:
    def test_last_horizon_equals_forward(self, curve):
        fd = frozen_drift_libors(curve, 0.3)
        assert fd[39] == pytest.approx(forward_libors(curve)[39], rel=1e-14)

    def test_zero_vol_equals_forwards(self, curve):
        fd = frozen_drift_libors(curve, 0.0)
        fwd = forward_libors(curve)
        assert fd == pytest.approx(fwd, rel=1e-14)

    def test_small_vol_gap_scales_as_psi_fourth(self, curve, solve_cached):
        gaps = {}
        for psi in (0.05, 0.1):
            sol = solve_cached(psi)
            fd = frozen_drift_libors(curve, psi)[30]
            exact = to_double(sol.adjusted_libors[30])
            gaps[psi] = abs(exact - fd) / exact
        assert gaps[0.05] < 5e-5
        # quartic scaling: doubling psi multiplies the gap by ~16
        assert gaps[0.1] / gaps[0.05] == pytest.approx(16.0, rel=0.25)


class TestSerialization:
    def test_json_round_trip_exact(self, solve_cached):
        sol = solve_cached(0.3)
        text = solution_to_json(sol)
        back = solution_from_json(text)
        assert back.params == sol.params
        assert back.coeffs == sol.coeffs
        assert back.adjusted_libors == sol.adjusted_libors
        assert back.normalizations == sol.normalizations
        assert back.curve.discount_factors == sol.curve.discount_factors

    def test_json_schema_fields(self, solve_cached):
        doc = json.loads(solution_to_json(solve_cached(0.1)))
        assert doc["schema"] == "lnterm-solution/1"
        assert doc["n"] == 40
        assert len(doc["coeffs"]) == 40
        assert len(doc["coeffs"][0]) == 40
        assert len(doc["adjusted_libors"]) == 40

    def test_rejects_unknown_schema(self):
        with pytest.raises(ValueError):
            solution_from_json('{"schema": "something-else/9"}')
