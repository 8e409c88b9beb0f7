import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lnterm import (
    NoImpliedVolError,
    arrears_price,
    arrears_reference_lognormal,
    black_implied_vol,
    black_price,
    caplet_price,
    equivalent_lognormal_vol,
    forward_libors,
    libor_mixture,
    lmax,
    norm_cdf,
    smile,
    to_double,
    wide,
    working_bits,
)

from oracles import arrears_terminal_quad, caplet_quad, caplet_terminal_quad


class TestNormCdf:
    def test_reference_values(self):
        assert norm_cdf(0.0) == pytest.approx(0.5, abs=1e-16)
        assert norm_cdf(1.0) == pytest.approx(0.8413447460685429, abs=1e-15)
        assert norm_cdf(-8.0) == pytest.approx(6.22096057427178e-16, rel=1e-12)

    def test_symmetry(self):
        for x in (0.3, 1.7, 5.5):
            assert norm_cdf(x) + norm_cdf(-x) == pytest.approx(1.0, abs=1e-15)


class TestCapletPrice:
    def test_vanishing_strike_recovers_forward_contract(self, curve, solve_cached):
        sol = solve_cached(0.3)
        fwd = forward_libors(curve)[30]
        p31 = to_double(curve.discount_factors[31])
        assert caplet_price(sol, 30, 1e-10) == pytest.approx(p31 * fwd, rel=1e-6)

    def test_huge_strike_kills_price(self, curve, solve_cached):
        sol = solve_cached(0.2)
        assert caplet_price(sol, 30, 100.0 * lmax(curve, 30)) < 1e-10

    def test_matches_density_quadrature_atm(self, solve_cached):
        sol = solve_cached(0.2)
        got = caplet_price(sol, 30, 0.05)
        assert got == pytest.approx(caplet_quad(sol, 30, 0.05), rel=1e-6)

    def test_matches_terminal_measure_quadrature_supercritical(self, solve_cached):
        sol = solve_cached(0.45)
        for k in (0.02, 0.05, 0.10):
            got = caplet_price(sol, 30, k)
            assert got == pytest.approx(caplet_terminal_quad(sol, 30, k), rel=1e-8)

    def test_zero_vol_is_intrinsic(self, curve, solve_cached):
        sol = solve_cached(0.0)
        fwd = forward_libors(curve)[30]
        p31 = to_double(curve.discount_factors[31])
        assert caplet_price(sol, 30, 0.04) == pytest.approx(
            p31 * (fwd - 0.04), rel=1e-12
        )
        assert caplet_price(sol, 30, 0.06) == 0.0

    def test_rejects_bad_strike(self, solve_cached):
        with pytest.raises(ValueError):
            caplet_price(solve_cached(0.2), 30, 0.0)

    def test_no_arbitrage_bounds_and_convexity(self, curve, solve_cached):
        sol = solve_cached(0.3)
        fwd = forward_libors(curve)[30]
        p31 = to_double(curve.discount_factors[31])
        strikes = [0.005 * k for k in range(1, 41)]
        prices = [caplet_price(sol, 30, k) for k in strikes]
        for k, c in zip(strikes, prices):
            assert p31 * max(fwd - k, 0.0) - 1e-12 <= c <= p31 * fwd + 1e-12
        diffs = [b - a for a, b in zip(prices[:-1], prices[1:])]
        assert all(d <= 1e-12 for d in diffs)  # decreasing
        assert all(b >= a - 1e-10 for a, b in zip(diffs[:-1], diffs[1:]))  # convex

    def test_mixing_decomposition(self, curve, solve_cached):
        # price equals the weight-averaged per-component Black price
        sol = solve_cached(0.25)
        i, K = 30, 0.05
        mix = libor_mixture(sol, i)
        p31 = to_double(curve.discount_factors[i + 1])
        t = 7.5
        total = 0.0
        for w, mu in zip(mix.weights_f, mix.log_means_f):
            mean = math.exp(mu + 0.5 * mix.width_f**2)
            total += w * black_price(mean, K, sol.params.psi, t, 1.0)
        assert caplet_price(sol, i, K) == pytest.approx(p31 * total, rel=1e-12)


class TestImpliedVol:
    def test_round_trip(self):
        price = black_price(0.05, 0.06, 0.25, 7.5, 0.7)
        got = black_implied_vol(price, 0.05, 0.06, 7.5, 0.7)
        assert got == pytest.approx(0.25, abs=1e-10)

    def test_intrinsic_price_gives_zero_vol(self):
        price = 0.7 * (0.05 - 0.03)
        assert black_implied_vol(price, 0.05, 0.03, 7.5, 0.7) < 1e-4

    def test_out_of_bounds_rejected(self):
        with pytest.raises(NoImpliedVolError):
            black_implied_vol(0.7 * 0.05 * 1.01, 0.05, 0.03, 7.5, 0.7)
        with pytest.raises(NoImpliedVolError):
            black_implied_vol(0.7 * 0.02 * 0.99, 0.05, 0.03, 7.5, 0.7)

    @given(
        sigma=st.floats(min_value=0.01, max_value=2.0),
        k_over_f=st.floats(min_value=0.3, max_value=3.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, sigma, k_over_f):
        f, t, df = 0.05, 7.5, 0.68
        price = black_price(f, k_over_f * f, sigma, t, df)
        time_value = price - df * max(f - k_over_f * f, 0.0)
        if time_value < 1e-11 * df * f:
            return  # vol not resolvable from the price at double precision
        got = black_implied_vol(price, f, k_over_f * f, t, df)
        assert got == pytest.approx(sigma, abs=1e-8)

    def test_atm_vol_tracks_psi_at_low_vol(self, curve, solve_cached):
        sol = solve_cached(0.1)
        fwd = forward_libors(curve)[30]
        p31 = to_double(curve.discount_factors[31])
        price = caplet_price(sol, 30, fwd)
        got = black_implied_vol(price, fwd, fwd, 7.5, p31)
        assert abs(got - 0.1) / 0.1 < 0.02


class TestSmile:
    STRIKES = [0.02 + 0.01 * k for k in range(9)]

    def test_flat_below_transition(self, solve_cached):
        quotes = smile(solve_cached(0.2), 30, self.STRIKES)
        vols = [q.sigma_bs for q in quotes]
        assert max(vols) / min(vols) < 1.05

    def test_skewed_above_transition(self, solve_cached):
        # the measured non-flatness plateaus near 12% deep in the large-vol
        # phase and peaks (>20%) in the transition band just above psi_cr
        quotes = smile(solve_cached(0.4), 30, self.STRIKES)
        vols = [q.sigma_bs for q in quotes]
        assert max(vols) / min(vols) > 1.10
        quotes = smile(solve_cached(0.335), 30, self.STRIKES)
        vols = [q.sigma_bs for q in quotes]
        assert max(vols) / min(vols) > 1.2

    def test_single_strike_matches_direct_composition(self, curve, solve_cached):
        sol = solve_cached(0.25)
        fwd = forward_libors(curve)[30]
        p31 = to_double(curve.discount_factors[31])
        [quote] = smile(sol, 30, [0.05])
        price = caplet_price(sol, 30, 0.05)
        assert quote.price == price
        assert quote.sigma_bs == black_implied_vol(price, fwd, 0.05, 7.5, p31)

    def test_rejects_unsorted_strikes(self, solve_cached):
        with pytest.raises(ValueError):
            smile(solve_cached(0.2), 30, [0.05, 0.03])
        with pytest.raises(ValueError):
            smile(solve_cached(0.2), 30, [])


class TestArrears:
    def test_zero_vol_closed_form(self, curve, solve_cached):
        quote = arrears_price(solve_cached(0.0), 30)
        fwd = forward_libors(curve)[30]
        p31 = to_double(curve.discount_factors[31])
        expect = p31 * fwd * 0.25 * (1.0 + fwd * 0.25)
        assert quote.price == pytest.approx(expect, rel=1e-12)
        assert quote.convexity_factor == 1.0

    @pytest.mark.parametrize("psi", [0.1, 0.2])
    def test_matches_terminal_measure_quadrature(self, solve_cached, psi):
        sol = solve_cached(psi)
        quote = arrears_price(sol, 30)
        assert quote.price == pytest.approx(arrears_terminal_quad(sol, 30), rel=1e-6)

    def test_moment_form_equals_kernel_form(self, curve, solve_cached):
        # the two-moment form and the generating-function kernel form are the
        # same number up to rounding of the working precision
        sol = solve_cached(0.3)
        i = 30
        with working_bits(256):
            tau = wide(0.25)
            phat31 = sol.curve.rebased[i + 1]
            p31 = sol.curve.discount_factors[i + 1]
            fwd = (sol.curve.rebased[i] / phat31 - 1) / tau
            kernel = wide(arrears_price(sol, i).quadratic_kernel)
            pn = sol.curve.discount_factors[sol.n]
            kernel_form = p31 * fwd * tau + pn * kernel * tau * tau
            moment_form = wide(arrears_price(sol, i).price)
            # kernel recomputed in doubles: compare at double accuracy
            assert abs(to_double((kernel_form - moment_form) / moment_form)) < 1e-12

    def test_quote_bound_and_reference(self, curve, solve_cached):
        fwd = forward_libors(curve)[30]
        p31 = to_double(curve.discount_factors[31])
        floor = p31 * fwd * 0.25 * (1.0 + fwd * 0.25)
        for psi in (0.0, 0.15, 0.35):
            quote = arrears_price(solve_cached(psi), 30)
            assert quote.price >= floor - 1e-15
            assert quote.reference_lognormal == pytest.approx(
                arrears_reference_lognormal(curve, 30, psi), rel=1e-14
            )

    def test_reference_monotone_model_is_not(self, curve, solve_cached):
        psis = [0.30, 0.335, 0.39]
        refs = [arrears_reference_lognormal(curve, 30, p) for p in psis]
        assert refs[0] < refs[1] < refs[2]
        model = [arrears_price(solve_cached(p), 30).price for p in psis]
        assert model[1] > model[0]
        assert model[2] < model[1]  # follows the non-monotonic sigma_LN

    def test_small_vol_agrees_with_reference(self, curve, solve_cached):
        sol = solve_cached(0.05)
        quote = arrears_price(sol, 30)
        rel = abs(quote.price - quote.reference_lognormal) / quote.price
        assert rel < 0.05 * 0.05 * 7.5  # within the O(psi^2 t) correction scale

    def test_undefined_at_last_horizon(self, solve_cached):
        with pytest.raises(IndexError):
            arrears_price(solve_cached(0.2), 39)
        with pytest.raises(IndexError):
            arrears_reference_lognormal(solve_cached(0.2).curve, 39, 0.2)
