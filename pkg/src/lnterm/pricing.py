"""Caplet prices, Black implied volatilities and the Libor-in-arrears adjustment.

A caplet on L_i struck at K pays (L_i - K)+ at t_{i+1}.  Against the
log-normal mixture the price is the weighted sum of per-component Black
prices (a classic mixing solution):

    C_i(K) = P_{0,n} sum_j c_j^{(i)} [ Ltil_i exp(j psi^2 t_i) N(f1_j) - K N(f2_j) ],
    f2_j = (log(Ltil_i / K) + (j - 1/2) psi^2 t_i) / (psi sqrt(t_i)),
    f1_j = f2_j + psi sqrt(t_i).

Quoting these prices back through the standard Black formula gives the
implied smile: flat at level ~psi below the critical volatility, and
strike-dependent above it.

The in-arrears payment (L_i tau_i paid at t_i) prices off the first two
moments only:

    A_i = P_{0,i+1} (L^fwd tau_i) { 1 + L^fwd tau_i exp(sigma_LN^2 t_i) },

to be compared with the same formula under an exactly log-normal caplet
model, where sigma_LN is replaced by psi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath

from .curves import YieldCurve, forward_libors
from .precision import to_double, wide, working_bits
from .solver import ModelSolution, generating_function, gf_eval
from .distribution import equivalent_lognormal_vol

IMPLIED_VOL_BRACKET = (1e-6, 10.0)
IMPLIED_VOL_PRICE_TOL = 1e-12


class NoImpliedVolError(ValueError):
    """The target price is outside the no-arbitrage band of the Black formula."""


def norm_cdf(x: float) -> float:
    """Standard normal CDF via erfc; accurate to ~1e-16 absolute in the tails."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class CapletQuote:
    horizon: int
    strike: float
    price: float
    forward: float
    sigma_bs: float


@dataclass(frozen=True)
class ArrearsQuote:
    horizon: int
    price: float
    convexity_factor: float
    quadratic_kernel: float
    reference_lognormal: float


def caplet_price(sol: ModelSolution, i: int, K: float) -> float:
    """Closed-form caplet price (unit notional, paid at t_{i+1})."""
    if not K > 0.0:
        raise ValueError(f"strike must be positive, got {K}")
    if not 0 <= i <= sol.n - 1:
        raise IndexError(f"horizon must be in [0, {sol.n - 1}], got {i}")
    psi = sol.params.psi
    fwd = forward_libors(sol.curve)[i]
    p_next = to_double(sol.curve.discount_factors[i + 1])
    if psi == 0.0:
        # point-mass law: intrinsic value
        return p_next * max(fwd - K, 0.0)
    t = sol.horizon_time(i)
    st = math.sqrt(t)
    ltil = to_double(sol.adjusted_libors[i])
    x0 = math.log(K / ltil) / psi + 0.5 * psi * t
    p_n = to_double(sol.curve.discount_factors[sol.n])
    total = 0.0
    for j, c in enumerate(sol.coeffs[i]):
        f1 = -(x0 - (j + 1) * psi * t) / st
        f2 = -(x0 - j * psi * t) / st
        mean_j = ltil * math.exp(j * psi * psi * t)
        total += to_double(c) * (mean_j * norm_cdf(f1) - K * norm_cdf(f2))
    return p_n * total


def black_price(
    forward: float, K: float, sigma: float, expiry: float, discount: float
) -> float:
    """Black formula for a call on a log-normal forward."""
    if sigma <= 0.0 or expiry <= 0.0:
        return discount * max(forward - K, 0.0)
    st = sigma * math.sqrt(expiry)
    d1 = (math.log(forward / K) + 0.5 * st * st) / st
    return discount * (forward * norm_cdf(d1) - K * norm_cdf(d1 - st))


def black_vega(
    forward: float, K: float, sigma: float, expiry: float, discount: float
) -> float:
    st = sigma * math.sqrt(expiry)
    d1 = (math.log(forward / K) + 0.5 * st * st) / st
    return (
        discount
        * forward
        * math.sqrt(expiry)
        * math.exp(-0.5 * d1 * d1)
        / math.sqrt(2.0 * math.pi)
    )


def black_implied_vol(
    price: float,
    forward: float,
    K: float,
    expiry: float,
    discount: float,
) -> float:
    """Invert the Black formula: bracketed bisection with Newton refinement.

    Raises `NoImpliedVolError` when the price sits outside the
    [intrinsic, discounted-forward] band.
    """
    intrinsic = discount * max(forward - K, 0.0)
    upper = discount * forward
    tol = IMPLIED_VOL_PRICE_TOL * discount * forward
    if price < intrinsic - tol or price > upper + tol:
        raise NoImpliedVolError(
            f"price {price:.6e} outside no-arbitrage band "
            f"[{intrinsic:.6e}, {upper:.6e}] for F={forward}, K={K}"
        )
    lo, hi = IMPLIED_VOL_BRACKET
    f_lo = black_price(forward, K, lo, expiry, discount) - price
    if f_lo >= 0.0:
        return lo  # at or below the zero-vol price: vanishing volatility
    f_hi = black_price(forward, K, hi, expiry, discount) - price
    if f_hi <= 0.0:
        raise NoImpliedVolError(
            f"price {price:.6e} above the Black price at sigma={hi}; "
            "no volatility in the search bracket reproduces it"
        )
    sigma = 0.5 * (lo + hi)
    for _ in range(200):
        diff = black_price(forward, K, sigma, expiry, discount) - price
        if abs(diff) < tol:
            return sigma
        if diff > 0.0:
            hi = sigma
        else:
            lo = sigma
        vega = black_vega(forward, K, sigma, expiry, discount)
        if vega > 0.0:
            candidate = sigma - diff / vega
            sigma = candidate if lo < candidate < hi else 0.5 * (lo + hi)
        else:
            sigma = 0.5 * (lo + hi)
    return sigma


def smile(
    sol: ModelSolution, i: int, strikes: Sequence[float]
) -> list[CapletQuote]:
    """Caplet quotes with Black implied volatilities for an ascending strike grid."""
    ks = list(strikes)
    if not ks:
        raise ValueError("need at least one strike")
    if any(k <= 0.0 for k in ks) or any(b <= a for a, b in zip(ks[:-1], ks[1:])):
        raise ValueError("strikes must be positive and strictly ascending")
    fwd = forward_libors(sol.curve)[i]
    p_next = to_double(sol.curve.discount_factors[i + 1])
    t = sol.horizon_time(i)
    out = []
    for k in ks:
        price = caplet_price(sol, i, k)
        sigma = black_implied_vol(price, fwd, k, t, p_next)
        out.append(
            CapletQuote(horizon=i, strike=k, price=price, forward=fwd, sigma_bs=sigma)
        )
    return out


def arrears_price(sol: ModelSolution, i: int) -> ArrearsQuote:
    """Libor-in-arrears price and its convexity pieces at horizon i <= n-2."""
    if not 0 <= i <= sol.n - 2:
        raise IndexError(
            f"in-arrears pricing is defined for horizons [0, {sol.n - 2}], got {i}"
        )
    psi = sol.params.psi
    t = sol.horizon_time(i)
    tau = sol.curve.tenor.accruals[i]
    fwd = forward_libors(sol.curve)[i]
    p_next = to_double(sol.curve.discount_factors[i + 1])
    sigma_ln = equivalent_lognormal_vol(sol, i)
    convexity = math.exp(sigma_ln * sigma_ln * t)
    price = p_next * fwd * tau * (1.0 + fwd * tau * convexity)
    # kernel of the quadratic payoff piece: E_n[L_i^2 Phat_{i,i+1}]
    with working_bits(sol.params.precision_bits):
        psi_w, t_w = wide(psi), wide(t)
        gf = generating_function(sol, i)
        kernel = (
            sol.adjusted_libors[i] ** 2
            * mpmath.exp(psi_w * psi_w * t_w)
            * gf_eval(gf, mpmath.exp(2 * psi_w * psi_w * t_w))
        )
    return ArrearsQuote(
        horizon=i,
        price=price,
        convexity_factor=convexity,
        quadratic_kernel=to_double(kernel),
        reference_lognormal=arrears_reference_lognormal(sol.curve, i, psi),
    )


def arrears_reference_lognormal(curve: YieldCurve, i: int, psi: float) -> float:
    """In-arrears price under an exactly log-normal caplet model at volatility psi."""
    if psi < 0.0:
        raise ValueError(f"psi must be >= 0, got {psi}")
    if not 0 <= i <= curve.n - 2:
        raise IndexError(
            f"in-arrears pricing is defined for horizons [0, {curve.n - 2}], got {i}"
        )
    t = curve.tenor.dates[i]
    tau = curve.tenor.accruals[i]
    fwd = forward_libors(curve)[i]
    p_next = to_double(curve.discount_factors[i + 1])
    return p_next * fwd * tau * (1.0 + fwd * tau * math.exp(psi * psi * t))
