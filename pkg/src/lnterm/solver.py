"""Exact solution of the log-normal terminal-measure model.

The model lives on a tenor grid 0 = t_0 < ... < t_n with the bond P(t, t_n)
as numeraire.  Each Libor L_i, observed at its setting time t_i, is
log-normal in the terminal measure:

    L_i = Ltil_i * exp(psi * x_i - psi^2 t_i / 2),

where x(t) is a Brownian motion and the adjusted forwards Ltil_i are fixed
by repricing the initial curve.  The numeraire-rebased one-step bond is an
exponential polynomial in the Markov state,

    Phat_{i,i+1}(x) = sum_j c_j^{(i)} exp(j psi x - (j psi)^2 t_i / 2),

and the coefficient vectors c^{(i)} obey a backward recursion that is
triangular together with the Ltil_i:

    c_j^{(i)} = c_j^{(i+1)} + Ltil_{i+1} tau_{i+1} c_{j-1}^{(i+1)}
                * exp((j-1) psi^2 t_{i+1}),
    Ltil_i   = (Phat_{0,i} - Phat_{0,i+1}) / (N_i tau_i),
    N_i      = sum_j c_j^{(i)} exp(j psi^2 t_i),

starting from c^{(n-1)} = (1).  All quantities are positive, so the
recursion is evaluated without cancellation in extended precision; the sum
rule sum_j c_j^{(i)} = Phat_{0,i+1} holds to working accuracy and is the
canonical self-check.

The generating function f_i(z) = sum_j c_j^{(i)} z^j packages the
coefficients: f_i(0) = 1, f_i(1) = Phat_{0,i+1}, N_i = f_i(exp(psi^2 t_i)).
Its complex zeros drive the critical-volatility analysis (see
`lnterm.criticality`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import mpmath
from mpmath import mpc, mpf

from .curves import ModelParams, TenorStructure, YieldCurve, wide_forward_libors
from .precision import (
    WideReal,
    decimal_digits,
    default_bits,
    wide,
    wide_str,
    working_bits,
)

# Largest exponent argument the solver accepts before failing loudly.  The
# arbitrary-precision backend would happily represent exp(1e6), but values in
# that range signal a run far outside any regime where the outputs mean
# anything, and silent magnitudes corrupt the criticality sweeps.
EXP_ARG_LIMIT = 20_000.0


class PrecisionError(RuntimeError):
    """Raised when a requested computation exceeds the exponent budget."""

    def __init__(self, message: str, horizon: int | None = None):
        super().__init__(message)
        self.horizon = horizon


@dataclass(frozen=True)
class GeneratingFunction:
    """Polynomial f_i(z) = sum_j c_j^{(i)} z^j with positive coefficients."""

    horizon: int
    coefficients: tuple[WideReal, ...]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, z):
        return gf_eval(self, z)


@dataclass(frozen=True)
class ModelSolution:
    """Coefficient table, adjusted Libors and normalizations of a solved model.

    ``coeffs[i]`` holds (c_0^{(i)}, ..., c_{n-i-1}^{(i)}); ``adjusted_libors``
    and ``normalizations`` hold Ltil_i and N_i.  All entries are WideReal at
    ``params.precision_bits``.
    """

    params: ModelParams
    curve: YieldCurve
    coeffs: tuple[tuple[WideReal, ...], ...]
    adjusted_libors: tuple[WideReal, ...]
    normalizations: tuple[WideReal, ...]

    @property
    def n(self) -> int:
        return self.params.n

    def horizon_time(self, i: int) -> float:
        return self.curve.tenor.dates[i]


def _check_exponent_budget(psi: float, tenor: TenorStructure) -> None:
    n = tenor.n
    for i in range(n):
        arg = (n - i - 1) * psi * psi * tenor.dates[i]
        if arg > EXP_ARG_LIMIT:
            raise PrecisionError(
                f"horizon {i}: exponents reach exp({arg:.3g}), beyond the "
                f"supported range (limit exp({EXP_ARG_LIMIT:.3g})); reduce psi "
                "or the grid size",
                horizon=i,
            )


def solve(
    curve: YieldCurve, psi: float, precision_bits: int | None = None
) -> ModelSolution:
    """Solve the model exactly on the given curve.

    Runs the joint backward recursion for the coefficient vectors c^{(i)},
    the normalizations N_i and the adjusted Libors Ltil_i.  The system is
    triangular (horizon i only needs quantities from horizon i+1), so no
    iteration is involved.

    Parameters
    ----------
    curve : YieldCurve
    psi : float
        Uniform log-normal volatility, >= 0, in 1/sqrt(year) units.
    precision_bits : int, optional
        Mantissa width for the recursion (default: `default_bits()`).

    Raises
    ------
    PrecisionError
        If the exponentials exp(j psi^2 t_i) exceed the supported range; the
        error names the offending horizon.
    """
    if psi < 0.0:
        raise ValueError(f"psi must be >= 0, got {psi}")
    bits = precision_bits if precision_bits is not None else default_bits()
    params = ModelParams(psi=psi, n=curve.n, precision_bits=bits)
    _check_exponent_budget(psi, curve.tenor)
    n = curve.n
    with working_bits(bits):
        psi_w = wide(psi)
        taus = [wide(t) for t in curve.tenor.accruals]
        dates = [wide(t) for t in curve.tenor.dates]
        phat = curve.rebased

        coeffs: list[list[WideReal]] = [None] * n  # type: ignore[list-item]
        ltil: list[WideReal] = [None] * n  # type: ignore[list-item]
        norms: list[WideReal] = [None] * n  # type: ignore[list-item]

        coeffs[n - 1] = [mpf(1)]
        norms[n - 1] = mpf(1)
        ltil[n - 1] = (phat[n - 1] - 1) / taus[n - 1]

        for i in range(n - 2, -1, -1):
            prev = coeffs[i + 1]
            m = len(prev)
            # exp(j psi^2 t_{i+1}) via running powers of one exponential
            base_next = mpmath.exp(psi_w * psi_w * dates[i + 1])
            a = ltil[i + 1] * taus[i + 1]
            cur: list[WideReal] = []
            power = mpf(1)
            for j in range(m + 1):
                v = prev[j] if j < m else mpf(0)
                if j >= 1:
                    v = v + a * prev[j - 1] * power
                    power = power * base_next
                cur.append(v)
            coeffs[i] = cur

            base_here = mpmath.exp(psi_w * psi_w * dates[i])
            acc = mpf(0)
            power = mpf(1)
            for c in cur:
                acc += c * power
                power = power * base_here
            norms[i] = acc
            ltil[i] = (phat[i] - phat[i + 1]) / (acc * taus[i])

        return ModelSolution(
            params=params,
            curve=curve,
            coeffs=tuple(tuple(c) for c in coeffs),
            adjusted_libors=tuple(ltil),
            normalizations=tuple(norms),
        )


def generating_function(sol: ModelSolution, i: int) -> GeneratingFunction:
    """Generating function f_i at horizon i (degree n-i-1)."""
    if not 0 <= i <= sol.n - 1:
        raise IndexError(f"horizon must be in [0, {sol.n - 1}], got {i}")
    return GeneratingFunction(horizon=i, coefficients=sol.coeffs[i])


def gf_eval(gf: GeneratingFunction, z):
    """Horner evaluation of f_i at a real or complex argument."""
    if isinstance(z, complex) or isinstance(z, mpc):
        acc = mpc(0)
        zz = mpc(z)
    else:
        acc = mpf(0)
        zz = wide(z)
    for c in reversed(gf.coefficients):
        acc = acc * zz + c
    return acc


def rebased_bond(sol: ModelSolution, i: int, x: float) -> WideReal:
    """One-step rebased bond Phat_{i,i+1}(x) at Markov state x."""
    if not 0 <= i <= sol.n - 1:
        raise IndexError(f"horizon must be in [0, {sol.n - 1}], got {i}")
    with working_bits(sol.params.precision_bits):
        psi = wide(sol.params.psi)
        t = wide(sol.horizon_time(i))
        xw = wide(x)
        acc = mpf(0)
        for j, c in enumerate(sol.coeffs[i]):
            jp = j * psi
            acc += c * mpmath.exp(jp * xw - jp * jp * t / 2)
        return acc


def convexity_expectation(sol: ModelSolution, i: int, phi: float) -> WideReal:
    """Expectation E_n[Phat_{i,i+1} exp(phi x_i - phi^2 t_i / 2)] = f_i(exp(psi phi t_i)).

    phi = 0 returns Phat_{0,i+1} (the sum rule); phi = psi returns N_i; higher
    multiples of psi give the moment kernels of the Libor law.
    """
    if not 0 <= i <= sol.n - 1:
        raise IndexError(f"horizon must be in [0, {sol.n - 1}], got {i}")
    arg = abs(sol.params.psi * phi * sol.horizon_time(i)) * (sol.n - i - 1)
    if arg > EXP_ARG_LIMIT:
        raise PrecisionError(
            f"horizon {i}: kernel exponent exp({arg:.3g}) beyond supported range",
            horizon=i,
        )
    gf = generating_function(sol, i)
    with working_bits(sol.params.precision_bits):
        z = mpmath.exp(wide(sol.params.psi) * wide(phi) * wide(sol.horizon_time(i)))
        return gf_eval(gf, z)


@dataclass(frozen=True)
class Limits:
    """Zero- and infinite-volatility limits at one horizon."""

    zero_vol_gf: GeneratingFunction
    infinite_vol_gf: GeneratingFunction
    asymptotic_adjusted_libor: Callable[[float], WideReal]


def limits(
    curve: YieldCurve, i: int, precision_bits: int | None = None
) -> Limits:
    """Closed-form limiting generating functions and the large-psi Libor law.

    The zero-volatility generating function is the product
    prod_{j>i} (1 + L_j^fwd tau_j z); the infinite-volatility one has
    coefficients (1, Phat_{0,n-1} - 1, ..., Phat_{0,i+1} - Phat_{0,i+2}).
    The asymptotic adjusted Libor decays as
    (Phat_{0,i} - Phat_{0,i+1}) / ((Phat_{0,i+1} - Phat_{0,i+2}) tau_i)
    * exp(-(n-i-1) psi^2 t_i).
    """
    n = curve.n
    if not 0 <= i <= n - 2:
        raise IndexError(f"horizon must be in [0, {n - 2}] for limits, got {i}")
    bits = precision_bits if precision_bits is not None else default_bits()
    with working_bits(bits):
        fwd = wide_forward_libors(curve)
        taus = [wide(t) for t in curve.tenor.accruals]
        # expand prod_{j=i+1}^{n-1} (1 + L_j tau_j z)
        zero_coeffs: list[WideReal] = [mpf(1)]
        for j in range(i + 1, n):
            a = fwd[j] * taus[j]
            nxt = zero_coeffs + [mpf(0)]
            for k in range(len(zero_coeffs), 0, -1):
                nxt[k] = nxt[k] + a * zero_coeffs[k - 1]
            zero_coeffs = nxt
        phat = curve.rebased
        inf_coeffs: list[WideReal] = [mpf(1)]
        for k in range(1, n - i):
            inf_coeffs.append(phat[n - k] - phat[n - k + 1])

        t_i = wide(curve.tenor.dates[i])
        prefactor = (phat[i] - phat[i + 1]) / ((phat[i + 1] - phat[i + 2]) * taus[i])
        deg = n - i - 1

        def asymptotic(psi: float) -> WideReal:
            with working_bits(bits):
                return prefactor * mpmath.exp(-deg * wide(psi) ** 2 * t_i)

        return Limits(
            zero_vol_gf=GeneratingFunction(i, tuple(zero_coeffs)),
            infinite_vol_gf=GeneratingFunction(i, tuple(inf_coeffs)),
            asymptotic_adjusted_libor=asymptotic,
        )


def frozen_drift_libors(curve: YieldCurve, psi: float) -> tuple[float, ...]:
    """Adjusted Libors of the frozen-drift market-model approximation.

    Ltil_i^FD = L_i^fwd exp(mu_i t_i) with
    mu_i = -sum_{j>i} tau_j psi^2 L_j^fwd / (1 + L_j^fwd tau_j).  Agrees with
    the exact solution at small psi; diverges from it at order psi^4.
    """
    if psi < 0.0:
        raise ValueError(f"psi must be >= 0, got {psi}")
    fwd = [float(x) for x in wide_forward_libors(curve)]
    taus = curve.tenor.accruals
    n = curve.n
    drift_sum = 0.0  # sum over j > i, accumulated backward
    mu = [0.0] * n
    for i in range(n - 1, -1, -1):
        mu[i] = -drift_sum
        drift_sum += taus[i] * psi * psi * fwd[i] / (1.0 + fwd[i] * taus[i])
    return tuple(
        fwd[i] * math.exp(mu[i] * curve.tenor.dates[i]) for i in range(n)
    )


# -- solution serialization --------------------------------------------------
#
# JSON schema (``lnterm-solution/1``): decimal strings carry enough digits to
# reproduce the binary values exactly at the stored precision.
#
# {
#   "schema": "lnterm-solution/1",
#   "precision_bits": 256,
#   "psi": 0.2,
#   "n": 40,
#   "dates": [0.0, 0.25, ...],                  # floats, len n+1
#   "discount_factors": ["1.0", ...],           # decimal strings, len n+1
#   "coeffs": [["...", ...], ...],              # row i: c_j^{(i)}
#   "adjusted_libors": ["...", ...],
#   "normalizations": ["...", ...]
# }

SOLUTION_SCHEMA = "lnterm-solution/1"


def solution_to_json(sol: ModelSolution) -> str:
    bits = sol.params.precision_bits
    digits = decimal_digits(bits)

    def s(x: WideReal) -> str:
        return wide_str(x, digits=digits)

    doc = {
        "schema": SOLUTION_SCHEMA,
        "precision_bits": bits,
        "psi": sol.params.psi,
        "n": sol.params.n,
        "dates": list(sol.curve.tenor.dates),
        "discount_factors": [s(p) for p in sol.curve.discount_factors],
        "coeffs": [[s(c) for c in row] for row in sol.coeffs],
        "adjusted_libors": [s(x) for x in sol.adjusted_libors],
        "normalizations": [s(x) for x in sol.normalizations],
    }
    return json.dumps(doc, indent=1)


def solution_from_json(text: str) -> ModelSolution:
    doc = json.loads(text)
    if doc.get("schema") != SOLUTION_SCHEMA:
        raise ValueError(f"unsupported solution schema: {doc.get('schema')!r}")
    bits = int(doc["precision_bits"])
    n = int(doc["n"])
    dates = tuple(float(t) for t in doc["dates"])
    accruals = tuple(b - a for a, b in zip(dates[:-1], dates[1:]))
    tenor = TenorStructure(dates=dates, accruals=accruals)
    with working_bits(bits):
        dfs = [wide(x, bits) for x in doc["discount_factors"]]
        pn = dfs[-1]
        curve = YieldCurve(
            tenor=tenor,
            discount_factors=tuple(dfs),
            rebased=tuple(p / pn for p in dfs),
        )
        coeffs = tuple(
            tuple(wide(c, bits) for c in row) for row in doc["coeffs"]
        )
        ltil = tuple(wide(x, bits) for x in doc["adjusted_libors"])
        norms = tuple(wide(x, bits) for x in doc["normalizations"])
    params = ModelParams(psi=float(doc["psi"]), n=n, precision_bits=bits)
    return ModelSolution(
        params=params,
        curve=curve,
        coeffs=coeffs,
        adjusted_libors=ltil,
        normalizations=norms,
    )
