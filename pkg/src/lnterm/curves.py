"""Tenor grid, initial yield curve and model parameters.

Dates are plain year fractions (no calendar logic).  The curve stores the
discount factors P(0, t_i) and the numeraire-rebased factors
P(0, t_i) / P(0, t_n) as extended-precision scalars, because the solver's
internal identities are checked far below double precision.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import mpmath
from mpmath import mpf

from .precision import (
    DEFAULT_SOLVER_BITS,
    MIN_BITS,
    WideReal,
    default_bits,
    to_double,
    wide,
    working_bits,
)


@dataclass(frozen=True)
class TenorStructure:
    """Simulation dates 0 = t_0 < t_1 < ... < t_n and accruals tau_i = t_{i+1} - t_i."""

    dates: tuple[float, ...]
    accruals: tuple[float, ...]

    def __post_init__(self):
        if len(self.dates) < 3:
            raise ValueError("need at least three dates (n >= 2)")
        if self.dates[0] != 0.0:
            raise ValueError(f"t_0 must be 0, got {self.dates[0]}")
        for a, b in zip(self.dates[:-1], self.dates[1:]):
            if not b > a:
                raise ValueError("dates must be strictly increasing")
        if len(self.accruals) != len(self.dates) - 1:
            raise ValueError("accruals must have one entry per date interval")
        for tau, a, b in zip(self.accruals, self.dates[:-1], self.dates[1:]):
            if not tau > 0.0:
                raise ValueError("all accruals must be positive")
            if not math.isclose(tau, b - a, rel_tol=1e-12, abs_tol=1e-15):
                raise ValueError("accruals must equal date differences")

    @property
    def n(self) -> int:
        """Number of simulation intervals."""
        return len(self.accruals)


def build_tenor(n: int, tau: float) -> TenorStructure:
    """Uniform grid {0, tau, 2 tau, ..., n tau}."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not tau > 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    dates = tuple(k * tau for k in range(n + 1))
    return TenorStructure(dates=dates, accruals=(tau,) * n)


@dataclass(frozen=True)
class YieldCurve:
    """Initial discount curve on a tenor grid.

    Attributes
    ----------
    tenor : TenorStructure
    discount_factors : tuple of WideReal
        P(0, t_i) for i = 0..n, with P(0, 0) = 1 and strictly decreasing
        (positive forward rates are a model precondition).
    rebased : tuple of WideReal
        P(0, t_i) / P(0, t_n); rebased[n] = 1 exactly.
    """

    tenor: TenorStructure
    discount_factors: tuple[WideReal, ...]
    rebased: tuple[WideReal, ...]

    def __post_init__(self):
        n = self.tenor.n
        if len(self.discount_factors) != n + 1 or len(self.rebased) != n + 1:
            raise ValueError("curve must hold one discount factor per date")
        if self.discount_factors[0] != 1:
            raise ValueError("P(0, 0) must equal 1")
        prev = None
        for p in self.discount_factors:
            if not p > 0:
                raise ValueError("discount factors must be positive")
            if prev is not None and not p < prev:
                raise ValueError(
                    "discount factors must be strictly decreasing "
                    "(positive forwards required)"
                )
            prev = p

    @property
    def n(self) -> int:
        return self.tenor.n


def _make_curve(tenor: TenorStructure, dfs: list[WideReal]) -> YieldCurve:
    pn = dfs[-1]
    rebased = tuple(p / pn for p in dfs)
    return YieldCurve(tenor=tenor, discount_factors=tuple(dfs), rebased=rebased)


def build_flat_curve(
    r0: float, tenor: TenorStructure, precision_bits: int | None = None
) -> YieldCurve:
    """Curve of a constant continuously-compounded short rate: P(0, t) = exp(-r0 t)."""
    if not r0 > 0.0:
        raise ValueError(f"r0 must be positive, got {r0}")
    bits = precision_bits if precision_bits is not None else default_bits()
    with working_bits(bits):
        r = wide(r0)
        dfs = [mpmath.exp(-r * wide(t)) for t in tenor.dates]
        dfs[0] = mpf(1)
        return _make_curve(tenor, dfs)


def load_curve_csv(
    path, tenor: TenorStructure, precision_bits: int | None = None
) -> YieldCurve:
    """Read a ``t,df`` CSV and interpolate it onto the tenor grid.

    The file must have a ``t,df`` header, rows ascending in t starting at
    t = 0 with df = 1, and cover the full grid.  Interpolation is log-linear
    in the discount factor.  NaN, non-positive or non-decreasing discount
    factors are rejected.
    """
    ts: list[float] = []
    dfs: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["t", "df"]:
            raise ValueError(f"curve CSV must start with a 't,df' header, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"line {lineno}: expected two columns")
            t = float(row[0])
            if math.isnan(t) or math.isnan(float(row[1])):
                raise ValueError(f"line {lineno}: NaN is not a valid entry")
            if float(row[1]) <= 0.0:
                raise ValueError(f"line {lineno}: discount factor must be positive")
            if ts and t <= ts[-1]:
                raise ValueError(f"line {lineno}: t values must be strictly ascending")
            ts.append(t)
            dfs.append(row[1].strip())
    if not ts:
        raise ValueError("curve CSV has no data rows")
    if ts[0] != 0.0 or float(dfs[0]) != 1.0:
        raise ValueError("curve CSV must start at t=0 with df=1")
    if ts[-1] < tenor.dates[-1]:
        raise ValueError(
            f"curve CSV ends at t={ts[-1]} but the tenor grid extends to "
            f"t={tenor.dates[-1]}"
        )
    bits = precision_bits if precision_bits is not None else default_bits()
    with working_bits(bits):
        log_dfs = [mpmath.log(wide(s, bits)) for s in dfs]
        out: list[WideReal] = []
        for t in tenor.dates:
            k = _bracket(ts, t)
            if ts[k] == t:
                v = log_dfs[k]
            else:
                w = (t - ts[k]) / (ts[k + 1] - ts[k])
                v = log_dfs[k] * (1 - wide(w)) + log_dfs[k + 1] * wide(w)
            out.append(mpmath.exp(v))
        out[0] = mpf(1)
        return _make_curve(tenor, out)


def _bracket(ts: list[float], t: float) -> int:
    lo, hi = 0, len(ts) - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ts[mid] <= t:
            lo = mid
        else:
            hi = mid
    return lo


def forward_libors(curve: YieldCurve) -> tuple[float, ...]:
    """Simple forward rates L_i = (P(0,t_i)/P(0,t_{i+1}) - 1) / tau_i, as doubles."""
    out = []
    for i in range(curve.n):
        p0, p1 = curve.discount_factors[i], curve.discount_factors[i + 1]
        if not p1 < p0:
            raise ValueError(
                f"non-increasing discount factors at interval {i}: forwards must be positive"
            )
        out.append(to_double((p0 / p1 - 1) / wide(curve.tenor.accruals[i])))
    return tuple(out)


def wide_forward_libors(curve: YieldCurve) -> tuple[WideReal, ...]:
    """Forward rates at the curve's stored precision (solver-internal)."""
    return tuple(
        (curve.discount_factors[i] / curve.discount_factors[i + 1] - 1)
        / wide(curve.tenor.accruals[i])
        for i in range(curve.n)
    )


@dataclass(frozen=True)
class ModelParams:
    """Model volatility, grid size and working precision."""

    psi: float
    n: int
    precision_bits: int = DEFAULT_SOLVER_BITS

    def __post_init__(self):
        if self.psi < 0.0:
            raise ValueError(f"psi must be >= 0, got {self.psi}")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.precision_bits < MIN_BITS:
            raise ValueError(f"precision_bits must be >= {MIN_BITS}")
