"""Phase-transition machinery: complex zeros, pinch point and critical volatility.

The generating function f_i is a polynomial with positive coefficients, so
its n-i-1 zeros avoid the positive real axis and come in conjugate pairs
along a curve around the origin.  As psi grows the curve tightens onto the
positive axis; the modulus x_* of the conjugate pair closest to the axis
(the pinch point) is where expectation-value kernels of the form
f_i(exp(psi phi t_i)) turn non-analytic.  The critical volatility solves
exp(psi^2 t_i) = x_*(psi); the j-th moment of the Libor law transitions
where exp(j psi^2 t_i) = x_*(psi), which has no solution for large j
because the zeros cross those circles before they close onto the axis.

Operationally:

* zeros are found with a simultaneous Newton (Aberth-Ehrlich) iteration in
  extended precision, seeded uniformly on a circle of radius
  |c_0 / c_deg|^(1/deg) with a fixed angular offset;
* the pinch is reported only when the minimal |arg z| is below one average
  angular spacing 2 pi / deg, otherwise the zeros leave a gap around the
  positive axis and no transition exists at that volatility;
* the exact critical volatility is the argmax over a psi grid of the second
  difference of log N_i, with a three-point quadratic refinement.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import mpmath
from mpmath import mpc, mpf

from .curves import YieldCurve, build_flat_curve, build_tenor
from .precision import WideReal, default_bits, to_double, wide, working_bits
from .solver import GeneratingFunction, solve

MAX_ABERTH_ITERATIONS = 500


class RootFindingError(RuntimeError):
    """The all-roots iteration failed to reach the target residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class SweepBoundaryError(RuntimeError):
    """A grid search peaked at the range boundary; the range is too narrow."""


@dataclass(frozen=True)
class ZeroSet:
    """All complex zeros of a generating function, with a residual certificate."""

    horizon: int
    psi: float | None
    zeros: tuple[mpc, ...]
    residual: float

    @property
    def degree(self) -> int:
        return len(self.zeros)


@dataclass(frozen=True)
class CriticalVolApprox:
    """Flat-curve estimates of the critical volatility.

    ``from_zero_radius`` solves the radius relation of the large-volatility
    zero curve, exp(r0 tau + psi^2 t_i) = (1 / (1 - exp(-r0 tau)))^(1/(n-i-1));
    ``from_closed_form`` is its separable simplification
    psi^2 = log(1 / (r0 tau)) / (i (n-i-1) tau).  Both underestimate the
    exact transition.
    """

    from_zero_radius: float
    from_closed_form: float


@dataclass(frozen=True)
class CriticalityReport:
    horizon: int
    pinch: float | None
    psi_cr_exact: float
    approx: CriticalVolApprox | None
    moment_psi_cr: dict[int, float | None]
    max_transitioning_moment: int | None


def _poly_eval_with_derivative(coeffs: Sequence[WideReal], z: mpc) -> tuple[mpc, mpc]:
    p = mpc(0)
    dp = mpc(0)
    for c in reversed(coeffs):
        dp = dp * z + p
        p = p * z + c
    return p, dp


def find_zeros(
    gf: GeneratingFunction,
    psi: float | None = None,
    precision_bits: int | None = None,
) -> ZeroSet:
    """All complex zeros of f_i by the Aberth-Ehrlich simultaneous iteration.

    Deterministic: initial guesses sit on the circle of radius
    |c_0 / c_deg|^(1/deg) at uniformly spaced angles with a fixed offset.
    The returned residual is max_k |f(z_k)| / |c_deg|; it must reach
    10^(-digits/2) at the working precision or `RootFindingError` is raised.
    """
    deg = gf.degree
    if deg < 1:
        raise ValueError("the constant generating function has no zeros")
    bits = precision_bits if precision_bits is not None else default_bits()
    with working_bits(bits):
        coeffs = gf.coefficients
        lead = coeffs[-1]
        radius = (coeffs[0] / lead) ** (mpf(1) / deg)
        offset = mpf(37) / 100  # fixed angular offset keeps seeds off the axes
        z = [
            radius * mpmath.exp(mpc(0, 2 * mpmath.pi * k / deg + offset))
            for k in range(deg)
        ]
        step_tol = mpf(2) ** (-bits + 8)
        for _ in range(MAX_ABERTH_ITERATIONS):
            max_step = mpf(0)
            for k in range(deg):
                p, dp = _poly_eval_with_derivative(coeffs, z[k])
                if p == 0:
                    continue
                if dp == 0:
                    z[k] = z[k] * (1 + step_tol)
                    max_step = mpf(1)
                    continue
                ratio = p / dp
                s = mpc(0)
                for m in range(deg):
                    if m != k:
                        s += 1 / (z[k] - z[m])
                denom = 1 - ratio * s
                w = ratio if denom == 0 else ratio / denom
                z[k] = z[k] - w
                scale = abs(z[k])
                max_step = max(max_step, abs(w) / (scale if scale > 0 else mpf(1)))
            if max_step < step_tol:
                break
        residual = max(abs(_poly_eval_with_derivative(coeffs, zk)[0]) for zk in z)
        residual = to_double(residual / abs(lead))
        digits = mpmath.libmp.prec_to_dps(bits)
        if not residual < 10.0 ** (-digits / 2):
            raise RootFindingError(
                f"all-roots iteration stalled at residual {residual:.3e} "
                f"(target 1e-{digits // 2}) for horizon {gf.horizon}",
                residual=residual,
            )
        # deterministic order: by argument, then modulus
        ordered = tuple(
            sorted(z, key=lambda w: (to_double(mpmath.arg(w)), to_double(abs(w))))
        )
    return ZeroSet(horizon=gf.horizon, psi=psi, zeros=ordered, residual=residual)


def pinch_point(zs: ZeroSet, theta_gap: float | None = None) -> float | None:
    """Modulus of the conjugate zero pair closest to the positive real axis.

    Returns None when the minimal |arg z| is at or above ``theta_gap``
    (default: one average angular spacing, 2 pi / degree): the zeros then
    leave a gap around the positive axis and the generating function has no
    nearby non-analyticity.
    """
    if theta_gap is None:
        theta_gap = 2.0 * math.pi / zs.degree
    best = min(zs.zeros, key=lambda z: abs(to_double(mpmath.arg(z))))
    if abs(to_double(mpmath.arg(best))) >= theta_gap:
        return None
    return to_double(abs(best))


def _log_normalization(
    curve: YieldCurve, i: int, psi: float, bits: int
) -> float:
    sol = solve(curve, psi, precision_bits=bits)
    with working_bits(bits):
        return to_double(mpmath.log(sol.normalizations[i]))


def critical_vol_exact(
    curve: YieldCurve,
    i: int,
    psi_range: tuple[float, float],
    grid_step: float = 0.0025,
    precision_bits: int | None = None,
    workers: int = 1,
) -> float:
    """Exact critical volatility: argmax over psi of d^2/dpsi^2 log N_i.

    Scans ``psi_range`` at ``grid_step``, takes the largest second central
    difference of log N_i and refines it with a three-point quadratic fit.
    Raises `SweepBoundaryError` when the maximum sits at the range edge.
    """
    lo, hi = psi_range
    if not (0.0 <= lo < hi):
        raise ValueError(f"invalid psi range {psi_range}")
    bits = precision_bits if precision_bits is not None else default_bits()
    count = int(round((hi - lo) / grid_step)) + 1
    if count < 5:
        raise ValueError("psi range must span at least five grid points")
    grid = [lo + k * grid_step for k in range(count)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            vals = list(
                pool.map(_log_normalization, *zip(*[(curve, i, p, bits) for p in grid]))
            )
    else:
        vals = [_log_normalization(curve, i, p, bits) for p in grid]
    d2 = [
        (vals[k + 1] - 2.0 * vals[k] + vals[k - 1]) / grid_step**2
        for k in range(1, count - 1)
    ]
    kmax = max(range(len(d2)), key=lambda k: d2[k])
    if kmax in (0, len(d2) - 1):
        raise SweepBoundaryError(
            f"second derivative of log N_{i} peaks at the edge of "
            f"psi range {psi_range}; widen the range"
        )
    ym, y0, yp = d2[kmax - 1], d2[kmax], d2[kmax + 1]
    denom = ym - 2.0 * y0 + yp
    shift = 0.0 if denom == 0.0 else (ym - yp) / (2.0 * denom)
    return grid[kmax + 1] + shift * grid_step


def critical_vol_approx(r0: float, tau: float, i: int, n: int) -> CriticalVolApprox:
    """Flat-curve critical-volatility estimates (see `CriticalVolApprox`)."""
    if i * (n - i - 1) == 0:
        raise ValueError(f"undefined for i={i}, n={n}: need 1 <= i <= n-2")
    if not 0.0 < r0 * tau < 1.0:
        raise ValueError(f"need 0 < r0 * tau < 1, got {r0 * tau}")
    t_i = i * tau
    closed = math.sqrt(math.log(1.0 / (r0 * tau)) / (i * (n - i - 1) * tau))
    rhs = math.log(1.0 / (1.0 - math.exp(-r0 * tau))) / (n - i - 1) - r0 * tau
    if rhs <= 0.0:
        raise ValueError(
            f"the zero-radius relation has no positive solution for "
            f"r0={r0}, tau={tau}, i={i}, n={n}"
        )
    return CriticalVolApprox(
        from_zero_radius=math.sqrt(rhs / t_i),
        from_closed_form=closed,
    )


def pinch_at(
    curve: YieldCurve,
    i: int,
    psi: float,
    precision_bits: int | None = None,
    theta_gap: float | None = None,
) -> float | None:
    """Solve the model at psi and return the pinch point of f_i (or None)."""
    bits = precision_bits if precision_bits is not None else default_bits()
    sol = solve(curve, psi, precision_bits=bits)
    gf = GeneratingFunction(horizon=i, coefficients=sol.coeffs[i])
    zs = find_zeros(gf, psi=psi, precision_bits=bits)
    return pinch_point(zs, theta_gap=theta_gap)


def moment_critical_vol(
    curve: YieldCurve,
    i: int,
    j: int,
    psi_range: tuple[float, float],
    precision_bits: int | None = None,
    tol: float = 1e-4,
) -> float | None:
    """Volatility where the j-th Libor moment turns non-analytic, or None.

    Solves log x_*(psi) = j psi^2 t_i by bisection.  The solve is restricted
    to volatilities where the pinch exists at all: below that the zeros leave
    a gap around the positive axis and nothing is singular yet.  If the pinch
    is already inside the circle exp(j psi^2 t_i) at the volatility where it
    first forms, the moment never transitions (the zeros crossed that circle
    while the gap was still open) and the result is None.
    """
    if j < 1:
        raise ValueError(f"moment order must be >= 1, got {j}")
    lo, hi = psi_range
    if not (0.0 < lo < hi):
        raise ValueError(f"invalid psi range {psi_range}")
    t_i = curve.tenor.dates[i]

    def pinch(psi: float) -> float | None:
        return pinch_at(curve, i, psi, precision_bits=precision_bits)

    def gap(psi: float, x_star: float) -> float:
        return math.log(x_star) - j * psi * psi * t_i

    x_hi = pinch(hi)
    if x_hi is None or gap(hi, x_hi) > 0.0:
        return None  # never reaches the circle within the range
    x_lo = pinch(lo)
    if x_lo is None:
        # locate where the pinch first forms, then require it to still sit
        # outside the circle there
        a, b = lo, hi
        x_b = x_hi
        while b - a > tol:
            mid = 0.5 * (a + b)
            x_mid = pinch(mid)
            if x_mid is None:
                a = mid
            else:
                b, x_b = mid, x_mid
        lo, x_lo = b, x_b
    if gap(lo, x_lo) <= 0.0:
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        x_mid = pinch(mid)
        if x_mid is not None and gap(mid, x_mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def criticality_report(
    curve: YieldCurve,
    i: int,
    psi_range: tuple[float, float],
    grid_step: float = 0.0025,
    max_moment: int = 4,
    precision_bits: int | None = None,
    approx: CriticalVolApprox | None = None,
) -> CriticalityReport:
    """Bundle the exact transition, the pinch there, and per-moment transitions."""
    psi_cr = critical_vol_exact(
        curve, i, psi_range, grid_step=grid_step, precision_bits=precision_bits
    )
    pinch = pinch_at(curve, i, psi_cr, precision_bits=precision_bits)
    moments: dict[int, float | None] = {}
    sweep = (psi_range[0] if psi_range[0] > 0 else grid_step, psi_range[1])
    j0: int | None = 1
    for j in range(2, max_moment + 1):
        moments[j] = moment_critical_vol(
            curve, i, j, sweep, precision_bits=precision_bits
        )
        if moments[j] is not None:
            j0 = j
    return CriticalityReport(
        horizon=i,
        pinch=pinch,
        psi_cr_exact=psi_cr,
        approx=approx,
        moment_psi_cr=moments,
        max_transitioning_moment=j0,
    )


@dataclass(frozen=True)
class PhaseCell:
    """One (r0, tau) cell of a phase-boundary sweep; None entries mark failures."""

    r0: float
    tau: float
    i: int
    n: int
    psi_cr_exact: float | None
    approx: CriticalVolApprox | None
    note: str | None = None


def phase_boundary(
    r0_grid: Sequence[float],
    tau_grid: Sequence[float],
    setting_time: float,
    total_time: float,
    grid_step: float = 0.0025,
    precision_bits: int | None = None,
    workers: int = 1,
) -> list[PhaseCell]:
    """Critical volatility across flat-curve (r0, tau) cells.

    The Libor setting time and total horizon are held fixed in years, so the
    grid indices i = setting_time / tau and n = total_time / tau scale with
    the discretization; that is the regime where refining the time step
    lowers the critical volatility.  Per-cell failures are recorded in the
    cell's ``note`` instead of aborting the sweep.
    """
    cells: list[PhaseCell] = []
    for r0 in r0_grid:
        for tau in tau_grid:
            i = int(round(setting_time / tau))
            n = int(round(total_time / tau))
            if not (1 <= i <= n - 2):
                cells.append(
                    PhaseCell(r0, tau, i, n, None, None, note="grid too coarse")
                )
                continue
            try:
                approx = critical_vol_approx(r0, tau, i, n)
                lo = 0.75 * approx.from_closed_form
                hi = 2.2 * approx.from_closed_form
                curve = build_flat_curve(r0, build_tenor(n, tau), precision_bits)
                exact = critical_vol_exact(
                    curve,
                    i,
                    (lo, hi),
                    grid_step=grid_step,
                    precision_bits=precision_bits,
                    workers=workers,
                )
                cells.append(PhaseCell(r0, tau, i, n, exact, approx))
            except (SweepBoundaryError, ValueError) as exc:
                cells.append(PhaseCell(r0, tau, i, n, None, None, note=str(exc)))
    return cells
