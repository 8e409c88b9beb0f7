"""Libor law in its natural forward measure: mixture form, moments, smile inputs.

In the measure whose numeraire is the bond maturing at the Libor payment
date, the density of L_i is a finite mixture of log-normal components with
common width psi * sqrt(t_i):

    Phi_i(L) = sum_j w_j * phi(L; mu_j, sigma_i),
    w_j  = c_j^{(i)} / Phat_{0,i+1},
    mu_j = log(Ltil_i) + (j - 1/2) psi^2 t_i,

so component j has mean Ltil_i exp(j psi^2 t_i).  The weights sum to one by
the coefficient sum rule, and the mixture mean is the forward rate (the
martingale condition).  Above the critical volatility the low-j components
collapse toward L = 0 while the top component carries the martingale mean as
a far tail; that shape change is what pricing and Monte Carlo inherit.

Moments come from the generating function directly:

    M_j = Ltil_i^j exp(j (j-1) psi^2 t_i / 2) f_i(exp(j psi^2 t_i)) / Phat_{0,i+1},

with M_0 = 1 and M_1 = L_i^fwd identically.  The equivalent log-normal width
sigma_LN, defined by sigma_LN^2 t_i = log(M_2 / M_1^2), is the two-moment
summary used for the in-arrears convexity adjustment.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np
from mpmath import mpf
from scipy.integrate import IntegrationWarning, quad

from .curves import YieldCurve, forward_libors
from .precision import WideReal, to_double, wide, working_bits
from .solver import EXP_ARG_LIMIT, ModelSolution, PrecisionError, generating_function, gf_eval

#: Half-width, in units of the common component width, of the region in
#: log-L space treated as the numerical support of the mixture.
SUPPORT_SIGMAS = 12.0

#: Default largest moment order reported in bulk; higher orders are overflow
#: prone and carry no additional diagnostic value here.
DEFAULT_MAX_MOMENT = 8


class DegenerateDistributionError(ValueError):
    """The psi = 0 law is a point mass at the forward; there is no density.

    Callers pricing at psi = 0 should use the intrinsic/point-mass case
    directly instead of the mixture representation.
    """


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class LiborMixture:
    """Log-normal mixture representation of the forward-measure Libor law."""

    horizon: int
    weights: tuple[WideReal, ...]
    log_means: tuple[WideReal, ...]
    width: WideReal
    # double-precision views used by the pointwise evaluators
    weights_f: np.ndarray = field(repr=False, compare=False, default=None)  # type: ignore[assignment]
    log_means_f: np.ndarray = field(repr=False, compare=False, default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(
            self, "weights_f", np.array([to_double(w) for w in self.weights])
        )
        object.__setattr__(
            self, "log_means_f", np.array([to_double(m) for m in self.log_means])
        )

    @property
    def component_count(self) -> int:
        return len(self.weights)

    @property
    def width_f(self) -> float:
        return to_double(self.width)


def libor_mixture(sol: ModelSolution, i: int) -> LiborMixture:
    """Mixture weights, component log-means and common width at horizon i."""
    if not 0 <= i <= sol.n - 1:
        raise IndexError(f"horizon must be in [0, {sol.n - 1}], got {i}")
    if sol.params.psi == 0.0:
        raise DegenerateDistributionError(
            f"psi = 0: the Libor law at horizon {i} is a point mass at the "
            "forward rate; handle the intrinsic case instead of a density"
        )
    with working_bits(sol.params.precision_bits):
        psi = wide(sol.params.psi)
        t = wide(sol.horizon_time(i))
        phat_next = sol.curve.rebased[i + 1]
        log_ltil = mpmath.log(sol.adjusted_libors[i])
        weights = tuple(c / phat_next for c in sol.coeffs[i])
        log_means = tuple(
            log_ltil + (wide(j) - mpf(1) / 2) * psi * psi * t
            for j in range(len(weights))
        )
        return LiborMixture(
            horizon=i,
            weights=weights,
            log_means=log_means,
            width=psi * mpmath.sqrt(t),
        )


def support_bounds(mix: LiborMixture) -> tuple[float, float]:
    """Numerical support of the mixture in L, from the known component layout."""
    s = mix.width_f
    lo = float(mix.log_means_f.min()) - SUPPORT_SIGMAS * s
    hi = float(mix.log_means_f.max()) + SUPPORT_SIGMAS * s
    return math.exp(lo), math.exp(hi)


def pdf_eval(mix: LiborMixture, L: float) -> float:
    """Mixture density at L > 0 (double precision)."""
    if not L > 0.0:
        raise ValueError(f"the Libor density is defined for L > 0, got {L}")
    s = mix.width_f
    z = (math.log(L) - mix.log_means_f) / s
    comps = np.exp(-0.5 * z * z) / (L * math.sqrt(2.0 * math.pi) * s)
    return float(np.dot(mix.weights_f, comps))


def pdf_grid(mix: LiborMixture, grid: np.ndarray) -> np.ndarray:
    """Vectorized `pdf_eval` over an array of positive rates."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0.0):
        raise ValueError("the Libor density is defined for L > 0")
    s = mix.width_f
    z = (np.log(grid)[:, None] - mix.log_means_f[None, :]) / s
    comps = np.exp(-0.5 * z * z) / (grid[:, None] * math.sqrt(2.0 * math.pi) * s)
    return comps @ mix.weights_f


def moment(sol: ModelSolution, i: int, j: int) -> WideReal:
    """j-th moment of the forward-measure Libor law, from the generating function."""
    if j < 0 or j != int(j):
        raise ValueError(f"moment order must be a nonnegative integer, got {j}")
    psi, t = sol.params.psi, sol.horizon_time(i)
    arg = j * psi * psi * t * max(sol.n - i - 1, 1)
    if arg > EXP_ARG_LIMIT:
        raise PrecisionError(
            f"horizon {i}: moment {j} needs exp({arg:.3g}), beyond supported range",
            horizon=i,
        )
    gf = generating_function(sol, i)
    with working_bits(sol.params.precision_bits):
        psi_w, t_w = wide(psi), wide(t)
        z = mpmath.exp(j * psi_w * psi_w * t_w)
        pref = sol.adjusted_libors[i] ** j * mpmath.exp(
            mpf(j * (j - 1)) / 2 * psi_w * psi_w * t_w
        )
        return pref * gf_eval(gf, z) / sol.curve.rebased[i + 1]


@dataclass(frozen=True)
class MomentReport:
    """Moments M_0..M_jmax and the equivalent log-normal volatility."""

    horizon: int
    moments: tuple[WideReal, ...]
    sigma_ln: float


def moment_report(
    sol: ModelSolution, i: int, max_order: int = DEFAULT_MAX_MOMENT
) -> MomentReport:
    ms = tuple(moment(sol, i, j) for j in range(max_order + 1))
    return MomentReport(horizon=i, moments=ms, sigma_ln=equivalent_lognormal_vol(sol, i))


def equivalent_lognormal_vol(sol: ModelSolution, i: int) -> float:
    """Width of the log-normal law matching the first two moments.

    sigma_LN^2 t_i = log(M_2 / M_1^2).  Approximately equal to psi at small
    volatility; non-monotonic in psi through the critical region.
    """
    if sol.params.psi == 0.0:
        return 0.0
    with working_bits(sol.params.precision_bits):
        m1 = moment(sol, i, 1)
        m2 = moment(sol, i, 2)
        t = wide(sol.horizon_time(i))
        val = mpmath.log(m2 / (m1 * m1)) / t
        return to_double(mpmath.sqrt(val))


def characteristic_function(
    mix: LiborMixture, u: float, rel_tol: float = 1e-7
) -> complex:
    """E[exp(i u L)] by adaptive quadrature of the mixture density.

    A moment series need not converge here (the law is heavy-tailed in the
    supercritical phase), so the transform is integrated directly.  The
    integration runs in log-L, split at the component centers; the support
    can span many decades, which defeats fixed-interval oscillatory rules.
    """
    if not math.isfinite(u):
        raise ValueError(f"frequency must be finite, got {u}")
    s = mix.width_f
    centers = sorted(float(m) for m in mix.log_means_f)
    pts = (
        [centers[0] - SUPPORT_SIGMAS * s]
        + centers
        + [centers[-1] + SUPPORT_SIGMAS * s]
    )

    def piece(trig) -> tuple[float, float]:
        # the explicit error gate below supersedes quadpack's advisory warnings
        total, err = 0.0, 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            for a, b in zip(pts[:-1], pts[1:]):
                def integrand(y: float) -> float:
                    L = math.exp(y)
                    return pdf_eval(mix, L) * L * trig(u * L)

                v, e = quad(integrand, a, b, limit=500, epsabs=1e-12, epsrel=1e-10)
                total += v
                err += e
        return total, err

    re, re_err = piece(math.cos)
    im, im_err = (0.0, 0.0) if u == 0.0 else piece(math.sin)
    achieved = max(re_err, im_err)
    if achieved > max(rel_tol, 1e-12) * max(1.0, abs(re) + abs(im)):
        raise QuadratureError(
            f"characteristic function quadrature achieved error {achieved:.3e} "
            f"at u={u}, above tolerance {rel_tol:.1e}",
            achieved=achieved,
        )
    return complex(re, im)


def lmax(curve: YieldCurve, i: int) -> float:
    """Mean of the top mixture component in the large-volatility limit.

    (Phat_{0,i} - Phat_{0,i+1}) / ((Phat_{0,i+1} - Phat_{0,i+2}) tau_i); needs
    the curve two steps past i, so it is undefined at the last horizon.
    """
    if not 0 <= i <= curve.n - 2:
        raise IndexError(
            f"lmax needs discount factors through i+2; horizon must be in "
            f"[0, {curve.n - 2}], got {i}"
        )
    p = curve.rebased
    val = (p[i] - p[i + 1]) / ((p[i + 1] - p[i + 2]) * wide(curve.tenor.accruals[i]))
    return to_double(val)


def forward_rate(curve: YieldCurve, i: int) -> float:
    """Convenience accessor for L_i^fwd as a double."""
    return forward_libors(curve)[i]
