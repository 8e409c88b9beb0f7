"""Terminal-measure Monte Carlo used to demonstrate what naive simulation misses.

Paths are the Brownian driver sampled at the tenor dates only (payoffs
depend on x at setting times, so finer stepping adds nothing).  Draws come
from counter-based Philox streams keyed by (seed, block index) with a fixed
block size, so results are bit-identical across runs and independent of any
worker scheduling; accumulation over blocks happens in index order with
numpy's pairwise summation.

Estimates run in plain double precision on purpose: this mirrors production
practice.  Above the critical volatility the integrand of N_i has a
secondary peak many standard deviations out in x that ordinary path counts
essentially never reach, so the sampled N_i falls far below the analytic
value even though the subcritical estimator is unbiased.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .curves import TenorStructure
from .precision import to_double
from .pricing import caplet_price
from .solver import ModelSolution

#: Paths per RNG block.  Fixed: block b always holds paths
#: [b * PATH_BLOCK, (b+1) * PATH_BLOCK), whatever the worker layout.
PATH_BLOCK = 4096


@dataclass(frozen=True)
class PathSet:
    """Brownian driver values x(t_i) for i = 1..n, one row per path."""

    seed: int
    tenor: TenorStructure
    states: np.ndarray  # shape (n_paths, n)

    @property
    def n_paths(self) -> int:
        return int(self.states.shape[0])

    def at_date(self, i: int) -> np.ndarray:
        """x(t_i) across paths; i = 0 is the (deterministic) origin."""
        if not 0 <= i <= self.tenor.n:
            raise IndexError(f"date index must be in [0, {self.tenor.n}], got {i}")
        if i == 0:
            return np.zeros(self.n_paths)
        return self.states[:, i - 1]


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    n_paths: int
    analytic: float
    ratio: float | None

    def report(self, psi: float, i: int, seed: int) -> dict:
        """JSON-ready report row."""
        return {
            "psi": psi,
            "i": i,
            "n_paths": self.n_paths,
            "seed": seed,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "analytic": self.analytic,
            "ratio": self.ratio,
        }

    def report_json(self, psi: float, i: int, seed: int) -> str:
        return json.dumps(self.report(psi, i, seed))


def _block_increments(seed: int, block: int, rows: int, n: int) -> np.ndarray:
    bitgen = np.random.Philox(np.random.SeedSequence(entropy=(int(seed), int(block))))
    return np.random.Generator(bitgen).standard_normal((rows, n))


def simulate_paths(seed: int, n_paths: int, tenor: TenorStructure) -> PathSet:
    """Sample the driver at the tenor dates; increments have variance tau_i."""
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    n = tenor.n
    sqrt_tau = np.sqrt(np.asarray(tenor.accruals))
    blocks = []
    for b in range((n_paths + PATH_BLOCK - 1) // PATH_BLOCK):
        rows = min(PATH_BLOCK, n_paths - b * PATH_BLOCK)
        z = _block_increments(seed, b, rows, n)
        blocks.append(np.cumsum(z * sqrt_tau[None, :], axis=1))
    return PathSet(seed=seed, tenor=tenor, states=np.vstack(blocks))


def _bond_factor(sol: ModelSolution, i: int, x: np.ndarray) -> np.ndarray:
    """Phat_{i,i+1}(x) across paths, in doubles."""
    psi = sol.params.psi
    t = sol.horizon_time(i)
    cs = np.array([to_double(c) for c in sol.coeffs[i]])
    js = np.arange(len(cs))
    expo = js[None, :] * psi * x[:, None] - 0.5 * (js[None, :] * psi) ** 2 * t
    return np.exp(expo) @ cs


def mc_estimate_ni(sol: ModelSolution, paths: PathSet, i: int) -> McEstimate:
    """Sampled N_i = E[Phat_{i,i+1}(x_i) exp(psi x_i - psi^2 t_i / 2)]."""
    psi = sol.params.psi
    t = sol.horizon_time(i)
    x = paths.at_date(i)
    vals = _bond_factor(sol, i, x) * np.exp(psi * x - 0.5 * psi * psi * t)
    analytic = to_double(sol.normalizations[i])
    return _estimate(vals, analytic)


def mc_caplet(sol: ModelSolution, paths: PathSet, i: int, K: float) -> McEstimate:
    """Sampled caplet price in the terminal measure, against the closed form."""
    if not K > 0.0:
        raise ValueError(f"strike must be positive, got {K}")
    psi = sol.params.psi
    t = sol.horizon_time(i)
    x = paths.at_date(i)
    libors = to_double(sol.adjusted_libors[i]) * np.exp(
        psi * x - 0.5 * psi * psi * t
    )
    vals = (
        np.maximum(libors - K, 0.0)
        * _bond_factor(sol, i, x)
        * to_double(sol.curve.discount_factors[sol.n])
    )
    return _estimate(vals, caplet_price(sol, i, K))


def _estimate(vals: np.ndarray, analytic: float) -> McEstimate:
    n = vals.shape[0]
    est = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    ratio = est / analytic if analytic > 0.0 else None
    return McEstimate(
        estimate=est, stderr=stderr, n_paths=n, analytic=analytic, ratio=ratio
    )
