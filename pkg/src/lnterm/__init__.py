"""Exact solver and analyzer for the log-normal terminal-measure rate model."""

from .curves import (
    ModelParams,
    TenorStructure,
    YieldCurve,
    build_flat_curve,
    build_tenor,
    forward_libors,
    load_curve_csv,
)
from .precision import WideReal, default_bits, to_double, wide, working_bits
from .solver import (
    GeneratingFunction,
    Limits,
    ModelSolution,
    PrecisionError,
    convexity_expectation,
    frozen_drift_libors,
    generating_function,
    gf_eval,
    limits,
    rebased_bond,
    solution_from_json,
    solution_to_json,
    solve,
)
from .distribution import (
    DegenerateDistributionError,
    LiborMixture,
    MomentReport,
    QuadratureError,
    characteristic_function,
    equivalent_lognormal_vol,
    libor_mixture,
    lmax,
    moment,
    moment_report,
    pdf_eval,
    pdf_grid,
    support_bounds,
)
from .pricing import (
    ArrearsQuote,
    CapletQuote,
    NoImpliedVolError,
    arrears_price,
    arrears_reference_lognormal,
    black_implied_vol,
    black_price,
    caplet_price,
    norm_cdf,
    smile,
)
from .criticality import (
    CriticalityReport,
    CriticalVolApprox,
    PhaseCell,
    RootFindingError,
    SweepBoundaryError,
    ZeroSet,
    critical_vol_approx,
    critical_vol_exact,
    criticality_report,
    find_zeros,
    moment_critical_vol,
    phase_boundary,
    pinch_at,
    pinch_point,
)
from .mc import McEstimate, PathSet, mc_caplet, mc_estimate_ni, simulate_paths

__version__ = "0.1.0"

__all__ = [
    "ArrearsQuote",
    "CapletQuote",
    "CriticalVolApprox",
    "CriticalityReport",
    "DegenerateDistributionError",
    "GeneratingFunction",
    "LiborMixture",
    "Limits",
    "McEstimate",
    "ModelParams",
    "ModelSolution",
    "MomentReport",
    "NoImpliedVolError",
    "PathSet",
    "PhaseCell",
    "PrecisionError",
    "QuadratureError",
    "RootFindingError",
    "SweepBoundaryError",
    "TenorStructure",
    "WideReal",
    "YieldCurve",
    "ZeroSet",
    "arrears_price",
    "arrears_reference_lognormal",
    "black_implied_vol",
    "black_price",
    "build_flat_curve",
    "build_tenor",
    "caplet_price",
    "characteristic_function",
    "convexity_expectation",
    "critical_vol_approx",
    "critical_vol_exact",
    "criticality_report",
    "default_bits",
    "equivalent_lognormal_vol",
    "find_zeros",
    "forward_libors",
    "frozen_drift_libors",
    "generating_function",
    "gf_eval",
    "libor_mixture",
    "limits",
    "lmax",
    "load_curve_csv",
    "mc_caplet",
    "mc_estimate_ni",
    "moment",
    "moment_critical_vol",
    "moment_report",
    "norm_cdf",
    "pdf_eval",
    "pdf_grid",
    "phase_boundary",
    "pinch_at",
    "pinch_point",
    "rebased_bond",
    "simulate_paths",
    "smile",
    "solution_from_json",
    "solution_to_json",
    "solve",
    "support_bounds",
    "to_double",
    "wide",
    "working_bits",
]
