"""Command-line front end emitting figure data as CSV/JSON.

Subcommands::

    lnterm solve   --curve flat:0.05 --n 40 --tau 0.25 --psi 0.2 --out sol.json
    lnterm figures {pdf|smile|sigma-ln|zeros|phase|arrears|mc-compare} ...

Exit codes: 0 success, 2 configuration error, 3 precision error.  Output is
deterministic for a fixed configuration (seeds included), so reruns produce
byte-identical files.  Doubles are serialized as shortest round-trip
decimals; extended-precision values as 40-digit decimal strings.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Sequence

import mpmath
import numpy as np

from . import criticality, distribution, mc, pricing, solver
from .curves import YieldCurve, build_flat_curve, build_tenor, forward_libors, load_curve_csv
from .precision import default_bits, to_double, wide_str, working_bits

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECISION = 3


class ConfigError(ValueError):
    pass


def _parse_curve(spec: str, n: int, tau: float, bits: int) -> YieldCurve:
    tenor = build_tenor(n, tau)
    if spec.startswith("flat:"):
        try:
            r0 = float(spec[5:])
        except ValueError as exc:
            raise ConfigError(f"bad flat curve spec {spec!r}") from exc
        if r0 <= 0.0:
            raise ConfigError(f"flat curve rate must be positive, got {r0}")
        return build_flat_curve(r0, tenor, precision_bits=bits)
    if spec.startswith("csv:"):
        return load_curve_csv(spec[4:], tenor, precision_bits=bits)
    raise ConfigError(f"curve spec must be flat:<r0> or csv:<path>, got {spec!r}")


def _parse_values(spec: str, what: str) -> list[float]:
    """Parse `a`, `a,b,c` or `start:stop:step` into a list of floats."""
    try:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise ValueError("sweep must be start:stop:step")
            start, stop, step = (float(p) for p in parts)
            if step <= 0.0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            count = int(round((stop - start) / step))
            vals = [start + k * step for k in range(count + 1)]
            return [v for v in vals if v <= stop + 1e-12]
        return [float(p) for p in spec.split(",") if p != ""]
    except ValueError as exc:
        raise ConfigError(f"bad {what} spec {spec!r}: {exc}") from exc


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else _fmt(v) for v in row])


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, mpmath.mpf):
        return wide_str(v, digits=40)
    return str(v)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--curve", required=True, help="flat:<r0> or csv:<path>")
    p.add_argument("--n", type=int, required=True, help="number of tenor intervals")
    p.add_argument("--tau", type=float, required=True, help="accrual in years")
    p.add_argument("--precision", type=int, default=None, help="mantissa bits")
    p.add_argument("--out", required=True, help="output file path")
    p.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lnterm", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve the model and write the solution JSON")
    _add_common(p_solve)
    p_solve.add_argument("--psi", required=True, help="volatility (single value)")

    p_fig = sub.add_parser("figures", help="emit plot data for one figure family")
    p_fig.add_argument(
        "which",
        choices=["pdf", "smile", "sigma-ln", "zeros", "phase", "arrears", "mc-compare"],
    )
    _add_common(p_fig)
    p_fig.add_argument("--psi", help="volatility value, list or start:stop:step sweep")
    p_fig.add_argument("--i", type=int, help="Libor horizon index")
    p_fig.add_argument("--strikes", help="strike list or start:stop:step")
    p_fig.add_argument("--lgrid", help="pdf grid as lmin:lmax:points")
    p_fig.add_argument("--paths", type=int, default=100_000)
    p_fig.add_argument("--seed", type=int, default=0)
    p_fig.add_argument("--r0s", help="phase sweep short rates (comma list)")
    p_fig.add_argument("--taus", help="phase sweep accruals (comma list)")
    p_fig.add_argument("--t-set", type=float, default=7.5, dest="t_set")
    p_fig.add_argument("--t-total", type=float, default=10.0, dest="t_total")
    p_fig.add_argument("--grid-step", type=float, default=0.0025, dest="grid_step")
    p_fig.add_argument("--workers", type=int, default=1)
    return ap


def cmd_solve(args) -> int:
    bits = args.precision if args.precision is not None else default_bits()
    curve = _parse_curve(args.curve, args.n, args.tau, bits)
    psis = _parse_values(args.psi, "psi")
    if len(psis) != 1:
        raise ConfigError("solve takes a single psi value")
    sol = solver.solve(curve, psis[0], precision_bits=bits)
    with open(args.out, "w") as fh:
        fh.write(solver.solution_to_json(sol))
        fh.write("\n")
    with working_bits(bits):
        resid = max(
            to_double(
                abs(sum(row) - curve.rebased[i + 1]) / curve.rebased[i + 1]
            )
            for i, row in enumerate(sol.coeffs)
        )
    print(f"solved n={args.n} psi={psis[0]} at {bits} bits -> {args.out}")
    print(f"max sum-rule residual: {resid:.3e}")
    return EXIT_OK


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise ConfigError(f"--{name.replace('_', '-')} is required for this figure")


def _figure_pdf(args, curve: YieldCurve, bits: int) -> tuple[list[str], list[list]]:
    _require(args, "psi", "i")
    psis = _parse_values(args.psi, "psi")
    if len(psis) != 1:
        raise ConfigError("figures pdf takes a single psi")
    if psis[0] == 0.0:
        raise ConfigError(
            "psi=0 has no density: the Libor law is a point mass at the forward"
        )
    sol = solver.solve(curve, psis[0], precision_bits=bits)
    mix = distribution.libor_mixture(sol, args.i)
    if args.lgrid:
        parts = args.lgrid.split(":")
        if len(parts) != 3:
            raise ConfigError("--lgrid must be lmin:lmax:points")
        lo, hi, pts = float(parts[0]), float(parts[1]), int(parts[2])
    else:
        lo, hi = distribution.support_bounds(mix)
        pts = 400
    if not (0.0 < lo < hi) or pts < 2:
        raise ConfigError(f"bad pdf grid ({lo}, {hi}, {pts})")
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), pts))
    dens = distribution.pdf_grid(mix, grid)
    return ["L", "density"], [[float(l), float(d)] for l, d in zip(grid, dens)]


def _figure_smile(args, curve: YieldCurve, bits: int) -> tuple[list[str], list[list]]:
    _require(args, "psi", "i", "strikes")
    psis = _parse_values(args.psi, "psi")
    if len(psis) != 1:
        raise ConfigError("figures smile takes a single psi")
    strikes = _parse_values(args.strikes, "strikes")
    sol = solver.solve(curve, psis[0], precision_bits=bits)
    quotes = pricing.smile(sol, args.i, strikes)
    return ["K", "price", "sigma_BS"], [
        [q.strike, q.price, q.sigma_bs] for q in quotes
    ]


def _figure_sigma_ln(args, curve: YieldCurve, bits: int) -> tuple[list[str], list[list]]:
    _require(args, "psi", "i")
    psis = _parse_values(args.psi, "psi")
    fwd = forward_libors(curve)[args.i]
    p_next = to_double(curve.discount_factors[args.i + 1])
    t = curve.tenor.dates[args.i]
    rows = []
    for p in psis:
        sol = solver.solve(curve, p, precision_bits=bits)
        sln = distribution.equivalent_lognormal_vol(sol, args.i)
        atm_price = pricing.caplet_price(sol, args.i, fwd)
        atm = pricing.black_implied_vol(atm_price, fwd, fwd, t, p_next)
        rows.append([p, sln, atm])
    return ["psi", "sigma_LN", "sigma_BS_atm"], rows


def _figure_zeros(args, curve: YieldCurve, bits: int) -> tuple[list[str], list[list]]:
    _require(args, "psi", "i")
    psis = _parse_values(args.psi, "psi")
    t = curve.tenor.dates[args.i]
    rows = []
    for p in psis:
        sol = solver.solve(curve, p, precision_bits=bits)
        zs = criticality.find_zeros(
            solver.generating_function(sol, args.i), psi=p, precision_bits=bits
        )
        c1 = math.exp(p * p * t)
        c2 = math.exp(2.0 * p * p * t)
        for z in zs.zeros:
            rows.append([p, mpmath.mpf(z.real), mpmath.mpf(z.imag), c1, c2])
    return ["psi", "re", "im", "circle1_radius", "circle2_radius"], rows


def _figure_phase(args, curve: YieldCurve, bits: int) -> tuple[list[str], list[list]]:
    _require(args, "r0s", "taus")
    r0s = _parse_values(args.r0s, "r0s")
    taus = _parse_values(args.taus, "taus")
    cells = criticality.phase_boundary(
        r0s,
        taus,
        args.t_set,
        args.t_total,
        grid_step=args.grid_step,
        precision_bits=bits,
        workers=args.workers,
    )
    rows = []
    for cell in cells:
        if cell.note:
            print(
                f"phase cell r0={cell.r0} tau={cell.tau} skipped: {cell.note}",
                file=sys.stderr,
            )
        rows.append(
            [
                cell.r0,
                cell.tau,
                cell.psi_cr_exact,
                cell.approx.from_zero_radius if cell.approx else None,
                cell.approx.from_closed_form if cell.approx else None,
            ]
        )
    return ["r0", "tau", "psi_cr_exact", "psi_cr_eq21", "psi_cr_eq22"], rows


def _figure_arrears(args, curve: YieldCurve, bits: int) -> tuple[list[str], list[list]]:
    _require(args, "psi", "i")
    psis = _parse_values(args.psi, "psi")
    rows = []
    for p in psis:
        sol = solver.solve(curve, p, precision_bits=bits)
        quote = pricing.arrears_price(sol, args.i)
        rows.append([p, quote.price, distribution.equivalent_lognormal_vol(sol, args.i)])
    return ["psi", "A", "sigma_LN"], rows


def _figure_mc(args, curve: YieldCurve, bits: int) -> tuple[list[str], list[list]]:
    _require(args, "psi", "i")
    psis = _parse_values(args.psi, "psi")
    paths = mc.simulate_paths(args.seed, args.paths, curve.tenor)
    rows = []
    for p in psis:
        sol = solver.solve(curve, p, precision_bits=bits)
        est = mc.mc_estimate_ni(sol, paths, args.i)
        rows.append(
            [p, args.i, est.n_paths, args.seed, est.estimate, est.stderr,
             est.analytic, est.ratio]
        )
    return (
        ["psi", "i", "n_paths", "seed", "estimate", "stderr", "analytic", "ratio"],
        rows,
    )


_FIGURES = {
    "pdf": _figure_pdf,
    "smile": _figure_smile,
    "sigma-ln": _figure_sigma_ln,
    "zeros": _figure_zeros,
    "phase": _figure_phase,
    "arrears": _figure_arrears,
    "mc-compare": _figure_mc,
}


def cmd_figures(args) -> int:
    bits = args.precision if args.precision is not None else default_bits()
    curve = _parse_curve(args.curve, args.n, args.tau, bits)
    header, rows = _FIGURES[args.which](args, curve, bits)
    if args.format == "json":
        doc = [dict(zip(header, row)) for row in rows]
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    else:
        _write_csv(args.out, header, rows)
    print(f"wrote {len(rows)} rows -> {args.out}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        return cmd_figures(args)
    except solver.PrecisionError as exc:
        print(f"precision error: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (ConfigError, ValueError, IndexError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
