#!/usr/bin/env python3
"""Regenerate every figure dataset through the CLI.

Writes CSVs into the output directory (default ./figure_data).  The fast
profile covers everything at desk scale in a couple of minutes; --full
extends the phase-boundary panels to the finest time discretization
(1/tau = 16), which is the slow part.

Usage:
    python scripts/reproduce_figures.py [--out DIR] [--full] [--workers N]
"""

import argparse
import sys
from pathlib import Path

from lnterm.cli import main as lnterm_main

BASE = ["--curve", "flat:0.05", "--n", "40", "--tau", "0.25"]


def run(args):
    code = lnterm_main([str(a) for a in args])
    if code != 0:
        sys.exit(code)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figure_data")
    ap.add_argument("--full", action="store_true", help="include 1/tau up to 16")
    ap.add_argument("--workers", type=int, default=1)
    opts = ap.parse_args()
    out = Path(opts.out)
    out.mkdir(parents=True, exist_ok=True)

    # Libor density across the transition (several volatilities)
    for psi in ("0.20", "0.30", "0.36", "0.45"):
        run(["figures", "pdf", *BASE, "--psi", psi, "--i", "30",
             "--lgrid", "1e-6:6.0:600", "--out", out / f"pdf_psi{psi}.csv"])

    # implied-vol smiles below and above the critical volatility
    for psi in ("0.10", "0.20", "0.30", "0.34", "0.40"):
        run(["figures", "smile", *BASE, "--psi", psi, "--i", "30",
             "--strikes", "0.01:0.12:0.0025", "--out", out / f"smile_psi{psi}.csv"])

    # ATM implied vol and equivalent log-normal vol versus model vol
    run(["figures", "sigma-ln", *BASE, "--psi", "0.02:0.45:0.0025", "--i", "30",
         "--out", out / "sigma_ln.csv"])

    # zero loci with the two reference circles
    run(["figures", "zeros", *BASE, "--psi", "0.30,0.31,0.32,0.33", "--i", "30",
         "--out", out / "zeros.csv"])

    # in-arrears price sweep
    run(["figures", "arrears", *BASE, "--psi", "0.0:0.45:0.005", "--i", "30",
         "--out", out / "arrears.csv"])

    # Monte Carlo vs analytic across the transition
    run(["figures", "mc-compare", *BASE, "--psi", "0.1,0.2,0.3,0.35,0.4,0.45",
         "--i", "30", "--paths", "100000", "--seed", "20240601",
         "--out", out / "mc_compare.csv"])

    # phase boundary: time-step dependence at r0 = 5%, and rate dependence
    # at quarterly steps, for setting times 5y and 7.5y
    taus = "0.5,0.25,0.125" + (",0.0625" if opts.full else "")
    for t_set in ("5.0", "7.5"):
        run(["figures", "phase", *BASE, "--r0s", "0.05", "--taus", taus,
             "--t-set", t_set, "--t-total", "10.0",
             "--workers", opts.workers,
             "--out", out / f"phase_tau_tset{t_set}.csv"])
        run(["figures", "phase", *BASE,
             "--r0s", "0.01,0.02,0.03,0.04,0.05,0.06,0.08,0.10",
             "--taus", "0.25", "--t-set", t_set, "--t-total", "10.0",
             "--workers", opts.workers,
             "--out", out / f"phase_r0_tset{t_set}.csv"])

    print(f"all figure data written under {out}/")


if __name__ == "__main__":
    main()
