#!/usr/bin/env python3
"""Render the CSVs produced by reproduce_figures.py as PNGs.

Plotting stays out of the package on purpose; this is the one place that
touches matplotlib.

Usage:
    python scripts/plot_figures.py [--data DIR] [--out DIR]
"""

import argparse
from pathlib import Path

import numpy as np

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    raise SystemExit("plotting needs matplotlib (pip install matplotlib)")


def load(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", default="figure_data")
    ap.add_argument("--out", default="figure_data")
    opts = ap.parse_args()
    data = Path(opts.data)
    out = Path(opts.out)
    out.mkdir(parents=True, exist_ok=True)

    def save(fig, name):
        fig.savefig(out / name, dpi=150, bbox_inches="tight")
        plt.close(fig)
        print(f"wrote {out / name}")

    pdfs = sorted(data.glob("pdf_psi*.csv"))
    if pdfs:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for f in pdfs:
            d = load(f)
            label = f.stem.replace("pdf_psi", "psi = ")
            ax.plot(d["L"] * 100, d["density"], label=label)
        ax.set_xlim(0, 12)
        ax.set_ylim(0, 40)
        ax.set_xlabel("L (%)")
        ax.set_ylabel("density")
        ax.legend()
        ax.set_title("Libor density in the payment-date measure")
        save(fig, "fig_pdf.png")

    smiles = sorted(data.glob("smile_psi*.csv"))
    if smiles:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for f in smiles:
            d = load(f)
            ax.plot(d["K"] * 100, d["sigma_BS"], label=f.stem.replace("smile_psi", "psi = "))
        ax.set_xlabel("strike (%)")
        ax.set_ylabel("implied vol")
        ax.legend()
        ax.set_title("Caplet smile across the transition")
        save(fig, "fig_smile.png")

    f = data / "sigma_ln.csv"
    if f.exists():
        d = load(f)
        fig, ax = plt.subplots(figsize=(7, 4.5))
        ax.plot(d["psi"], d["sigma_BS_atm"], "k-", label="ATM implied vol")
        ax.plot(d["psi"], d["sigma_LN"], "r-", label="equivalent log-normal vol")
        ax.plot(d["psi"], d["psi"], "b:", label="model vol")
        ax.set_xlabel("psi")
        ax.set_ylabel("vol")
        ax.legend()
        ax.set_title("Volatility summaries vs model volatility")
        save(fig, "fig_sigma_ln.png")

    f = data / "zeros.csv"
    if f.exists():
        d = load(f)
        psis = np.unique(d["psi"])
        fig, axes = plt.subplots(1, len(psis), figsize=(4 * len(psis), 4))
        for ax, p in zip(np.atleast_1d(axes), psis):
            sel = d[d["psi"] == p]
            ax.plot(sel["re"], sel["im"], "ko", ms=4)
            theta = np.linspace(0, 2 * np.pi, 200)
            for radius, style in ((sel["circle1_radius"][0], "b-"),
                                  (sel["circle2_radius"][0], "r-")):
                ax.plot(radius * np.cos(theta), radius * np.sin(theta), style, lw=0.8)
            ax.set_title(f"psi = {p}")
            ax.set_aspect("equal")
        save(fig, "fig_zeros.png")

    f = data / "arrears.csv"
    if f.exists():
        d = load(f)
        fig, ax = plt.subplots(figsize=(7, 4.5))
        ax.plot(d["psi"], d["A"] * 1e4, "k-")
        ax.set_xlabel("psi")
        ax.set_ylabel("in-arrears price (bp)")
        ax.set_title("Libor-in-arrears price vs volatility")
        save(fig, "fig_arrears.png")

    f = data / "mc_compare.csv"
    if f.exists():
        d = load(f)
        fig, ax = plt.subplots(figsize=(7, 4.5))
        ax.axhline(1.0, color="0.7", lw=0.8)
        ax.errorbar(d["psi"], d["ratio"], yerr=4 * d["stderr"] / d["analytic"],
                    fmt="ko", capsize=3)
        ax.set_xlabel("psi")
        ax.set_ylabel("sampled / analytic normalization")
        ax.set_title("What naive Monte Carlo sees across the transition")
        save(fig, "fig_mc_compare.png")

    for stem, xcol, xlabel in (
        ("phase_tau", "tau", "time step (years)"),
        ("phase_r0", "r0", "short rate"),
    ):
        files = sorted(data.glob(f"{stem}_tset*.csv"))
        if not files:
            continue
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for f in files:
            d = np.atleast_1d(load(f))
            label = f.stem.split("_tset")[1]
            ax.plot(d[xcol], d["psi_cr_exact"], "o-", label=f"exact, t_i = {label}y")
            ax.plot(d[xcol], d["psi_cr_eq22"], "--", label=f"estimate, t_i = {label}y")
        ax.set_xlabel(xlabel)
        ax.set_ylabel("critical volatility")
        ax.legend()
        ax.set_title("Phase boundary")
        save(fig, f"fig_{stem}.png")


if __name__ == "__main__":
    main()
