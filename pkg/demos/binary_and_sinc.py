"""A measurement that actually reaches the quantum limit — with one detector pair.

Sorting the collected light into spatial modes before detection (SPADE)
converts separation information into photon-number statistics.  The full
Hermite-Gauss sorter achieves the quantum bound exactly, but even its
crudest truncation — one detector for the fundamental mode, one for
everything else ("binary SPADE") — stays within a factor ~e of the bound at
small separations, where direct imaging has already collapsed.

The same construction is not tied to Gaussian optics.  For a hard-edged
(rectangular) aperture the point-spread function is a sinc, the quantum
bound is π²N/(3W²), and the binary sorter built from the sinc fundamental
mode shows the same behaviour.

Run:  python3 demos/binary_and_sinc.py [--plot out.png]
"""

import argparse

import numpy as np

from spadesim.fisher import (
    binary_spade_fisher_general,
    direct_imaging_fisher,
    hg_spade_fisher,
)
from spadesim.psf import GaussianPsf, SincPsf
from spadesim.qfi import OnePhotonModel, qfi_closed_form


def curves(psf, grid):
    out = {"k22": [], "binary": [], "direct": [], "hg": []}
    for theta2 in grid:
        model = OnePhotonModel.symmetric(psf, float(theta2))
        out["k22"].append(qfi_closed_form(model).j22)
        out["binary"].append(
            binary_spade_fisher_general(psf, float(theta2), 1.0).j22)
        out["direct"].append(direct_imaging_fisher(model).j22)
        if isinstance(psf, GaussianPsf):
            out["hg"].append(hg_spade_fisher(model).j22)
    return {k: np.array(v) for k, v in out.items() if v}


def report(name, grid, c):
    k22 = c["k22"][0]
    print(f"\n--- {name} (quantum bound K22 = {k22:.4f}) ---")
    header = f"{'theta2/width':>12} {'binary/K22':>11} {'direct/K22':>11}"
    if "hg" in c:
        header += f" {'full HG/K22':>12}"
    print(header)
    for i in range(0, len(grid), 3):
        line = f"{grid[i]:12.2f} {c['binary'][i] / k22:11.4f} {c['direct'][i] / k22:11.4f}"
        if "hg" in c:
            line += f" {c['hg'][i] / k22:12.4f}"
        print(line)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--plot", metavar="PNG")
    args = ap.parse_args()

    grid = np.linspace(0.0, 5.0, 26)
    gauss = curves(GaussianPsf(1.0), grid)
    sinc = curves(SincPsf(1.0), grid)

    report("Gaussian PSF, sigma = 1", grid, gauss)
    report("sinc PSF (hard aperture), W = 1", grid, sinc)

    print()
    print("Near theta2 = 0 the binary sorter holds most of the quantum")
    print("information while the direct column vanishes; the full HG sorter")
    print("is exactly 1 at every separation.")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 2, figsize=(9.5, 4), sharey=True)
        for ax, (name, c) in zip(axes, [("Gaussian", gauss), ("sinc", sinc)]):
            k22 = c["k22"][0]
            ax.axhline(1.0, color="k", lw=1, label="quantum bound")
            ax.plot(grid, c["binary"] / k22, lw=2, label="binary SPADE")
            ax.plot(grid, c["direct"] / k22, lw=2, label="direct imaging")
            ax.set_title(name)
            ax.set_xlabel(r"$\theta_2$ / width")
        axes[0].set_ylabel(r"$J_{22}/K_{22}$")
        axes[0].legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        print(f"\nwrote {args.plot}")


if __name__ == "__main__":
    main()
