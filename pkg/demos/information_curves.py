"""Why two close point sources look unresolvable — and why they aren't.

An ideal camera records where each photon lands.  As two equally bright
sources approach each other, the Fisher information that the recorded
positions carry about their *separation* falls to zero quadratically — no
amount of pixels or photons rescues the estimate at contact.  The quantum
Cramér-Rao bound tells a different story: the information carried by the
optical field itself is a constant N/(4σ²), completely independent of the
separation.  The gap between those two curves is the entire subject of this
package.

Run:  python3 demos/information_curves.py [--plot out.png]
"""

import argparse

import numpy as np

from spadesim.fisher import direct_imaging_fisher
from spadesim.psf import GaussianPsf
from spadesim.qfi import OnePhotonModel, qfi_closed_form

SIGMA = 1.0


def compute(n_points=25):
    grid = np.linspace(0.0, 6.0, n_points) * SIGMA
    psf = GaussianPsf(SIGMA)
    rows = []
    for theta2 in grid:
        model = OnePhotonModel.symmetric(psf, float(theta2))
        k = qfi_closed_form(model)
        j = direct_imaging_fisher(model)
        rows.append((theta2, k.j11, k.j22, j.j11, j.j22))
    return np.array(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--plot", metavar="PNG", help="also draw the curves")
    args = ap.parse_args()

    rows = compute()
    norm = 0.25  # N/(4 sigma^2): the quantum separation information

    print("separation information, normalized to the quantum limit")
    print(f"{'theta2/sigma':>12} {'K11':>10} {'K22':>10} {'J11 direct':>12} {'J22 direct':>12}")
    for t2, k11, k22, j11, j22 in rows[::3]:
        print(f"{t2:12.2f} {k11 / (4 * norm):10.4f} {k22 / norm:10.4f} "
              f"{j11 / (4 * norm):12.4f} {j22 / norm:12.4f}")

    print()
    print("The J22 column collapses as theta2 -> 0 (direct imaging loses the")
    print("separation), while K22 stays pinned at 1: the field still carries")
    print("full information, the camera just fails to extract it.")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(rows[:, 0], rows[:, 2] / norm, label="quantum bound $K_{22}$", lw=2)
        ax.plot(rows[:, 0], rows[:, 4] / norm, label="direct imaging $J_{22}$", lw=2)
        ax.plot(rows[:, 0], rows[:, 1] / (4 * norm), "--",
                label="quantum bound $K_{11}$ (centroid)")
        ax.plot(rows[:, 0], rows[:, 3] / (4 * norm), "--",
                label="direct imaging $J_{11}$ (centroid)")
        ax.set_xlabel(r"separation $\theta_2/\sigma$")
        ax.set_ylabel("information (normalized)")
        ax.set_ylim(0, 1.1)
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        print(f"\nwrote {args.plot}")


if __name__ == "__main__":
    main()
