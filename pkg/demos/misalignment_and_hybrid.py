"""What alignment error costs, and how a 50-50 hybrid hedges against it.

The mode sorter's advantage assumes its optical axis sits exactly on the
centroid of the pair — which in practice must itself be estimated.  Here we
offset the sorter axis by ξσ and watch the separation information of both
demultiplexed schemes degrade; at contact a misaligned sorter is exactly
blind (the two relabeled sources produce identical statistics).

A pragmatic response is to split the light: half to a camera (which locates
the centroid fine), half to the sorter.  Comparing the resulting two-source
localization error bound with all-camera operation shows the split wins
precisely in the sub-Rayleigh regime and concedes a factor ≲ 2 far apart.

Run:  python3 demos/misalignment_and_hybrid.py [--plot out.png]
"""

import argparse

import numpy as np

from spadesim.fisher import (
    MisalignmentConfig,
    direct_imaging_fisher,
    hybrid_fisher,
    localization_bound,
    misaligned_binary_fisher,
    misaligned_hg_fisher,
)
from spadesim.psf import GaussianPsf
from spadesim.qfi import OnePhotonModel

SIGMA = 1.0
PSF = GaussianPsf(SIGMA)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--plot", metavar="PNG")
    args = ap.parse_args()

    # --- information vs misalignment at a fixed sub-Rayleigh separation ----
    theta2 = 0.5 * SIGMA
    model = OnePhotonModel.symmetric(PSF, theta2)
    xis = np.array([0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5])
    hg = [misaligned_hg_fisher(model, MisalignmentConfig(float(x))).j22 for x in xis]
    bi = [misaligned_binary_fisher(model, MisalignmentConfig(float(x))).j22
          for x in xis]
    direct = direct_imaging_fisher(model).j22

    print(f"separation information at theta2 = {theta2}σ (quantum limit 0.25)")
    print(f"{'xi':>6} {'HG sorter':>10} {'binary':>10}")
    for x, h, b in zip(xis, hg, bi):
        print(f"{x:6.2f} {h:10.4f} {b:10.4f}")
    print(f"direct imaging at the same separation: {direct:.4f}")
    print("Misalignment eats the advantage smoothly; even xi = 0.1 still")
    print(f"beats the camera by {min(hg[2], bi[2]) / direct:.0f}x here.\n")

    # --- localization bound: hybrid vs all-camera ---------------------------
    grid = np.linspace(0.05, 5.0, 30) * SIGMA
    hyb, cam = [], []
    for t2 in grid:
        m = OnePhotonModel.symmetric(PSF, float(t2))
        hyb.append(localization_bound(hybrid_fisher(m)))
        cam.append(localization_bound(direct_imaging_fisher(m)))
    hyb, cam = np.array(hyb), np.array(cam)

    cross = grid[np.argmax(hyb >= cam)]
    print("two-source localization bound, sigma^2/N units")
    print(f"{'theta2/sigma':>12} {'hybrid':>10} {'all-camera':>11}")
    for i in range(0, len(grid), 4):
        print(f"{grid[i]:12.2f} {hyb[i]:10.3f} {cam[i]:11.3f}")
    print(f"\nThe hybrid bound is lower for separations below ~{cross:.1f}σ and")
    print("modestly higher beyond — the price of diverting photons from an")
    print("already-resolved pair.")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 2, figsize=(9.5, 4))
        axes[0].plot(xis, hg, "o-", label="HG sorter")
        axes[0].plot(xis, bi, "s-", label="binary")
        axes[0].axhline(direct, color="k", ls=":", label="direct imaging")
        axes[0].set_xlabel(r"misalignment $\xi$ [$\sigma$]")
        axes[0].set_ylabel(r"$J_{22}$ at $\theta_2 = 0.5\sigma$")
        axes[0].legend()
        axes[1].semilogy(grid, hyb, lw=2, label="hybrid 50-50")
        axes[1].semilogy(grid, cam, lw=2, label="all camera")
        axes[1].set_xlabel(r"separation $\theta_2/\sigma$")
        axes[1].set_ylabel(r"localization bound [$\sigma^2/N$]")
        axes[1].legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        print(f"\nwrote {args.plot}")


if __name__ == "__main__":
    main()
