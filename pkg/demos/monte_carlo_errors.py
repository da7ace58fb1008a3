"""Does a finite-photon estimator actually deliver the promised error?

Fisher information is an asymptotic promise.  These sweeps simulate the
maximum-likelihood separation estimate from L = 20 … 500 detected photons
and compare the achieved mean-square error against the Cramér-Rao bound
1/J₂₂(L).  Away from contact the ratio settles near 1 (the promise is kept
already at L ~ 100); at tiny separations the ratio dips far *below* 1 —
not magic, but the bias of an estimator pinned to θ̌₂ ≥ 0, the classic
superefficiency artifact to be aware of when reading such plots.

Run:  python3 demos/monte_carlo_errors.py [--trials 10000] [--plot out.png]
"""

import argparse

import numpy as np

from spadesim.montecarlo import Scheme, run_error_sweep

GRID = tuple(np.linspace(0.05, 2.0, 20))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--plot", metavar="PNG")
    args = ap.parse_args()

    sweeps = {}
    for scheme in (Scheme.HG_SPADE, Scheme.BINARY_SPADE):
        for L in (20, 100, 500):
            sweeps[(scheme, L)] = run_error_sweep(
                scheme, L, GRID, trials=args.trials, seed=args.seed)

    for scheme in (Scheme.HG_SPADE, Scheme.BINARY_SPADE):
        print(f"\n--- {scheme.value}: mse/crb over {args.trials} trials ---")
        print(f"{'theta2/sigma':>12} " + " ".join(f"{'L=' + str(L):>8}"
                                                  for L in (20, 100, 500)))
        for i in range(0, len(GRID), 3):
            ratios = [sweeps[(scheme, L)].mse[i] / sweeps[(scheme, L)].crb[i]
                      for L in (20, 100, 500)]
            print(f"{GRID[i]:12.2f} " + " ".join(f"{r:8.3f}" for r in ratios))

    print()
    print("Ratios near 1 mean the bound is tight and the estimator honest;")
    print("the sub-1 dips at the smallest separations come from the theta2 >= 0")
    print("constraint biasing the estimate toward zero, shrinking its variance")
    print("below the unbiased-estimator bound.")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 2, figsize=(9.5, 4), sharey=True)
        for ax, scheme in zip(axes, (Scheme.HG_SPADE, Scheme.BINARY_SPADE)):
            for L in (20, 100, 500):
                rep = sweeps[(scheme, L)]
                ax.plot(GRID, np.array(rep.mse) / np.array(rep.crb),
                        "o-", ms=3, label=f"L = {L}")
            ax.axhline(1.0, color="k", lw=1)
            ax.set_title(scheme.value)
            ax.set_xlabel(r"$\theta_2/\sigma$")
        axes[0].set_ylabel("mse / crb")
        axes[0].legend()
        fig.tight_layout()
        fig.savefig(args.plot, dpi=150)
        print(f"\nwrote {args.plot}")


if __name__ == "__main__":
    main()
