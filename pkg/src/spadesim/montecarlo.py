"""Monte Carlo photon-count simulation and maximum-likelihood estimation.

Simulates SPADE and binary-SPADE records conditioned on L detected photons,
applies the closed-form maximum-likelihood estimators of the separation, and
aggregates mean-square errors over many trials, alongside the matching
Cramér-Rao bounds with N replaced by L.

Sampling uses sufficient statistics where one exists:

* aligned Hermite-Gaussian SPADE — the statistic Σ_q q·m_q is Poisson with
  mean L·Q, Q = θ₂²/(16σ²), so one Poisson draw per trial suffices;
* binary SPADE — m₀ ~ Binomial(L, p₀) with p₀ = e^(−Q) aligned and
  p₀ = [e^(−Q₁)+e^(−Q₂)]/2 under misalignment;
* misaligned HG SPADE — no scalar sufficient statistic exists, so the full
  per-mode multinomial record is drawn from the mixture pmf.

Estimators (always the aligned-model inverses, even on misaligned data):
θ̌₂ = 4σ√(stat/L) for HG and θ̌₂ = 4σ√(−ln(m₀/L)) for binary, with the
m₀ = 0 records regularized to θ̌₂ = 2σ (the top of the separation range
studied here).

Reproducibility: streams are counter-based (Philox) and keyed by
(seed, scheme family, L, grid index), so results are bit-identical however
grid points are scheduled, and the misaligned binary sweep at ξ = 0 draws
the very same samples as the aligned one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import stats

from .fisher import MisalignmentConfig, _auto_qmax, misaligned_binary_fisher
from .psf import GaussianPsf
from .qfi import OnePhotonModel

__all__ = [
    "ZeroPhotons",
    "Scheme",
    "ModeCountRecord",
    "EstimationReport",
    "sample_hg_sufficient",
    "sample_mode_counts",
    "sample_binary",
    "mle_hg",
    "mle_binary",
    "run_error_sweep",
    "write_report_csv",
]

#: Fallback estimate used when a record carries no usable information
#: (L = 0, or m₀ = 0 for binary SPADE): the top of the separation range.
_FALLBACK_SIGMA_UNITS = 2.0


class ZeroPhotons(RuntimeError):
    """An estimator was asked to invert a record with L = 0 photons."""


class Scheme(Enum):
    """Measurement scheme of a Monte Carlo sweep."""

    HG_SPADE = "hg_spade"
    BINARY_SPADE = "binary_spade"
    MISALIGNED_BINARY = "misaligned_binary"


#: RNG stream family: aligned and misaligned variants of the same detector
#: share a family so that ξ = 0 reproduces the aligned draws bit for bit.
_STREAM_FAMILY = {
    Scheme.HG_SPADE: 1,
    Scheme.BINARY_SPADE: 2,
    Scheme.MISALIGNED_BINARY: 2,
}


@dataclass(frozen=True)
class ModeCountRecord:
    """Photon counts of one detection record.

    ``counts`` maps mode index q to the number of photons m_q seen there
    (a binary record uses {0: m₀, 1: L − m₀}).  Counts must be nonnegative
    and sum to L.
    """

    L: int
    counts: dict

    def __post_init__(self):
        if self.L < 0:
            raise ValueError(f"L must be nonnegative, got {self.L}")
        if any(m < 0 for m in self.counts.values()):
            raise ValueError("mode counts must be nonnegative")
        total = sum(self.counts.values())
        if total != self.L:
            raise ValueError(f"counts sum to {total}, expected L={self.L}")

    def statistic(self) -> int:
        """Σ_q q·m_q, the sufficient statistic of aligned HG SPADE."""
        return int(sum(q * m for q, m in self.counts.items()))


@dataclass(frozen=True)
class EstimationReport:
    """Aggregated result of one error sweep.

    ``mse[i]`` is the mean of (θ̌₂ − θ₂[i])² over ``trials`` records at the
    true separation ``theta2_grid[i]``; ``crb[i]`` is the matching
    Cramér-Rao bound conditioned on L photons (infinite where the
    information vanishes).
    """

    scheme: Scheme
    L: int
    theta2_grid: tuple
    mse: tuple
    trials: int
    seed: int
    crb: tuple
    xi: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (len(self.theta2_grid) == len(self.mse) == len(self.crb)):
            raise ValueError("grid, mse and crb must have equal lengths")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if any(m < 0 for m in self.mse):
            raise ValueError("mse entries must be nonnegative")


# =============================================================================
# Samplers
# =============================================================================


def sample_hg_sufficient(L: int, Q: float, rng) -> int:
    """One draw of the HG sufficient statistic Σ_q q·m_q ~ Poisson(L·Q)."""
    if L < 0:
        raise ValueError(f"L must be nonnegative, got {L}")
    if Q < 0:
        raise ValueError(f"Q must be nonnegative, got {Q}")
    return int(rng.poisson(L * Q))


def sample_mode_counts(L: int, probs, rng) -> ModeCountRecord:
    """Draw the full per-mode record m ~ Multinomial(L, probs).

    ``probs`` lists the per-photon mode probabilities for q = 0, 1, …; any
    residual tail mass is lumped into one extra overflow mode.  This is the
    general sampler backing misaligned HG sweeps and the distributional
    cross-check of the sufficient-statistic shortcut.
    """
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0):
        raise ValueError("mode probabilities must be nonnegative")
    resid = 1.0 - p.sum()
    if resid < -1e-9:
        raise ValueError(f"mode probabilities sum to {p.sum()}, above 1")
    draws = rng.multinomial(L, np.append(p, max(resid, 0.0)))
    return ModeCountRecord(L=L, counts={q: int(m) for q, m in enumerate(draws)})


def sample_binary(L: int, p0: float, rng):
    """One binary record: (m₀, L − m₀) with m₀ ~ Binomial(L, p₀)."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p0 must lie in [0, 1], got {p0}")
    m0 = int(rng.binomial(L, p0))
    return m0, L - m0


# =============================================================================
# Maximum-likelihood estimators
# =============================================================================


def mle_hg(stat: int, L: int, sigma: float) -> float:
    """θ̌₂ = 4σ√(stat/L) from the HG sufficient statistic."""
    if L == 0:
        raise ZeroPhotons("cannot invert an HG record with zero photons")
    return 4.0 * sigma * math.sqrt(stat / L)


def mle_binary(m0: int, L: int, sigma: float) -> float:
    """θ̌₂ = 4σ√(−ln(m₀/L)), regularized to 2σ when m₀ = 0.

    The aligned-model inverse is applied regardless of any misalignment in
    the data — robustness of that mismatched estimator is exactly what the
    misaligned sweeps probe.
    """
    if L == 0:
        raise ZeroPhotons("cannot invert a binary record with zero photons")
    if m0 == 0:
        return _FALLBACK_SIGMA_UNITS * sigma
    return 4.0 * sigma * math.sqrt(-math.log(m0 / L))


# =============================================================================
# Error sweep
# =============================================================================


def _stream(seed: int, scheme: Scheme, L: int, grid_index: int):
    ss = np.random.SeedSequence(
        entropy=int(seed),
        spawn_key=(_STREAM_FAMILY[scheme], int(L), int(grid_index)),
    )
    return np.random.Generator(np.random.Philox(ss))


def _split_mode_q(theta2: float, sigma: float, xi: float):
    """(Q₁, Q₂) of the two sources as seen by a demultiplexer offset ξσ."""
    d = xi * sigma
    s2 = 4.0 * sigma * sigma
    return (d + 0.5 * theta2) ** 2 / s2, (d - 0.5 * theta2) ** 2 / s2


def _binary_p0(theta2: float, sigma: float, xi: float) -> float:
    q1, q2 = _split_mode_q(theta2, sigma, xi)
    return 0.5 * (math.exp(-q1) + math.exp(-q2))


def _hg_estimates(stat, L, sigma):
    return 4.0 * sigma * np.sqrt(stat / L)


def _binary_estimates(m0, L, sigma):
    frac = np.where(m0 > 0, m0, 1) / L
    est = 4.0 * sigma * np.sqrt(-np.log(frac))
    return np.where(m0 > 0, est, _FALLBACK_SIGMA_UNITS * sigma)


def _binary_crb(theta2: float, sigma: float, L: int) -> float:
    q = theta2 * theta2 / (16.0 * sigma * sigma)
    factor = math.expm1(q) / q if q > 0 else 1.0   # (1−e^{−Q})/(Q e^{−Q})
    return 4.0 * sigma * sigma / L * factor


def _misaligned_binary_crb(theta2: float, sigma: float, L: int, xi: float) -> float:
    model = OnePhotonModel.symmetric(GaussianPsf(sigma), theta2, n_photons=float(L))
    j22 = misaligned_binary_fisher(model, MisalignmentConfig(xi=xi)).j22
    return 1.0 / j22 if j22 > 0 else math.inf


def run_error_sweep(
    scheme: Scheme,
    L: int,
    theta2_grid,
    trials: int,
    xi: float = 0.0,
    seed: int = 0,
    sigma: float = 1.0,
    random_budget: bool = False,
) -> EstimationReport:
    """Simulate ``trials`` records per grid point and aggregate errors.

    Parameters
    ----------
    scheme : Scheme
        Detector and sampling model.  ``HG_SPADE`` with ``xi > 0`` samples
        the full multinomial mode record (no sufficient statistic survives
        misalignment); ``MISALIGNED_BINARY`` is the binary detector with the
        offset applied, and at ``xi = 0`` reproduces ``BINARY_SPADE`` draws
        exactly.
    L : int
        Detected photon count each record is conditioned on.
    theta2_grid : array-like
        True separations, one sweep point each.
    trials : int
        Records simulated per grid point.
    xi : float
        Demultiplexer centroid offset in units of sigma.
    seed : int
        Entropy for the counter-based streams; everything else derives
        deterministically from it.
    sigma : float
        Gaussian PSF width (all schemes here are Gaussian-specific).
    random_budget : bool
        When True, L is the mean of a Poisson-distributed per-trial photon
        budget instead of a fixed count; zero-photon records fall back to
        the constant 2σ.  Reported bounds still use the mean budget.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if L < 0 or int(L) != L:
        raise ValueError(f"L must be a nonnegative integer, got {L}")
    if xi < 0:
        raise ValueError(f"xi must be nonnegative, got {xi}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if scheme is Scheme.BINARY_SPADE and xi != 0.0:
        raise ValueError("use Scheme.MISALIGNED_BINARY for a binary sweep with xi > 0")
    grid = [float(t) for t in np.asarray(theta2_grid, dtype=float)]
    if any(t < 0 for t in grid):
        raise ValueError("theta2 grid entries must be nonnegative")
    L = int(L)

    mse = []
    crb = []
    fallback = _FALLBACK_SIGMA_UNITS * sigma
    for idx, t2 in enumerate(grid):
        rng = _stream(seed, scheme, L, idx)
        budgets = rng.poisson(L, size=trials) if random_budget else np.full(trials, L)
        live = budgets > 0

        if scheme is Scheme.HG_SPADE and xi == 0.0:
            q = t2 * t2 / (16.0 * sigma * sigma)
            stat = rng.poisson(budgets * q)
            with np.errstate(invalid="ignore", divide="ignore"):
                est = np.where(live, _hg_estimates(stat, np.where(live, budgets, 1), sigma), fallback)
        elif scheme is Scheme.HG_SPADE:
            est = _misaligned_hg_estimates(budgets, t2, sigma, xi, rng, fallback)
        else:
            p0 = _binary_p0(t2, sigma, xi if scheme is Scheme.MISALIGNED_BINARY else 0.0)
            m0 = rng.binomial(budgets, p0)
            est = np.where(live, _binary_estimates(m0, np.where(live, budgets, 1), sigma), fallback)

        mse.append(float(np.mean((est - t2) ** 2)))
        if scheme is Scheme.HG_SPADE:
            crb.append(4.0 * sigma * sigma / L if L else math.inf)
        elif scheme is Scheme.BINARY_SPADE:
            crb.append(_binary_crb(t2, sigma, L) if L else math.inf)
        else:
            crb.append(_misaligned_binary_crb(t2, sigma, L, xi) if L else math.inf)

    return EstimationReport(
        scheme=scheme,
        L=L,
        theta2_grid=tuple(grid),
        mse=tuple(mse),
        trials=int(trials),
        seed=int(seed),
        crb=tuple(crb),
        xi=float(xi),
        sigma=float(sigma),
    )


def _misaligned_hg_estimates(budgets, t2, sigma, xi, rng, fallback):
    """Estimates from full multinomial records of the misaligned mixture."""
    q1, q2 = _split_mode_q(t2, sigma, xi)
    q_max = _auto_qmax(q1, q2)
    qs = np.arange(q_max + 1)
    pmf = 0.5 * (stats.poisson.pmf(qs, q1) + stats.poisson.pmf(qs, q2))
    resid = max(1.0 - float(pmf.sum()), 0.0)
    pvals = np.append(pmf, resid)           # overflow bucket at q_max + 1
    qvals = np.append(qs, q_max + 1).astype(float)

    budgets = np.asarray(budgets)
    if np.all(budgets == budgets[0]):
        counts = rng.multinomial(int(budgets[0]), pvals, size=budgets.size)
    else:
        counts = np.stack([rng.multinomial(int(n), pvals) for n in budgets])
    stat = counts @ qvals
    live = budgets > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        est = 4.0 * sigma * np.sqrt(stat / np.where(live, budgets, 1))
    return np.where(live, est, fallback)


# =============================================================================
# Serialization
# =============================================================================


def write_report_csv(report: EstimationReport, path, metadata: dict | None = None):
    """Write a report as CSV plus a JSON sidecar.

    The CSV carries '#' metadata lines (scalar ``metadata`` entries are
    echoed there), a header row, then one row per grid point with columns
    theta2, mse, crb, trials, L, xi, scheme, seed.  Floats are rendered with
    repr so identical reports produce byte-identical files.  The sidecar
    ``<path>.json`` holds the full report and the complete ``metadata``
    (e.g. the run configuration); non-finite bounds are written as the
    string "inf".
    """
    path = Path(path)
    lines = [
        "# columns: theta2, mse, crb, trials, L, xi, scheme, seed",
        f"# scheme = {report.scheme.value}; L = {report.L}; trials = {report.trials}; "
        f"xi = {report.xi!r}; sigma = {report.sigma!r}; seed = {report.seed}",
    ]
    for key, value in (metadata or {}).items():
        if isinstance(value, (str, int, float)):
            lines.append(f"# {key} = {value}")
    lines.append("theta2,mse,crb,trials,L,xi,scheme,seed")
    for t2, m, c in zip(report.theta2_grid, report.mse, report.crb):
        lines.append(
            f"{t2!r},{m!r},{c!r},{report.trials},{report.L},{report.xi!r},"
            f"{report.scheme.value},{report.seed}"
        )
    path.write_text("\n".join(lines) + "\n")

    def scrub(x):
        if isinstance(x, float) and not math.isfinite(x):
            return repr(x)
        return x

    sidecar = {
        "scheme": report.scheme.value,
        "L": report.L,
        "theta2_grid": list(report.theta2_grid),
        "mse": list(report.mse),
        "crb": [scrub(c) for c in report.crb],
        "trials": report.trials,
        "seed": report.seed,
        "xi": report.xi,
        "sigma": report.sigma,
    }
    if metadata:
        sidecar["metadata"] = metadata
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
