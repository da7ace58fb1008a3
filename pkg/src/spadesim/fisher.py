"""Classical Fisher information for every measurement scheme.

Two incoherent point sources of equal strength sit at X₁ = θ₁ − θ₂/2 and
X₂ = θ₁ + θ₂/2.  With mean detected photon number N, the schemes are:

* direct imaging — photon positions drawn from the intensity
  Λ(x) = [ψ²(x−X₁) + ψ²(x−X₂)]/2; information by quadrature of
  (∂Λ/∂θ_μ)(∂Λ/∂θ_ν)/Λ.
* Hermite-Gaussian SPADE — photon counting in the HG mode basis matched to a
  Gaussian PSF; mode q fires with Poisson weight P(q) = e^(−Q) Q^q/q!,
  Q = θ₂²/(16σ²).  The summed information equals N/(4σ²): the quantum limit,
  independent of separation.
* binary SPADE — only "fundamental mode vs. anything else" is resolved;
  closed form N/(4σ²) · Q e^(−Q)/(1 − e^(−Q)) for Gaussian, and a
  general-PSF route through the mode overlap factor Υ(θ₂) = A(θ₂)².
* misaligned variants — the demultiplexer axis sits at θ₁ + ξ·σ instead of
  the true centroid, splitting Q into Q₁, Q₂ for the two sources.
* hybrid — a 50-50 split sends half the light to direct imaging (which can
  estimate the centroid) and half to binary SPADE.

Separation information is computed with respect to θ₂ itself via the chain
rule ∂Q/∂θ₂; at θ₂ = 0, where that map is singular, the limit values are
substituted (N·Δk² for aligned SPADE schemes, exactly 0 for direct imaging
and for any misaligned scheme, whose outcome distributions are even in θ₂).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np
from scipy import stats

from .psf import (
    GaussianPsf,
    PointSpreadFunction,
    overlaps,
    quadrature,
    quadrature_panels,
)

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .qfi import OnePhotonModel

__all__ = [
    "Provenance",
    "FisherMatrix",
    "MisalignmentConfig",
    "NotGaussianPsf",
    "direct_imaging_fisher",
    "hg_spade_fisher",
    "binary_spade_fisher_gaussian",
    "binary_spade_fisher_general",
    "misaligned_hg_fisher",
    "misaligned_binary_fisher",
    "hybrid_fisher",
    "localization_bound",
]

#: Probabilities below this floor are treated as zero in (∂P)²/P sums and in
#: the direct-imaging integrand, to avoid 0/0 from underflowed tails.
_PROB_FLOOR = 1e-30

#: Poisson tail mass kept below this when truncating HG mode sums.
_TAIL = 1e-13

_QMAX_CAP = 512


class NotGaussianPsf(TypeError):
    """A Gaussian-specific closed form was asked of a non-Gaussian PSF."""


class Provenance(Enum):
    """Which measurement (or the quantum bound) an information matrix describes."""

    QUANTUM = "quantum"
    DIRECT = "direct"
    HG_SPADE = "hg-spade"
    BINARY_SPADE = "binary-spade"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class FisherMatrix:
    """Symmetric 2×2 information matrix over (θ₁, θ₂), units 1/length².

    ``photon_budget`` is the mean photon number N the matrix was computed
    at (or the conditioned count L in Monte Carlo contexts).  Schemes that
    carry no centroid information (SPADE variants) report j11 = 0.
    """

    j11: float
    j12: float
    j22: float
    provenance: Provenance
    photon_budget: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.j11, self.j12], [self.j12, self.j22]])


@dataclass(frozen=True)
class MisalignmentConfig:
    """Demultiplexer axis offset from the true centroid, in units of σ.

    The axis sits at θ₁ + sign·xi·σ.  xi = 0 is perfect alignment.
    """

    xi: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if self.xi < 0 or not math.isfinite(self.xi):
            raise ValueError(f"xi must be nonnegative and finite, got {self.xi}")
        if self.sign not in (-1, 1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    def offset(self, sigma: float) -> float:
        return self.sign * self.xi * sigma


# =============================================================================
# Direct imaging
# =============================================================================


def direct_imaging_fisher(model: "OnePhotonModel") -> FisherMatrix:
    """Information of ideal continuum photon-position measurement.

    J_{μν} = N ∫ (∂Λ/∂θ_μ)(∂Λ/∂θ_ν)/Λ dx with analytic derivatives of
    Λ(x) = [ψ²(x−X₁) + ψ²(x−X₂)]/2.  The integrand is zeroed where
    Λ < 1e-30 (underflowed tails and the isolated joint zeros of a sinc
    profile, where the true integrand is bounded anyway); truncation and
    floor both strictly under-count information, so quantum bounds are
    never spuriously violated.
    """
    psf = model.psf
    n = model.n_photons
    x1, x2 = model.X1, model.X2
    r = psf.support_halfwidth
    a, b = x1 - r, x2 + r
    pts = psf.breakpoints(a, b, shifts=(x1, x2))
    tol = psf.quad_tol()

    def ratio_integrand(select):
        def integrand(x):
            x = np.asarray(x, dtype=float)
            p1, p2 = psf.evaluate(x - x1), psf.evaluate(x - x2)
            d1, d2 = psf.derivative(x - x1), psf.derivative(x - x2)
            lam = 0.5 * (p1 * p1 + p2 * p2)
            g1 = -(p1 * d1 + p2 * d2)          # ∂Λ/∂θ₁
            g2 = 0.5 * (p1 * d1 - p2 * d2)     # ∂Λ/∂θ₂
            num = select(g1, g2)
            ok = lam >= _PROB_FLOOR
            out = np.divide(num, lam, out=np.zeros_like(lam), where=ok)
            return out if out.ndim else float(out)
        return integrand

    j11_integrand = ratio_integrand(lambda g1, g2: g1 * g1)
    j22_integrand = ratio_integrand(lambda g1, g2: g2 * g2)
    j12_integrand = ratio_integrand(lambda g1, g2: g1 * g2)

    if pts is not None and pts.size > 32:
        # Dense breakpoint set = slowly decaying oscillatory profile (sinc):
        # globally adaptive Gauss-Kronrod stalls on roundoff there, so
        # integrate panel-by-panel between the zeros instead.
        edges = np.concatenate([[a], pts, [b]])
        j11 = n * quadrature_panels(j11_integrand, edges, tol)
        j22 = n * quadrature_panels(j22_integrand, edges, tol)
        integrate_j12 = lambda: n * quadrature_panels(j12_integrand, edges, tol)
    else:
        j11 = n * quadrature(j11_integrand, a, b, tol, points=pts)
        j22 = n * quadrature(j22_integrand, a, b, tol, points=pts)
        integrate_j12 = lambda: n * quadrature(j12_integrand, a, b, tol, points=pts)

    if psf.is_even():
        # For an even ψ and equal-strength sources, reflection about the
        # centroid swaps the two sources, flipping ∂Λ/∂θ₁ and preserving
        # ∂Λ/∂θ₂: the cross integrand is odd and J₁₂ vanishes identically.
        # (Quadrature would have to certify that cancellation over slowly
        # decaying oscillatory tails, which it cannot for a sinc profile.)
        j12 = 0.0
    else:
        j12 = integrate_j12()
    return FisherMatrix(j11, j12, j22, Provenance.DIRECT, n)


# =============================================================================
# Hermite-Gaussian SPADE
# =============================================================================


def _require_gaussian(psf: PointSpreadFunction, what: str) -> GaussianPsf:
    if not isinstance(psf, GaussianPsf):
        raise NotGaussianPsf(f"{what} requires a Gaussian PSF, got kind={psf.kind!r}")
    return psf


def _auto_qmax(*qs: float) -> int:
    """Smallest mode cutoff keeping the Poisson tail below _TAIL (≤ 512)."""
    qbig = max(qs)
    if qbig <= 0:
        return 1
    k = int(stats.poisson.isf(_TAIL, qbig)) + 2
    return min(max(k, 1), _QMAX_CAP)


def hg_spade_fisher(model: "OnePhotonModel", q_max: int | None = None) -> FisherMatrix:
    """Separation information of full Hermite-Gaussian mode sorting.

    Computed as the actual mode sum N Σ_q (∂P/∂θ₂)²/P(q) truncated where the
    Poisson tail drops below 1e-13 (q_max ≤ 512 unless overridden); the sum
    telescopes analytically to N/(4σ²) for every θ₂.  j11 is reported as 0:
    the mode counts carry no centroid information.
    """
    psf = _require_gaussian(model.psf, "hg_spade_fisher")
    n, s2 = model.n_photons, psf.sigma**2
    q_big = model.theta2**2 / (16.0 * s2)
    limit = n / (4.0 * s2)
    if q_big < 1e-25:
        # Q → 0: every photon lands in the fundamental mode, but the
        # information per unit θ₂ stays finite; substitute the limit.
        return FisherMatrix(0.0, 0.0, limit, Provenance.HG_SPADE, n)
    if q_max is None:
        q_max = _auto_qmax(q_big)
    dq = model.theta2 / (8.0 * s2)
    q = np.arange(q_max + 1)
    pmf = stats.poisson.pmf(q, q_big)
    pmf_prev = np.concatenate(([0.0], pmf[:-1]))  # P(q−1), with P(−1) = 0
    dp = (pmf_prev - pmf) * dq
    keep = pmf >= _PROB_FLOOR
    j22 = n * float(np.sum(dp[keep] ** 2 / pmf[keep]))
    return FisherMatrix(0.0, 0.0, j22, Provenance.HG_SPADE, n)


# =============================================================================
# Binary SPADE
# =============================================================================


def binary_spade_fisher_gaussian(model: "OnePhotonModel") -> FisherMatrix:
    """Closed form N/(4σ²) · Q e^(−Q)/(1 − e^(−Q)) for a Gaussian PSF.

    The removable singularity at Q = 0 takes its limit value N/(4σ²) — the
    full quantum information survives the two-outcome coarse-graining at
    zero separation.
    """
    psf = _require_gaussian(model.psf, "binary_spade_fisher_gaussian")
    n, s2 = model.n_photons, psf.sigma**2
    q = model.theta2**2 / (16.0 * s2)
    if q < 1e-25:
        factor = 1.0
    else:
        factor = q * math.exp(-q) / -math.expm1(-q)
    return FisherMatrix(0.0, 0.0, n / (4.0 * s2) * factor, Provenance.BINARY_SPADE, n)


def binary_spade_fisher_general(
    psf: PointSpreadFunction, theta2: float, n_photons: float
) -> FisherMatrix:
    """Binary-SPADE separation information for an arbitrary PSF.

    Works through the fundamental-mode coupling amplitude
    A(θ₂) = ∫ψ(x)ψ(x+θ₂/2)dx, so that Υ = A² and

        N (∂Υ/∂θ₂)² / (Υ(1−Υ))  ≡  4N A'² / (1 − A²).

    The amplitude form removes the spurious 0/0 at interior zeros of Υ
    (e.g. a sinc PSF at θ₂ = 2W), where the information is finite and the
    Υ-ratio form is indeterminate.  Both A and A' = γ(θ₂/2)/2 come from the
    overlap integrals (closed form / k-space / quadrature per PSF kind), so
    no finite-difference noise enters.  At θ₂ = 0 the limit N·Δk² is
    substituted.
    """
    if theta2 < 0:
        raise ValueError(f"theta2 must be nonnegative, got {theta2}")
    o_half = overlaps(psf, 0.5 * theta2)
    amp = o_half.delta
    d_amp = 0.5 * o_half.gamma  # dA/dθ₂ by the chain rule on the lag θ₂/2
    denom = (1.0 - amp) * (1.0 + amp)
    if theta2 == 0.0 or denom <= 0.0:
        dk2 = overlaps(psf, 0.0).dk2
        return FisherMatrix(0.0, 0.0, n_photons * dk2, Provenance.BINARY_SPADE,
                            n_photons)
    j22 = 4.0 * n_photons * d_amp * d_amp / denom
    return FisherMatrix(0.0, 0.0, j22, Provenance.BINARY_SPADE, n_photons)


# =============================================================================
# Misaligned demultiplexing
# =============================================================================


def _split_q(model: "OnePhotonModel", mis: MisalignmentConfig):
    """Per-source Poisson parameters and their θ₂-derivatives under offset d.

    With the device axis at θ₁ + d the two sources sit at displacements
    d ± θ₂/2 from it, giving Q₁ = (d + θ₂/2)²/(4σ²), Q₂ = (d − θ₂/2)²/(4σ²).
    """
    sigma = model.psf.sigma
    s2 = sigma**2
    d = mis.offset(sigma)
    u1 = d + 0.5 * model.theta2
    u2 = d - 0.5 * model.theta2
    q1, q2 = u1 * u1 / (4.0 * s2), u2 * u2 / (4.0 * s2)
    dq1, dq2 = u1 / (4.0 * s2), -u2 / (4.0 * s2)
    return q1, q2, dq1, dq2


def misaligned_hg_fisher(model: "OnePhotonModel", mis: MisalignmentConfig) -> FisherMatrix:
    """HG-SPADE separation information with a misaligned demultiplexer.

    Mode q fires with P(q) = [pois(q; Q₁) + pois(q; Q₂)]/2; the information
    sum runs over modes until both Poisson tails are negligible, skipping
    terms with P(q) < 1e-30.
    """
    psf = _require_gaussian(model.psf, "misaligned_hg_fisher")
    n = model.n_photons
    q1, q2, dq1, dq2 = _split_q(model, mis)
    if max(q1, q2) < 1e-25:
        # Aligned, zero separation: same limit as the aligned scheme.
        return FisherMatrix(0.0, 0.0, n / (4.0 * psf.sigma**2),
                            Provenance.HG_SPADE, n)
    q_max = _auto_qmax(q1, q2)
    q = np.arange(q_max + 1)
    pmf1, pmf2 = stats.poisson.pmf(q, q1), stats.poisson.pmf(q, q2)
    prev1 = np.concatenate(([0.0], pmf1[:-1]))
    prev2 = np.concatenate(([0.0], pmf2[:-1]))
    p = 0.5 * (pmf1 + pmf2)
    dp = 0.5 * ((prev1 - pmf1) * dq1 + (prev2 - pmf2) * dq2)
    keep = p >= _PROB_FLOOR
    j22 = n * float(np.sum(dp[keep] ** 2 / p[keep]))
    return FisherMatrix(0.0, 0.0, j22, Provenance.HG_SPADE, n)


def misaligned_binary_fisher(
    model: "OnePhotonModel", mis: MisalignmentConfig
) -> FisherMatrix:
    """Binary-SPADE separation information with a misaligned demultiplexer.

    Two-outcome model with fundamental-mode probability
    p₀ = [e^(−Q₁) + e^(−Q₂)]/2:  J₂₂ = N (∂p₀/∂θ₂)² / (p₀(1−p₀)).
    1 − p₀ is assembled from expm1 so the near-aligned regime keeps full
    precision.  At θ₂ = 0 under misalignment the θ₂-derivative vanishes by
    the source-relabeling symmetry and the information is exactly zero.
    """
    psf = _require_gaussian(model.psf, "misaligned_binary_fisher")
    n = model.n_photons
    q1, q2, dq1, dq2 = _split_q(model, mis)
    if max(q1, q2) < 1e-25:
        return FisherMatrix(0.0, 0.0, n / (4.0 * psf.sigma**2),
                            Provenance.BINARY_SPADE, n)
    e1, e2 = math.exp(-q1), math.exp(-q2)
    p0 = 0.5 * (e1 + e2)
    one_minus_p0 = -0.5 * (math.expm1(-q1) + math.expm1(-q2))
    dp0 = -0.5 * (e1 * dq1 + e2 * dq2)
    j22 = n * dp0 * dp0 / (p0 * one_minus_p0)
    return FisherMatrix(0.0, 0.0, j22, Provenance.BINARY_SPADE, n)


# =============================================================================
# Hybrid scheme and error bounds
# =============================================================================


def hybrid_fisher(
    model: "OnePhotonModel", mis: MisalignmentConfig | None = None
) -> FisherMatrix:
    """Information of a fixed 50-50 split: direct imaging + binary SPADE.

    Each arm sees half the photons, so the hybrid matrix is half the direct
    matrix plus half the binary j22; the result stays diagonal.  The binary
    arm is aligned by default; pass ``mis`` to model residual misalignment
    driven by the imaging arm's centroid estimate (Gaussian PSF only).
    """
    direct = direct_imaging_fisher(model)
    if mis is None or mis.xi == 0.0:
        if isinstance(model.psf, GaussianPsf):
            binary = binary_spade_fisher_gaussian(model)
        else:
            binary = binary_spade_fisher_general(model.psf, model.theta2,
                                                 model.n_photons)
    else:
        binary = misaligned_binary_fisher(model, mis)
    return FisherMatrix(
        0.5 * direct.j11,
        0.0,
        0.5 * direct.j22 + 0.5 * binary.j22,
        Provenance.HYBRID,
        model.n_photons,
    )


def localization_bound(fm: FisherMatrix) -> float:
    """Mean-square error bound 1/j11 + 1/(4·j22) for locating both sources.

    The average over the two source positions of the Cramér-Rao bounds on
    X₁, X₂ expressed through centroid and separation information.  A zero
    information entry yields an infinite bound (a legal value: direct
    imaging at θ₂ = 0), never an error.
    """
    if fm.j11 < 0 or fm.j22 < 0:
        raise ValueError("information entries must be nonnegative")
    t1 = math.inf if fm.j11 == 0 else 1.0 / fm.j11
    t2 = math.inf if fm.j22 == 0 else 0.25 / fm.j22
    return t1 + t2
