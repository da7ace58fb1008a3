"""Quantum Fisher information for the two-source one-photon model.

In the weak-source limit (mean photon number ε per coherence interval,
ε ≪ 1) the single-photon state on the image plane is an equal mixture of
the two displaced PSF modes, ρ₁ = (|ψ₁⟩⟨ψ₁| + |ψ₂⟩⟨ψ₂|)/2, and over M
intervals the total information is N = M·ε times the per-photon value.

The matrix 𝒦 over (θ₁, θ₂) = (centroid, separation) is computed two
independent ways:

* :func:`qfi_closed_form` — the scalar result
  𝒦₁₁ = 4N(Δk² − γ²), 𝒦₂₂ = N·Δk², 𝒦₁₂ = 0, straight from the overlap
  integrals.  Note 𝒦₂₂ is separation-independent: the quantum limit knows
  no analogue of Rayleigh's curse.
* :func:`sld_decompose` + :func:`qfi_from_sld` — a from-scratch symmetric
  logarithmic derivative construction on the 4-dimensional subspace spanned
  by the two modes and their derivatives, expressed in an explicit
  orthonormal basis e₁…e₄ parameterized by the Gram scalars
  (δ, γ, Δk², b², c₃, c₄).  ρ₁ is diagonal there with eigenvalues
  D = ((1−δ)/2, (1+δ)/2, 0, 0) and
  𝒦_{μν} = N Σ_k D_k (ℒ_μ ℒ_ν)_{kk}.

The two routes share only the overlap scalars, so their agreement (at the
1e-8 level on the default grids) validates the SLD algebra end to end and
is used as the acceptance oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fisher import FisherMatrix, Provenance
from .psf import PointSpreadFunction, overlaps

__all__ = [
    "DegenerateBasis",
    "OnePhotonModel",
    "SldDecomposition",
    "qfi_closed_form",
    "sld_decompose",
    "qfi_from_sld",
]

#: Weak-source ceiling: mean photons per coherence interval must not exceed
#: this for the one-photon (first order in ε) model to hold.
_EPSILON_MAX = 0.1


class DegenerateBasis(ValueError):
    """The four-vector basis underlying the SLD construction collapsed.

    Happens at θ₂ = 0 (the two modes coincide, δ = 1) or when rounding
    drives a squared basis norm (c₃², c₄²) genuinely negative.
    """


@dataclass(frozen=True)
class OnePhotonModel:
    """Two equal-strength incoherent sources imaged by one PSF.

    Parameters
    ----------
    psf : PointSpreadFunction
        The (real, unit-norm) imaging amplitude profile.
    X1, X2 : float
        Source positions, X1 ≤ X2.  Centroid θ₁ = (X1+X2)/2 and separation
        θ₂ = X2 − X1 are the estimation parameters.
    epsilon : float
        Mean photon number per coherence interval; must lie in (0, 0.1] so
        multi-photon terms (O(ε²)) stay negligible.
    M : int
        Number of coherence intervals.  N = M·epsilon is the mean detected
        photon number all informations scale with.
    """

    psf: PointSpreadFunction
    X1: float
    X2: float
    epsilon: float = 0.1
    M: int = 10

    def __post_init__(self):
        if not isinstance(self.psf, PointSpreadFunction):
            raise TypeError(f"psf must be a PointSpreadFunction, got {type(self.psf)}")
        if not (math.isfinite(self.X1) and math.isfinite(self.X2)):
            raise ValueError("source positions must be finite")
        if self.X2 < self.X1:
            raise ValueError(f"require X1 <= X2, got X1={self.X1}, X2={self.X2}")
        if not (0.0 < self.epsilon <= _EPSILON_MAX):
            raise ValueError(
                f"epsilon must lie in (0, {_EPSILON_MAX}] (weak-source regime), "
                f"got {self.epsilon}"
            )
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M}")

    @property
    def theta1(self) -> float:
        return 0.5 * (self.X1 + self.X2)

    @property
    def theta2(self) -> float:
        return self.X2 - self.X1

    @property
    def n_photons(self) -> float:
        """Mean detected photon number N = M·ε."""
        return self.M * self.epsilon

    @classmethod
    def symmetric(
        cls, psf: PointSpreadFunction, theta2: float, n_photons: float = 1.0
    ) -> "OnePhotonModel":
        """Sources at ∓θ₂/2 with the requested photon budget.

        Picks M = max(10, ⌈N/0.1⌉) coherence intervals and ε = N/M, so ε
        stays in the weak-source window for any N > 0.
        """
        if n_photons <= 0:
            raise ValueError(f"n_photons must be positive, got {n_photons}")
        m = max(10, math.ceil(n_photons / _EPSILON_MAX))
        return cls(psf=psf, X1=-0.5 * theta2, X2=0.5 * theta2,
                   epsilon=n_photons / m, M=m)


@dataclass(frozen=True)
class SldDecomposition:
    """Everything the SLD route needs, in the orthonormal e-basis.

    ``eigenvalues`` are (D₁, D₂, 0, 0) of ρ₁; the Gram scalars record the
    basis construction; ``sld_x1``/``sld_x2`` are the real symmetric 4×4
    SLD matrices with respect to the raw source positions X₁, X₂.
    """

    eigenvalues: np.ndarray
    delta: float
    gamma: float
    dk2: float
    b2: float
    c3: float
    c4: float
    sld_x1: np.ndarray = field(repr=False)
    sld_x2: np.ndarray = field(repr=False)

    @property
    def sld_centroid(self) -> np.ndarray:
        """ℒ₁ = ℒ₁^(X) + ℒ₂^(X) (θ₁ direction)."""
        return self.sld_x1 + self.sld_x2

    @property
    def sld_separation(self) -> np.ndarray:
        """ℒ₂ = (ℒ₂^(X) − ℒ₁^(X))/2 (θ₂ direction)."""
        return 0.5 * (self.sld_x2 - self.sld_x1)


def qfi_closed_form(model: OnePhotonModel) -> FisherMatrix:
    """𝒦 = diag(4N(Δk² − γ²), NΔk²) from the overlap scalars."""
    o = overlaps(model.psf, model.theta2)
    n = model.n_photons
    return FisherMatrix(
        4.0 * n * (o.dk2 - o.gamma**2), 0.0, n * o.dk2, Provenance.QUANTUM, n
    )


def sld_decompose(model: OnePhotonModel) -> SldDecomposition:
    """Build the 4×4 SLD matrices in the explicit orthonormal basis.

    The basis is e₁ ∝ ψ₁ − ψ₂, e₂ ∝ ψ₁ + ψ₂ plus two combinations of the
    derivative modes with norms c₃² = Δk² + b² − γ²/(1−δ) and
    c₄² = Δk² − b² − γ²/(1+δ).  Tiny negative squared norms from rounding
    (|value| < 1e-12·Δk²) are clamped to zero; anything worse — and the
    coincident-mode point θ₂ = 0 — raises :class:`DegenerateBasis`.
    """
    o = overlaps(model.psf, model.theta2)
    delta, gamma, dk2, b2 = o.delta, o.gamma, o.dk2, o.b2
    if 1.0 - delta < 1e-12:
        raise DegenerateBasis(
            f"modes coincide at theta2={model.theta2}: 1-delta={1.0 - delta:.3e}"
        )
    c3sq = dk2 + b2 - gamma**2 / (1.0 - delta)
    c4sq = dk2 - b2 - gamma**2 / (1.0 + delta)
    clamp = 1e-12 * dk2
    if c3sq < -clamp or c4sq < -clamp:
        raise DegenerateBasis(
            f"basis norms turned negative: c3^2={c3sq:.3e}, c4^2={c4sq:.3e}"
        )
    c3 = math.sqrt(max(c3sq, 0.0))
    c4 = math.sqrt(max(c4sq, 0.0))

    sqrt_m = math.sqrt(1.0 - delta)
    sqrt_p = math.sqrt(1.0 + delta)
    sqrt_mp = math.sqrt(1.0 - delta * delta)

    l1 = np.zeros((4, 4))
    l2 = np.zeros((4, 4))

    def put(j, k, v1, v2):
        l1[j, k] = l1[k, j] = v1
        l2[j, k] = l2[k, j] = v2

    put(0, 0, gamma / (1.0 - delta), -gamma / (1.0 - delta))
    put(0, 1, gamma * delta / sqrt_mp, gamma * delta / sqrt_mp)
    put(0, 2, c3 / sqrt_m, -c3 / sqrt_m)
    put(0, 3, c4 / sqrt_m, c4 / sqrt_m)
    put(1, 1, -gamma / (1.0 + delta), gamma / (1.0 + delta))
    put(1, 2, c3 / sqrt_p, c3 / sqrt_p)
    put(1, 3, c4 / sqrt_p, -c4 / sqrt_p)
    # Elements within the derivative-mode block (rows/cols 3, 4) vanish.

    eig = np.array([0.5 * (1.0 - delta), 0.5 * (1.0 + delta), 0.0, 0.0])
    return SldDecomposition(
        eigenvalues=eig, delta=delta, gamma=gamma, dk2=dk2, b2=b2,
        c3=c3, c4=c4, sld_x1=l1, sld_x2=l2,
    )


def qfi_from_sld(decomp: SldDecomposition, model: OnePhotonModel) -> FisherMatrix:
    """Evaluate 𝒦_{μν} = N Σ_k D_k (ℒ_μ ℒ_ν)_{kk} in the e-basis.

    Independent of :func:`qfi_closed_form` except for the shared overlap
    scalars: serves as the cross-validating oracle, including the numerical
    check that the off-diagonal 𝒦₁₂ vanishes.
    """
    d = decomp.eigenvalues
    lc = decomp.sld_centroid
    ls = decomp.sld_separation
    n = model.n_photons

    def weighted_trace(a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(d * np.einsum("jk,kj->j", a, b)))

    return FisherMatrix(
        n * weighted_trace(lc, lc),
        n * weighted_trace(lc, ls),
        n * weighted_trace(ls, ls),
        Provenance.QUANTUM,
        n,
    )
