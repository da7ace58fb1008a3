"""Point-spread functions and the overlap integrals built on them.

Everything downstream (quantum and classical information matrices, mode-count
statistics) reduces to a handful of scalar integrals of a real, unit-norm
image-plane amplitude ψ(x) and its derivative:

    delta  = ∫ ψ(x + s/2) ψ(x − s/2) dx          (displaced self-overlap)
    gamma  = ∫ ψ'(x) ψ(x − s) dx
    dk2    = ∫ ψ'(x)² dx                          (spatial-frequency variance)
    b2     = ∫ ψ'(x + s/2) ψ'(x − s/2) dx

for a source separation s.  Three PSF families are provided: Gaussian
(closed forms for every scalar), sinc (hard-truncated transfer function:
the scalars are evaluated by quadrature in the frequency domain, where the
integrands are smooth with compact support |k| ≤ π/W), and user-tabulated
amplitudes (cubic interpolation, position-space quadrature).

For a real amplitude the position- and frequency-domain forms are
identities:  delta = ∫|Ψ(k)|² cos(ks) dk,  gamma = −∫ k|Ψ(k)|² sin(ks) dk,
b2 = ∫ k²|Ψ(k)|² cos(ks) dk,  dk2 = ∫ k²|Ψ(k)|² dk.  The frequency route is
what makes the slowly decaying sinc profile tractable: its position-space
tails fall off like 1/x², so a ±200W truncation leaves a ~5e-4 normalization
defect, while the k-space integrals are exact up to quadrature tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

__all__ = [
    "NonConvergence",
    "PointSpreadFunction",
    "GaussianPsf",
    "SincPsf",
    "TabulatedPsf",
    "load_tabulated",
    "OverlapQuantities",
    "quadrature",
    "quadrature_panels",
    "overlaps",
    "overlaps_by_quadrature",
    "transfer_amplitude",
    "transfer_overlap",
]

#: Subdivision budget of the adaptive quadrature engine.  The engine
#: escalates through these limits before giving up.
_QUAD_LIMITS = (512, 65536, 1_000_000)


class NonConvergence(RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget before reaching tol."""


# =============================================================================
# Quadrature engine
# =============================================================================


def quadrature(f, a: float, b: float, tol: float = 1e-10, points=None) -> float:
    """Integrate ``f`` over [a, b] to absolute tolerance ``tol``.

    Thin contract wrapper around adaptive Gauss-Kronrod subdivision
    (QUADPACK via scipy).  ``points`` may list interior abscissae where the
    integrand is awkward (kinks, zeros of an oscillatory factor); subdivision
    is seeded there.  Points outside (a, b) are ignored.

    Raises
    ------
    NonConvergence
        If the error estimate still exceeds ``tol`` after the subdivision
        budget (10⁶ panels) is exhausted.
    """
    if not a < b:
        raise ValueError(f"integration bounds must satisfy a < b, got [{a}, {b}]")
    pts = None
    if points is not None:
        pts = np.asarray([p for p in np.atleast_1d(points) if a < p < b], dtype=float)
        if pts.size == 0:
            pts = None
        else:
            pts = np.unique(pts)

    last = (math.nan, math.inf)
    for limit in _QUAD_LIMITS:
        if pts is not None and limit < pts.size + 2:
            continue
        # With full_output, QUADPACK failures append a message to the result
        # tuple; success returns exactly (value, abserr, infodict).
        res = integrate.quad(f, a, b, epsabs=tol, epsrel=1e-12, limit=limit,
                             points=pts, full_output=True)
        value, abserr = res[0], res[1]
        if len(res) == 3:
            return value
        last = (value, abserr)
    if last[1] <= tol:
        return last[0]
    raise NonConvergence(
        f"quadrature on [{a}, {b}] stalled at error estimate {last[1]:.3e} "
        f"(requested {tol:.3e})"
    )


_GL_ORDERS = (15, 31)
_GL_RULES = {n: np.polynomial.legendre.leggauss(n) for n in _GL_ORDERS}


def quadrature_panels(f, edges, tol: float = 1e-8, max_rounds: int = 40) -> float:
    """Integrate a vectorized ``f`` over panels to absolute tolerance ``tol``.

    Composite Gauss-Legendre with the panel decomposition given by ``edges``
    (sorted abscissae; typically domain endpoints plus every zero of an
    oscillatory factor, so the integrand is analytic inside each panel).
    Per-panel error is estimated by comparing 15- and 31-node rules; a panel
    is accepted when its error fits the share ``tol·width/total_width`` of
    the budget, otherwise it is bisected.  All function evaluations are
    batched, so ``f`` must accept an ndarray.

    This path exists for ratio integrands of slowly decaying oscillatory
    profiles (sinc direct imaging), where globally adaptive Gauss-Kronrod
    stalls on roundoff long before reaching ``tol``.
    """
    edges = np.unique(np.asarray(edges, dtype=float))
    if edges.size < 2:
        raise ValueError("need at least two panel edges")
    lo = edges[:-1].copy()
    hi = edges[1:].copy()
    span = edges[-1] - edges[0]
    # Worst case the open-panel set doubles every round (when roundoff on the
    # integrand's scale exceeds the per-panel budget, nothing ever converges);
    # cap the panel population so that pathology surfaces as NonConvergence
    # instead of exhausting memory.
    max_panels = 50_000

    total = 0.0
    err_total = 0.0
    for _ in range(max_rounds):
        if lo.size > max_panels:
            raise NonConvergence(
                f"panel quadrature exceeded {max_panels} open panels "
                f"(tol {tol:.3e} is below the integrand's roundoff floor)"
            )
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        vals = {}
        for order in _GL_ORDERS:
            xi, w = _GL_RULES[order]
            x = (c[:, None] + h[:, None] * xi[None, :]).ravel()
            fx = np.asarray(f(x), dtype=float).reshape(c.size, order)
            vals[order] = h * (fx @ w)
        coarse, fine = (vals[o] for o in _GL_ORDERS)
        perr = np.abs(fine - coarse)
        ok = perr <= tol * (2.0 * h) / span
        total += float(np.sum(fine[ok]))
        err_total += float(np.sum(perr[ok]))
        if np.all(ok):
            return total
        # A panel whose whole mass is negligible can be accepted as-is.  This
        # terminates bisection wars against true discontinuities carrying no
        # weight (e.g. the truncation edge of a tabulated profile).
        bad = ~ok
        if float(np.sum(np.abs(fine[bad]) + perr[bad])) <= 0.1 * tol:
            return total + float(np.sum(fine[bad]))
        lo, hi = lo[bad], hi[bad]
        mid = 0.5 * (lo + hi)
        lo = np.concatenate([lo, mid])
        hi = np.concatenate([mid, hi])
    leftover = float(np.sum(np.abs(vals[_GL_ORDERS[1]][~ok])))
    raise NonConvergence(
        f"panel quadrature stalled with {lo.size} open panels "
        f"(accepted error {err_total:.3e}, open mass {leftover:.3e}, tol {tol:.3e})"
    )


# =============================================================================
# PSF families
# =============================================================================


class PointSpreadFunction:
    """A real, unit-norm 1-D image-plane amplitude ψ(x).

    Concrete kinds are :class:`GaussianPsf`, :class:`SincPsf` and
    :class:`TabulatedPsf`.  Each provides pointwise evaluation of ψ and ψ',
    a characteristic width, and a truncation radius ``support_halfwidth``
    inside which quadrature is performed.
    """

    kind: str = "abstract"
    #: Characteristic length (σ for Gaussian, W for sinc, half-span for
    #: tabulated); sets finite-difference steps and default grids.
    width: float
    #: Truncation radius for position-space quadrature.
    support_halfwidth: float

    def evaluate(self, x):
        raise NotImplementedError

    def derivative(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.evaluate(x)

    # --- quadrature hints -------------------------------------------------

    def quad_tol(self) -> float:
        """Default absolute tolerance for position-space integrals."""
        return 1e-10

    def breakpoints(self, a: float, b: float, shifts=(0.0,)):
        """Interior abscissae worth seeding subdivision at, or None."""
        return None

    def is_even(self) -> bool:
        """Whether ψ(−x) = ψ(x).

        Even profiles admit parity shortcuts (e.g. the direct-imaging cross
        information vanishes identically for equal-strength sources).
        Analytic families are even by construction; tabulated profiles are
        probed numerically.
        """
        return False


class GaussianPsf(PointSpreadFunction):
    """Gaussian amplitude ψ(x) = (2πσ²)^(−1/4) exp(−x²/(4σ²)).

    The intensity |ψ|² is then a normal density with standard deviation σ.
    Every overlap scalar has a closed form, used directly by
    :func:`overlaps`; quadrature serves as a cross-check oracle in tests.
    """

    kind = "gaussian"

    def __init__(self, sigma: float, support_halfwidth: float | None = None):
        if not (sigma > 0 and math.isfinite(sigma)):
            raise ValueError(f"sigma must be positive and finite, got {sigma}")
        self.sigma = float(sigma)
        self.width = self.sigma
        # erfc(10/sqrt(2)) ~ 2e-23: truncated normalization defect well
        # below the 1e-10 requirement.
        self.support_halfwidth = (
            10.0 * self.sigma if support_halfwidth is None else float(support_halfwidth)
        )
        self._norm = (2.0 * math.pi * self.sigma**2) ** -0.25

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = self._norm * np.exp(-(x**2) / (4.0 * self.sigma**2))
        return out if out.ndim else float(out)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = -x / (2.0 * self.sigma**2) * self.evaluate(x)
        return out if out.ndim else float(out)

    def is_even(self) -> bool:
        return True


class SincPsf(PointSpreadFunction):
    """Sinc amplitude ψ(x) = W^(−1/2) sinc(x/W), sinc(u) = sin(πu)/(πu).

    Models a hard-edged (rectangular) transfer function: |Ψ(k)|² = W/(2π)
    for |k| ≤ π/W and zero outside.  Overlap scalars are computed in the
    frequency domain over that compact support.  Position-space quadrature
    is truncated at ``support_halfwidth`` (default 200 W); the 1/x² tails
    leave a documented ~5e-4 normalization defect there, which matters only
    for the direct-imaging integrals where it strictly under-counts
    information.
    """

    kind = "sinc"

    def __init__(self, width: float, support_halfwidth: float | None = None):
        if not (width > 0 and math.isfinite(width)):
            raise ValueError(f"width must be positive and finite, got {width}")
        self.width = float(width)
        self.support_halfwidth = (
            200.0 * self.width if support_halfwidth is None else float(support_halfwidth)
        )
        self._amp = self.width**-0.5

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        out = self._amp * np.sinc(x / self.width)
        return out if out.ndim else float(out)

    def derivative(self, x):
        u = np.asarray(x, dtype=float) / self.width
        small = np.abs(u) < 1e-4
        u_safe = np.where(small, 1.0, u)
        with np.errstate(invalid="ignore"):
            d = (np.cos(np.pi * u_safe) - np.sinc(u_safe)) / u_safe
        # series  sinc'(u) = −π²u/3 + π⁴u³/30 − …  near the removable point
        d = np.where(small, -(np.pi**2) * u / 3.0 + (np.pi**4) * u**3 / 30.0, d)
        out = self.width**-1.5 * d
        return out if out.ndim else float(out)

    def quad_tol(self) -> float:
        return 1e-8

    def is_even(self) -> bool:
        return True

    def breakpoints(self, a: float, b: float, shifts=(0.0,)):
        """Zeros of ψ(x − shift) inside (a, b), for every requested shift."""
        pts = []
        for c in shifts:
            n_lo = math.ceil((a - c) / self.width)
            n_hi = math.floor((b - c) / self.width)
            for n in range(n_lo, n_hi + 1):
                if n != 0:
                    pts.append(c + n * self.width)
        return np.asarray(sorted(pts)) if pts else None

    # --- frequency-domain description --------------------------------------

    def transfer_support(self) -> float:
        """Cutoff k_max = π/W of the rectangular transfer function."""
        return math.pi / self.width

    def transfer_density(self) -> float:
        """|Ψ(k)|² = W/(2π) on the support (flat)."""
        return self.width / (2.0 * math.pi)


class TabulatedPsf(PointSpreadFunction):
    """User-supplied sampled amplitude, cubic-interpolated and renormalized.

    The grid must be strictly increasing.  ψ is the natural cubic spline of
    the samples inside [x₀, x_N] and exactly 0 outside; ψ' is a central
    finite difference with step 1e-5 × width.  The amplitude is rescaled on
    construction so that ∫ψ² = 1 to quadrature tolerance (user data is never
    exactly normalized).
    """

    kind = "tabulated"

    def __init__(self, x: np.ndarray, amplitude: np.ndarray):
        x = np.asarray(x, dtype=float)
        amplitude = np.asarray(amplitude, dtype=float)
        if x.ndim != 1 or x.shape != amplitude.shape:
            raise ValueError("grid and amplitude must be 1-D arrays of equal length")
        if x.size < 4:
            raise ValueError("need at least 4 samples for cubic interpolation")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(amplitude)):
            raise ValueError("grid and amplitude must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid must be strictly increasing")
        self.lo = float(x[0])
        self.hi = float(x[-1])
        self.width = 0.5 * (self.hi - self.lo)
        self.support_halfwidth = max(abs(self.lo), abs(self.hi))
        self._spline = CubicSpline(x, amplitude, bc_type="natural")
        # Seed subdivision at the knots: the spline is only C² there, and
        # QUADPACK stalls just above 1e-12 when it must discover hundreds of
        # curvature breaks on its own.
        norm2 = quadrature(lambda t: float(self._spline(t)) ** 2, self.lo, self.hi,
                           tol=1e-10, points=x[1:-1])
        if norm2 <= 0:
            raise ValueError("tabulated amplitude has zero norm")
        self._spline = CubicSpline(x, amplitude / math.sqrt(norm2), bc_type="natural")
        self._knots = x

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        out = np.where(inside, self._spline(np.clip(x, self.lo, self.hi)), 0.0)
        return out if out.ndim else float(out)

    def derivative(self, x):
        h = 1e-5 * self.width
        out = (self.evaluate(np.asarray(x, dtype=float) + h)
               - self.evaluate(np.asarray(x, dtype=float) - h)) / (2.0 * h)
        return out if np.ndim(out) else float(out)

    def is_even(self) -> bool:
        """Numeric parity probe: ψ(x) vs ψ(−x) on a dense grid."""
        xs = np.linspace(0.0, self.support_halfwidth, 513)
        fwd = np.asarray(self.evaluate(xs))
        peak = float(np.max(np.abs(fwd)))
        return bool(np.max(np.abs(fwd - self.evaluate(-xs))) <= 1e-9 * peak)

    def breakpoints(self, a: float, b: float, shifts=(0.0,)):
        """Knot positions of ψ(x − shift): curvature breaks of the spline."""
        pts = [c + k for c in shifts for k in self._knots]
        return np.unique(pts)


def load_tabulated(path) -> TabulatedPsf:
    """Load a tabulated PSF from two-column whitespace-delimited text (x, ψ).

    Lines starting with '#' are comments.  Non-monotone grids are rejected.
    """
    data = np.loadtxt(path, comments="#")
    if data.ndim != 2 or data.shape[1] < 2:
        raise ValueError(f"{path}: expected two columns (x, amplitude)")
    return TabulatedPsf(data[:, 0], data[:, 1])


# =============================================================================
# Overlap integrals
# =============================================================================


@dataclass(frozen=True)
class OverlapQuantities:
    """The four scalar integrals feeding every information matrix.

    delta is dimensionless, gamma has units 1/length, dk2 and b2 1/length².
    """

    delta: float
    gamma: float
    dk2: float
    b2: float


def overlaps(psf: PointSpreadFunction, theta2: float) -> OverlapQuantities:
    """Overlap scalars of two copies of ``psf`` separated by ``theta2``.

    Sources sit at ∓theta2/2 about the centroid.  Gaussian kind uses the
    closed forms
        delta = exp(−θ₂²/(8σ²)),  gamma = −θ₂ δ/(4σ²),
        dk2 = 1/(4σ²),            b2 = δ (dk2 − θ₂²/(16σ⁴));
    sinc uses frequency-domain quadrature over the compact transfer support;
    tabulated uses position-space quadrature.  The routes agree for any real
    amplitude — tests cross-check them against each other.
    """
    if theta2 < 0:
        raise ValueError(f"theta2 must be nonnegative, got {theta2}")
    theta2 = float(theta2)
    if isinstance(psf, GaussianPsf):
        s2 = psf.sigma**2
        delta = math.exp(-(theta2**2) / (8.0 * s2))
        gamma = -theta2 * delta / (4.0 * s2) + 0.0
        dk2 = 1.0 / (4.0 * s2)
        b2 = delta * (dk2 - theta2**2 / (16.0 * s2 * s2))
        return OverlapQuantities(delta, gamma, dk2, b2)
    if isinstance(psf, SincPsf):
        return _overlaps_kspace(psf, theta2)
    return overlaps_by_quadrature(psf, theta2)


def _overlaps_kspace(psf: SincPsf, theta2: float) -> OverlapQuantities:
    """Frequency-domain overlap scalars for a flat, compact transfer function."""
    kmax = psf.transfer_support()
    s = psf.transfer_density()
    tol = 1e-12
    # All integrands are even in k: integrate [0, kmax] and double.
    delta = 2.0 * quadrature(lambda k: s * math.cos(k * theta2), 0.0, kmax, tol)
    gamma = -2.0 * quadrature(lambda k: s * k * math.sin(k * theta2), 0.0, kmax, tol)
    dk2 = 2.0 * quadrature(lambda k: s * k * k, 0.0, kmax, tol)
    b2 = 2.0 * quadrature(lambda k: s * k * k * math.cos(k * theta2), 0.0, kmax, tol)
    return OverlapQuantities(delta, gamma + 0.0, dk2, b2)


def overlaps_by_quadrature(psf: PointSpreadFunction, theta2: float) -> OverlapQuantities:
    """Position-space quadrature route for the overlap scalars.

    Works for every PSF kind; it is the production path for tabulated
    amplitudes and the cross-check oracle for the closed-form / k-space
    paths.  For the sinc kind the ±support_halfwidth truncation leaves a
    ~1/(π²·halfwidth) relative defect — callers needing better than ~1e-3
    for sinc should use :func:`overlaps`.
    """
    if theta2 < 0:
        raise ValueError(f"theta2 must be nonnegative, got {theta2}")
    theta2 = float(theta2)
    r = psf.support_halfwidth
    tol = psf.quad_tol()
    h = 0.5 * theta2

    def shifted(f, a, b, shifts):
        return quadrature(f, a, b, tol, points=psf.breakpoints(a, b, shifts))

    # Supports of ψ(x ± θ₂/2) intersect on [−r + h, r − h].
    if theta2 >= 2.0 * r:
        delta = gamma = b2 = 0.0
    else:
        delta = shifted(lambda x: psf.evaluate(x + h) * psf.evaluate(x - h),
                        -r + h, r - h, (-h, h))
        gamma = shifted(lambda x: psf.derivative(x + h) * psf.evaluate(x - h),
                        -r + h, r - h, (-h, h))
        b2 = shifted(lambda x: psf.derivative(x + h) * psf.derivative(x - h),
                     -r + h, r - h, (-h, h))
    dk2 = shifted(lambda x: psf.derivative(x) ** 2, -r, r, (0.0,))
    return OverlapQuantities(delta, gamma, dk2, b2)


def transfer_amplitude(psf: PointSpreadFunction, theta2: float) -> float:
    """Amplitude A(θ₂) = ∫ψ(x)ψ(x + θ₂/2)dx coupling a source displaced by
    θ₂/2 into the PSF-matched fundamental mode.

    This is the autocorrelation of ψ at lag θ₂/2, i.e. delta evaluated at
    half the separation.  A(0) = 1 for a normalized amplitude.
    """
    return overlaps(psf, 0.5 * abs(theta2)).delta


def transfer_overlap(psf: PointSpreadFunction, theta2: float) -> float:
    """Mode overlap factor Υ(θ₂) = |∫ψ(x)ψ(x + θ₂/2)dx|² ∈ [0, 1].

    Fraction of the light from a source at offset θ₂/2 that couples into the
    fundamental PSF-matched mode.  For the Gaussian kind
    Υ = exp(−θ₂²/(16σ²)), consistent with the small-separation expansion
    Υ = 1 − dk2·θ₂²/4 + O(θ₂⁴) that holds for every PSF.
    """
    a = transfer_amplitude(psf, theta2)
    return min(a * a, 1.0)
