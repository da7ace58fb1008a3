import math

import numpy as np
import numpy.testing as npt
import pytest
from scipy import stats

import spadesim.fisher as fisher_mod
from spadesim.fisher import (
    FisherMatrix,
    MisalignmentConfig,
    NotGaussianPsf,
    Provenance,
    binary_spade_fisher_gaussian,
    binary_spade_fisher_general,
    direct_imaging_fisher,
    hg_spade_fisher,
    hybrid_fisher,
    localization_bound,
    misaligned_binary_fisher,
    misaligned_hg_fisher,
)
from spadesim.psf import GaussianPsf, SincPsf, TabulatedPsf
from spadesim.qfi import OnePhotonModel, qfi_closed_form

SIGMA = 1.0
G = GaussianPsf(SIGMA)


def _model(theta2, n=1.0, psf=G):
    return OnePhotonModel.symmetric(psf, theta2, n_photons=n)


# ---------------------------------------------------------------------------
# Hermite-Gauss demultiplexing
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("theta2", [0.1, 1.0, 4.0])
def test_hg_information_is_separation_independent(theta2):
    f = hg_spade_fisher(_model(theta2, n=3.0))
    npt.assert_allclose(f.j22, 3.0 / (4.0 * SIGMA**2), rtol=1e-9)
    assert f.j11 == 0.0 and f.j12 == 0.0
    assert f.provenance is Provenance.HG_SPADE


def test_hg_qmax_override_consistent():
    m = _model(4.0)
    npt.assert_allclose(hg_spade_fisher(m).j22, hg_spade_fisher(m, q_max=300).j22,
                        rtol=1e-12)


def test_hg_against_finite_difference_pmf_oracle():
    # independent route: numerically differentiate the mode distribution
    # P(q) = e^{-Q} Q^q / q!,  Q = theta2^2/(16 sigma^2)
    theta2, h, n = 1.0, 1e-5, 1.0
    q = np.arange(0, 80)

    def pmf(t2):
        return stats.poisson.pmf(q, t2**2 / (16.0 * SIGMA**2))

    dp = (pmf(theta2 + h) - pmf(theta2 - h)) / (2.0 * h)
    p = pmf(theta2)
    keep = p > 1e-300
    j22_fd = n * float(np.sum(dp[keep] ** 2 / p[keep]))
    npt.assert_allclose(hg_spade_fisher(_model(theta2)).j22, j22_fd, rtol=1e-4)


def test_hg_requires_gaussian():
    with pytest.raises(NotGaussianPsf):
        hg_spade_fisher(_model(1.0, psf=SincPsf(1.0)))


# ---------------------------------------------------------------------------
# binary demultiplexing
# ---------------------------------------------------------------------------

def test_binary_gaussian_known_value():
    # at Q = 1 (theta2 = 4 sigma): j22 = N/(4 sigma^2) * e^{-1}/(1 - e^{-1})...
    # times Q = 1
    f = binary_spade_fisher_gaussian(_model(4.0))
    expected = 0.25 * math.exp(-1.0) / -math.expm1(-1.0)
    npt.assert_allclose(f.j22, expected, rtol=1e-12)


def test_binary_against_finite_difference_binomial_oracle():
    # two-outcome model: p0 = e^{-Q}; J22 = N p0'^2 / (p0 (1 - p0))
    h = 1e-5
    for theta2 in (0.5, 1.0, 3.0):
        p0 = lambda t2: math.exp(-(t2**2) / (16.0 * SIGMA**2))
        dp0 = (p0(theta2 + h) - p0(theta2 - h)) / (2.0 * h)
        j22_fd = dp0**2 / (p0(theta2) * (1.0 - p0(theta2)))
        npt.assert_allclose(binary_spade_fisher_gaussian(_model(theta2)).j22,
                            j22_fd, rtol=1e-4)


def test_binary_general_matches_gaussian_closed_form():
    worst = 0.0
    for theta2 in np.linspace(0.1, 6.0, 25):
        a = binary_spade_fisher_gaussian(_model(float(theta2))).j22
        b = binary_spade_fisher_general(G, float(theta2), 1.0).j22
        worst = max(worst, abs(a - b) / a)
    assert worst < 1e-6, f"worst relative deviation {worst:.3e}"


def test_binary_general_zero_separation_limit():
    f = binary_spade_fisher_general(SincPsf(1.0), 0.0, 2.0)
    npt.assert_allclose(f.j22, 2.0 * math.pi**2 / 3.0, rtol=1e-9)


def test_binary_general_finite_at_interior_coupling_zero():
    # sinc at theta2 = 2W: the fundamental-mode coupling crosses zero, the
    # ratio form is 0/0, the amplitude form stays finite:
    # A' = gamma(1)/2 = -1/2, so j22 = 4 A'^2 / (1 - 0) = 1
    f = binary_spade_fisher_general(SincPsf(1.0), 2.0, 1.0)
    assert math.isfinite(f.j22)
    npt.assert_allclose(f.j22, 1.0, rtol=1e-9)


def test_binary_gaussian_requires_gaussian():
    with pytest.raises(NotGaussianPsf):
        binary_spade_fisher_gaussian(_model(1.0, psf=SincPsf(1.0)))


# ---------------------------------------------------------------------------
# direct imaging
# ---------------------------------------------------------------------------

def test_direct_loses_separation_information_at_contact():
    f = direct_imaging_fisher(_model(0.0))
    assert f.j22 == 0.0
    assert f.provenance is Provenance.DIRECT


def test_direct_recovers_quantum_limit_far_apart():
    f = direct_imaging_fisher(_model(10.0))
    assert 0.99 <= f.j22 / 0.25 <= 1.0


def test_direct_centroid_information_bounded_by_quantum():
    for theta2 in (0.0, 0.3, 1.0, 2.0, 5.0):
        f = direct_imaging_fisher(_model(theta2))
        k = qfi_closed_form(_model(theta2))
        assert f.j11 <= k.j11 + 1e-8
        assert f.j22 <= k.j22 + 1e-8


def test_direct_cross_information_vanishes_for_even_profiles():
    assert direct_imaging_fisher(_model(1.3)).j12 == 0.0
    assert direct_imaging_fisher(_model(1.3, psf=SincPsf(1.0))).j12 == 0.0


def test_direct_cross_information_quadrature_route():
    x = np.linspace(-6.0, 8.0, 701)
    # merely shifted profile: still mirror-symmetric about its own peak, so
    # the cross information is zero up to the sampled tail asymmetry — but
    # the origin-parity probe fails and the quadrature route must run
    shifted = TabulatedPsf(x, np.exp(-((x - 0.8) ** 2) / 4.0))
    assert not shifted.is_even()
    fs = direct_imaging_fisher(OnePhotonModel.symmetric(shifted, 1.0))
    assert abs(fs.j12) < 1e-5

    # a genuinely skewed profile couples centroid and separation errors;
    # the matrix must nevertheless stay positive semidefinite
    skew = TabulatedPsf(x, np.exp(-((x - 0.8) ** 2) / 4.0) * (1 + 0.1 * np.tanh(x)))
    f = direct_imaging_fisher(OnePhotonModel.symmetric(skew, 1.0))
    assert abs(f.j12) > 1e-4
    assert f.j11 * f.j22 - f.j12**2 > 0.0


def test_direct_against_riemann_sum_oracle():
    # independent route: trapezoid sum of the information integrands with
    # finite-difference theta2-derivatives of the intensity profile
    theta2, h, n = 1.0, 1e-5, 1.0
    x = np.linspace(-14.0, 14.0, 56001)

    def intensity(t2):
        return 0.5 * (G.evaluate(x + t2 / 2) ** 2 + G.evaluate(x - t2 / 2) ** 2)

    lam = intensity(theta2)
    dlam2 = (intensity(theta2 + h) - intensity(theta2 - h)) / (2.0 * h)
    keep = lam > 1e-280
    j22_fd = n * np.trapezoid(dlam2[keep] ** 2 / lam[keep], x[keep])
    f = direct_imaging_fisher(_model(theta2))
    npt.assert_allclose(f.j22, j22_fd, rtol=1e-5)


def test_direct_sinc_profile_is_finite_and_bounded():
    for theta2 in (0.25, 1.05, 3.6):
        f = direct_imaging_fisher(_model(theta2, psf=SincPsf(1.0)))
        assert math.isfinite(f.j11) and math.isfinite(f.j22)
        assert f.j22 <= math.pi**2 / 3.0 + 1e-8


def test_direct_probability_floor_insensitive(monkeypatch):
    # values must not depend on the exact vacuum-tail cutoff (design choice:
    # the floor only suppresses 0/0 noise, it never carries information)
    m = _model(0.5, psf=SincPsf(1.0))
    base = direct_imaging_fisher(m)
    monkeypatch.setattr(fisher_mod, "_PROB_FLOOR", 1e-25)
    moved = direct_imaging_fisher(m)
    npt.assert_allclose(moved.j22, base.j22, rtol=1e-9)
    npt.assert_allclose(moved.j11, base.j11, rtol=1e-9)


# ---------------------------------------------------------------------------
# misalignment
# ---------------------------------------------------------------------------

def test_misaligned_zero_offset_identical_to_aligned():
    m = _model(0.7)
    mis0 = MisalignmentConfig(0.0)
    assert misaligned_hg_fisher(m, mis0).j22 == hg_spade_fisher(m).j22
    # the two-outcome formulas assemble the same value in different order,
    # so equality here is only to rounding
    npt.assert_allclose(misaligned_binary_fisher(m, mis0).j22,
                        binary_spade_fisher_gaussian(m).j22, rtol=1e-13)


def test_misaligned_information_vanishes_at_contact():
    # with theta2 = 0 both sources sit on the axis offset; relabeling
    # symmetry kills the theta2-derivative exactly
    m = _model(0.0)
    mis = MisalignmentConfig(0.1)
    assert misaligned_hg_fisher(m, mis).j22 == 0.0
    assert misaligned_binary_fisher(m, mis).j22 == 0.0


@pytest.mark.parametrize("fn", [misaligned_hg_fisher, misaligned_binary_fisher])
def test_misaligned_information_decreases_with_offset(fn):
    m = _model(0.5)
    vals = [fn(m, MisalignmentConfig(xi)).j22 for xi in (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)]
    assert all(a > b for a, b in zip(vals, vals[1:])), vals


def test_misaligned_sign_symmetric():
    m = _model(0.8)
    left = misaligned_binary_fisher(m, MisalignmentConfig(0.3, sign=-1))
    right = misaligned_binary_fisher(m, MisalignmentConfig(0.3, sign=1))
    npt.assert_allclose(left.j22, right.j22, rtol=1e-12)


def test_misaligned_still_beats_direct_near_contact():
    m = _model(0.2)
    mis = MisalignmentConfig(0.1)
    d = direct_imaging_fisher(m).j22
    assert misaligned_hg_fisher(m, mis).j22 > 5.0 * d
    assert misaligned_binary_fisher(m, mis).j22 > 5.0 * d


def test_misalignment_config_validation():
    with pytest.raises(ValueError):
        MisalignmentConfig(-0.1)
    with pytest.raises(ValueError):
        MisalignmentConfig(0.1, sign=2)
    npt.assert_allclose(MisalignmentConfig(0.2, sign=-1).offset(2.0), -0.4,
                        rtol=1e-15)


def test_misaligned_requires_gaussian():
    m = _model(1.0, psf=SincPsf(1.0))
    with pytest.raises(NotGaussianPsf):
        misaligned_hg_fisher(m, MisalignmentConfig(0.1))
    with pytest.raises(NotGaussianPsf):
        misaligned_binary_fisher(m, MisalignmentConfig(0.1))


# ---------------------------------------------------------------------------
# hybrid scheme and scalar bound
# ---------------------------------------------------------------------------

def test_hybrid_is_half_direct_plus_half_binary():
    m = _model(1.2, n=4.0)
    h = hybrid_fisher(m)
    d = direct_imaging_fisher(m)
    b = binary_spade_fisher_gaussian(m)
    npt.assert_allclose(h.j11, 0.5 * d.j11, rtol=1e-12)
    npt.assert_allclose(h.j22, 0.5 * d.j22 + 0.5 * b.j22, rtol=1e-12)
    assert h.j12 == 0.0
    assert h.provenance is Provenance.HYBRID


def test_hybrid_with_misaligned_arm():
    m = _model(1.2)
    mis = MisalignmentConfig(0.2)
    h = hybrid_fisher(m, mis)
    expected = 0.5 * direct_imaging_fisher(m).j22 \
        + 0.5 * misaligned_binary_fisher(m, mis).j22
    npt.assert_allclose(h.j22, expected, rtol=1e-12)


def test_localization_bound_values():
    npt.assert_allclose(
        localization_bound(FisherMatrix(1.0, 0.0, 1.0, Provenance.DIRECT, 1.0)),
        1.25, rtol=1e-15,
    )
    assert localization_bound(
        FisherMatrix(1.0, 0.0, 0.0, Provenance.DIRECT, 1.0)) == math.inf
    with pytest.raises(ValueError):
        localization_bound(FisherMatrix(-1.0, 0.0, 1.0, Provenance.DIRECT, 1.0))


def test_fisher_matrix_as_array():
    arr = FisherMatrix(2.0, 0.5, 3.0, Provenance.QUANTUM, 1.0).as_array()
    npt.assert_allclose(arr, [[2.0, 0.5], [0.5, 3.0]], rtol=0)
