"""Cross-validation of the two quantum-information routes.

The closed form and the operator-basis (SLD) construction share only the
overlap scalars; element-wise agreement between them is the strongest
internal consistency check the package has, so it runs on a dense grid for
both analytic profile families.
"""

import logging
import math
import unittest

import numpy as np
import numpy.testing as npt

from spadesim.fisher import Provenance
from spadesim.psf import GaussianPsf, SincPsf
from spadesim.qfi import (
    DegenerateBasis,
    OnePhotonModel,
    qfi_closed_form,
    qfi_from_sld,
    sld_decompose,
)

logger = logging.getLogger(__name__)


class QfiOracleEquivalence(unittest.TestCase):
    """Closed form vs SLD route, dense separation grid, both profiles."""

    def _run_grid_for(self, psf):
        grid = np.geomspace(1e-2, 10.0, 50) * psf.width
        worst = 0.0
        for theta2 in grid:
            model = OnePhotonModel.symmetric(psf, float(theta2), n_photons=1.0)
            closed = qfi_closed_form(model)
            oracle = qfi_from_sld(sld_decompose(model), model)
            for a, b in ((closed.j11, oracle.j11), (closed.j22, oracle.j22)):
                rel = abs(a - b) / abs(b)
                worst = max(worst, rel)
                self.assertLess(rel, 1e-8)
            # centroid/separation are information-orthogonal
            assert abs(closed.j12) == 0.0
            self.assertLess(abs(oracle.j12), 1e-9)
        logger.debug(f"{psf.kind}: worst element-wise relative error {worst:.3e}")
        return worst

    def test_gaussian_routes_agree(self):
        worst = self._run_grid_for(GaussianPsf(1.0))
        assert worst < 1e-8

    def test_sinc_routes_agree(self):
        worst = self._run_grid_for(SincPsf(1.0))
        assert worst < 1e-8

    def test_routes_agree_off_unit_width(self):
        self._run_grid_for(GaussianPsf(0.37))
        self._run_grid_for(SincPsf(2.0))


class ClosedFormValues(unittest.TestCase):
    def test_separation_information_is_constant(self):
        # K22 = N/(4 sigma^2) independent of separation: no resolution
        # penalty at the quantum limit
        psf = GaussianPsf(1.0)
        for theta2 in (0.01, 0.1, 1.0, 3.0, 6.0):
            k = qfi_closed_form(OnePhotonModel.symmetric(psf, theta2))
            npt.assert_allclose(k.j22, 0.25, rtol=1e-12)

    def test_centroid_information_depends_on_separation(self):
        psf = GaussianPsf(1.0)
        k0 = qfi_closed_form(OnePhotonModel.symmetric(psf, 1e-6))
        kfar = qfi_closed_form(OnePhotonModel.symmetric(psf, 20.0))
        # gamma^2 penalty vanishes at both extremes, peaks in between
        npt.assert_allclose(k0.j11, 4 * 0.25, rtol=1e-9)
        npt.assert_allclose(kfar.j11, 4 * 0.25, rtol=1e-9)
        kmid = qfi_closed_form(OnePhotonModel.symmetric(psf, 2.0))
        assert kmid.j11 < k0.j11

    def test_scales_linearly_in_photon_number(self):
        psf = GaussianPsf(1.0)
        k1 = qfi_closed_form(OnePhotonModel.symmetric(psf, 1.5, n_photons=1.0))
        k9 = qfi_closed_form(OnePhotonModel.symmetric(psf, 1.5, n_photons=9.0))
        npt.assert_allclose(k9.as_array(), 9.0 * k1.as_array(), rtol=1e-12)

    def test_provenance_and_budget(self):
        k = qfi_closed_form(OnePhotonModel.symmetric(GaussianPsf(1.0), 1.0, 5.0))
        assert k.provenance is Provenance.QUANTUM
        npt.assert_allclose(k.photon_budget, 5.0, rtol=1e-12)


class SldConstruction(unittest.TestCase):
    def test_eigenvalues(self):
        model = OnePhotonModel.symmetric(GaussianPsf(1.0), 2.0)
        dec = sld_decompose(model)
        d = np.sort(dec.eigenvalues)
        npt.assert_almost_equal(float(np.sum(d)), 1.0)
        expected = 0.5 * (1.0 + math.exp(-0.5))
        npt.assert_allclose(np.max(d), expected, rtol=1e-12)
        npt.assert_allclose(d[:2], 0.0, atol=1e-15)

    def test_operator_matrices_are_symmetric(self):
        model = OnePhotonModel.symmetric(SincPsf(1.0), 0.7)
        dec = sld_decompose(model)
        npt.assert_allclose(dec.sld_x1, dec.sld_x1.T, atol=0)
        npt.assert_allclose(dec.sld_x2, dec.sld_x2.T, atol=0)

    def test_centroid_separation_combinations(self):
        model = OnePhotonModel.symmetric(GaussianPsf(1.0), 1.3)
        dec = sld_decompose(model)
        npt.assert_allclose(dec.sld_centroid, dec.sld_x1 + dec.sld_x2, atol=0)
        npt.assert_allclose(dec.sld_separation, 0.5 * (dec.sld_x2 - dec.sld_x1),
                            atol=0)

    def test_coincident_sources_are_degenerate(self):
        model = OnePhotonModel.symmetric(GaussianPsf(1.0), 0.0)
        with self.assertRaises(DegenerateBasis):
            sld_decompose(model)
        # ... while the closed form stays finite there
        k = qfi_closed_form(model)
        npt.assert_allclose(k.j22, 0.25, rtol=1e-12)


class ModelValidation(unittest.TestCase):
    def test_symmetric_constructor(self):
        m = OnePhotonModel.symmetric(GaussianPsf(2.0), 3.0, n_photons=7.0)
        npt.assert_allclose(m.theta1, 0.0, atol=0)
        npt.assert_allclose(m.theta2, 3.0, rtol=1e-15)
        npt.assert_allclose(m.X1, -1.5, rtol=1e-15)
        npt.assert_allclose(m.X2, 1.5, rtol=1e-15)
        npt.assert_allclose(m.n_photons, 7.0, rtol=1e-12)
        assert m.epsilon <= 0.1

    def test_epsilon_must_stay_weak(self):
        g = GaussianPsf(1.0)
        with self.assertRaises(ValueError):
            OnePhotonModel(g, -0.5, 0.5, epsilon=0.2)
        with self.assertRaises(ValueError):
            OnePhotonModel(g, -0.5, 0.5, epsilon=0.0)
        OnePhotonModel(g, -0.5, 0.5, epsilon=0.1)  # boundary is allowed

    def test_rejects_bad_geometry(self):
        g = GaussianPsf(1.0)
        with self.assertRaises(ValueError):
            OnePhotonModel(g, 0.5, -0.5)          # X2 < X1
        with self.assertRaises(ValueError):
            OnePhotonModel(g, math.nan, 0.5)
        with self.assertRaises(ValueError):
            OnePhotonModel(g, -0.5, 0.5, M=0)
        with self.assertRaises(TypeError):
            OnePhotonModel("gaussian", -0.5, 0.5)

    def test_theta_parametrization_roundtrip(self):
        m = OnePhotonModel(GaussianPsf(1.0), -0.2, 1.0)
        npt.assert_allclose(m.theta1, 0.4, rtol=1e-15)
        npt.assert_allclose(m.theta2, 1.2, rtol=1e-15)


if __name__ == "__main__":
    logging.basicConfig(level=logging.DEBUG)
    unittest.main()
