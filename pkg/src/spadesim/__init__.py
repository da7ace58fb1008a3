"""Cramér-Rao bounds and Monte Carlo simulation for resolving two incoherent
optical point sources, comparing direct imaging against spatial-mode
demultiplexing (SPADE) and its binary variant.

Submodules
----------
psf
    Point-spread functions, quadrature engine, overlap integrals.
qfi
    Quantum Fisher information: closed form and an independent
    symmetric-logarithmic-derivative (SLD) construction used as an oracle.
fisher
    Classical Fisher information for every measurement scheme, misalignment
    effects, the hybrid scheme, and localization error bounds.
montecarlo
    Photon-count sampling, maximum-likelihood estimators, error sweeps.
cli
    Config-driven batch runner emitting figure-ready CSV datasets.
"""

__version__ = "0.1.0"

from .psf import (
    GaussianPsf,
    NonConvergence,
    OverlapQuantities,
    PointSpreadFunction,
    SincPsf,
    TabulatedPsf,
    load_tabulated,
    overlaps,
    overlaps_by_quadrature,
    quadrature,
    quadrature_panels,
    transfer_amplitude,
    transfer_overlap,
)
from .qfi import (
    DegenerateBasis,
    OnePhotonModel,
    SldDecomposition,
    qfi_closed_form,
    qfi_from_sld,
    sld_decompose,
)
from .fisher import (
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
from .montecarlo import (
    EstimationReport,
    ModeCountRecord,
    Scheme,
    ZeroPhotons,
    mle_binary,
    mle_hg,
    run_error_sweep,
    sample_binary,
    sample_hg_sufficient,
    sample_mode_counts,
    write_report_csv,
)

__all__ = [
    "__version__",
    # psf
    "GaussianPsf",
    "NonConvergence",
    "OverlapQuantities",
    "PointSpreadFunction",
    "SincPsf",
    "TabulatedPsf",
    "load_tabulated",
    "overlaps",
    "overlaps_by_quadrature",
    "quadrature",
    "quadrature_panels",
    "transfer_amplitude",
    "transfer_overlap",
    # qfi
    "DegenerateBasis",
    "OnePhotonModel",
    "SldDecomposition",
    "qfi_closed_form",
    "qfi_from_sld",
    "sld_decompose",
    # fisher
    "FisherMatrix",
    "MisalignmentConfig",
    "NotGaussianPsf",
    "Provenance",
    "binary_spade_fisher_gaussian",
    "binary_spade_fisher_general",
    "direct_imaging_fisher",
    "hg_spade_fisher",
    "hybrid_fisher",
    "localization_bound",
    "misaligned_binary_fisher",
    "misaligned_hg_fisher",
    # montecarlo
    "EstimationReport",
    "ModeCountRecord",
    "Scheme",
    "ZeroPhotons",
    "mle_binary",
    "mle_hg",
    "run_error_sweep",
    "sample_binary",
    "sample_hg_sufficient",
    "sample_mode_counts",
    "write_report_csv",
]
