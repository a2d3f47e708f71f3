"""Polarization ququarts of frequency-nondegenerate photon pairs.

Wave-plate optics, two tomography protocols with a maximum-likelihood
estimator, and key distribution over mutually unbiased bases.
"""

from .core import (PHI_MINUS, PHI_PLUS, PSI_MINUS, PSI_PLUS, CoherenceMatrix4, QuquartState, QutritState,
                   coherence_matrix, factorize, fidelity, polarization_degree_p3, polarization_degree_p4,
                   random_pure_state, reduced_density, separability_defect, stokes)
from .errors import (ContractViolation, DegenerateDataError, ProtocolError, QuquartError, UnsupportedBasisError,
                     WavelengthRangeError)
from .optics import WavePlate, apply, optical_thickness, prepare_psi_I, prepare_psi_II, ququart_transform

__version__ = "0.1.0"

__all__ = [
    "PHI_MINUS", "PHI_PLUS", "PSI_MINUS", "PSI_PLUS", "CoherenceMatrix4", "QuquartState", "QutritState",
    "coherence_matrix", "factorize", "fidelity", "polarization_degree_p3", "polarization_degree_p4",
    "random_pure_state", "reduced_density", "separability_defect", "stokes",
    "ContractViolation", "DegenerateDataError", "ProtocolError", "QuquartError", "UnsupportedBasisError",
    "WavelengthRangeError",
    "WavePlate", "apply", "optical_thickness", "prepare_psi_I", "prepare_psi_II", "ququart_transform",
]
