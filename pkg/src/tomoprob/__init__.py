"""Probability-vector entropy inequalities, qudit and optical tomograms, and tomographic cumulants."""

__version__ = "0.1.0"

from ._validation import DomainError, InformationallyIncompleteError, NumericalConsistencyError
from .cumulant import MGFDivergenceError, cumulant_report, cumulants, gaussianity_deviation, nongaussianity
from .cvstate import WaveFunction, analytic_tomogram, check_state_extended, state_from_tag
from .estimators import CumulantEstimator, DensityMatrixReconstructor, EmpiricalTomogram, HomodyneSamples
from .probvec import StochasticMap, apply_map, make_portrait, shannon_entropy
from .qudit import reconstruct_density, spin_tomogram, unitary_tomogram, von_neumann_entropy, wigner_D

__all__ = [
    "DomainError",
    "InformationallyIncompleteError",
    "NumericalConsistencyError",
    "MGFDivergenceError",
    "StochasticMap",
    "apply_map",
    "make_portrait",
    "shannon_entropy",
    "unitary_tomogram",
    "spin_tomogram",
    "von_neumann_entropy",
    "wigner_D",
    "reconstruct_density",
    "WaveFunction",
    "analytic_tomogram",
    "state_from_tag",
    "check_state_extended",
    "cumulants",
    "gaussianity_deviation",
    "nongaussianity",
    "cumulant_report",
    "HomodyneSamples",
    "EmpiricalTomogram",
    "CumulantEstimator",
    "DensityMatrixReconstructor",
]
