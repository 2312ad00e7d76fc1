"""Dynamical and structural stability measures for linear(ized) dynamics.

The harmonic measure ``1 / sup |(i w - A)^-1|``, complex and real stability
radii, the white-noise measure ``1 / |Ahat^-1|`` of the lifted operator
``C -> A C + C A^T`` with its destabilizing internal noise, and an
Euler-Maruyama simulator for checking them empirically.
"""

__version__ = "0.1.0"

from .destabilizer import (PerturbationOperator, build_perturbation,
                           destabilizing_harmonic_perturbation,
                           destabilizing_stochastic_perturbation,
                           stochastic_structural_stability)
from .errors import (DefectiveMatrixError, DimensionError, InvariantViolation,
                     MarginallyStableError, MatrixParseError, NumericalError,
                     SingularMatrixError, StabkitError, UnstableMatrixError)
from .experiments import StabilityReport, stability_report
from .lifted import lift, stationary_covariance, white_noise_dynamical_stability
from .linalg import spectral_abscissa
from .resolvent import (complex_stability_radius, harmonic_dynamical_stability,
                        real_stability_radius)
from .stochastic import AdditiveNoise, MultiplicativeNoise, SdeSpec, simulate

__all__ = [
    "AdditiveNoise", "DefectiveMatrixError", "DimensionError", "InvariantViolation",
    "MarginallyStableError", "MatrixParseError", "MultiplicativeNoise", "NumericalError",
    "PerturbationOperator", "SdeSpec", "SingularMatrixError", "StabilityReport",
    "StabkitError", "UnstableMatrixError", "build_perturbation", "complex_stability_radius",
    "destabilizing_harmonic_perturbation", "destabilizing_stochastic_perturbation",
    "harmonic_dynamical_stability", "lift", "real_stability_radius", "simulate",
    "spectral_abscissa", "stability_report", "stationary_covariance",
    "stochastic_structural_stability", "white_noise_dynamical_stability",
]
