"""Numerics for a pinned chain with gradient and Laplacian interaction.

The free field is linearized by a positive transfer operator whose Perron
eigenfunctions define a Markov chain; its integral bridges reproduce the free
partition function, and a renewal construction bounds the pinned free energy
from below by a strictly positive rate for every reward ``eps > 0``.
"""

__version__ = "0.1.0"

from .exceptions import (AccuracyError, CertificationError, ConfigError, ConsistencyError,
                         ConvergenceError, DataError, DomainError, NumericalError,
                         PinningError, RangeError, SizeError, SpecError)
from .potentials import (Potential, PotentialSpec, QuadratureConfig, certify_assumptions,
                         eval_potential, require_certified)
from .spectral import Grid, principal_eigen, build_kernel, spectral_data

__all__ = [
    "__version__", "Potential", "PotentialSpec", "QuadratureConfig", "certify_assumptions",
    "eval_potential", "require_certified", "Grid", "build_kernel", "principal_eigen",
    "spectral_data", "PinningError", "ConfigError", "DomainError", "SizeError",
    "CertificationError", "SpecError", "NumericalError", "ConvergenceError",
    "AccuracyError", "RangeError", "ConsistencyError", "DataError",
]
