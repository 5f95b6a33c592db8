"""Transfer matrices, Lyapunov spectra, Zariski-density certificates and
integrated density of states for a three-layer (or N-layer) Schroedinger
operator with random point interactions at the integers."""

__version__ = "0.1.0"

from .errors import (ConfigError, DeltaChainError, InsufficientData, NumericalBreakdown,
                     ParameterError, PreconditionError, RegimeError)
from .transfer import ModelConfig

__all__ = ["__version__", "ModelConfig", "DeltaChainError", "ConfigError", "ParameterError",
           "PreconditionError", "RegimeError", "InsufficientData", "NumericalBreakdown"]
