"""Traveling waves of the delayed degenerate diffusion equation.

    u_t = D (u^m)_xx - d(u) + b(u(t - r, x))

Sub-modules:

- :mod:`sharpwaves.kinetics`  model instance, structural checks, derived constants
- :mod:`sharpwaves.charspec`  characteristic functions and speed thresholds
- :mod:`sharpwaves.profile`   method-of-steps profile integration and tail analysis
- :mod:`sharpwaves.shooting`  sharp speed by bisection, guards, empirical smooth threshold
- :mod:`sharpwaves.pdesim`    explicit finite-difference simulation of the PDE
- :mod:`sharpwaves.atlas`     delay sweeps and (r, c) classification
- :mod:`sharpwaves.cli`       command line entry point
"""

from .errors import DomainError, ModelError, NumericalError, ParameterError, RangeError
from .kinetics import (
    DerivedConstants,
    KineticsSpec,
    derive_constants,
    nicholson_reference,
)

__all__ = [
    "DerivedConstants",
    "DomainError",
    "KineticsSpec",
    "ModelError",
    "NumericalError",
    "ParameterError",
    "RangeError",
    "derive_constants",
    "nicholson_reference",
]

__version__ = "0.1.0"
