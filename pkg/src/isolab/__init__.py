"""Numerical isomonodromic deformations of 2x2 Fuchsian systems.

Monodromy by path continuation, the Schlesinger flow with its tau-function,
reduction to a scalar equation, and Painleve VI / Garnier data.
"""

__version__ = "0.1.0"

from .errors import BlowupDetected, InvalidInput, IsolabError, NumericalAbort
from .fuchsian import DIAGONAL_K, SUM_ZERO, FuchsianSystem, ThetaData, reduce_to_scalar
from .schlesinger import ParamPath, SchlesingerState, flow
from .transport import loop_basis, monodromy

__all__ = [
    "BlowupDetected",
    "DIAGONAL_K",
    "FuchsianSystem",
    "InvalidInput",
    "IsolabError",
    "NumericalAbort",
    "ParamPath",
    "SUM_ZERO",
    "SchlesingerState",
    "ThetaData",
    "flow",
    "loop_basis",
    "monodromy",
    "reduce_to_scalar",
]
