"""Ellipticity and Fredholm checks for G-operators on manifolds with conical points."""
from .errors import GConeError, InputError, NumericalFailure
from .operator_model import (
    ConicalGOperator, make_generic_operator, make_halfline_operator, make_sphere_operator,
    identity_operator,
)

__version__ = "0.1.0"

__all__ = [
    "GConeError", "InputError", "NumericalFailure", "ConicalGOperator",
    "make_sphere_operator", "make_halfline_operator", "make_generic_operator",
    "identity_operator",
]
