"""Fock spaces with nearest-neighbor interactions: (gamma, phi)-deformed Fock
spaces over a finite-dimensional *-algebra, their moment and cumulant
combinatorics, Wick polynomials, norm estimates, traciality and the
C-deformed Hilbert-space variant."""

from .algebra import (AlgebraContext, InvalidAlgebra, from_dict, load_example, load_spec,
                      make_context, random_context, scalar_context, to_dict, validate_algebra)
from .fock import (FockContext, OperatorMatrix, a_minus, a_plus, a_zero, build_fock, moment,
                   x_op)

__all__ = [
    "AlgebraContext", "InvalidAlgebra", "from_dict", "load_example", "load_spec",
    "make_context", "random_context", "scalar_context", "to_dict", "validate_algebra",
    "FockContext", "OperatorMatrix", "a_minus", "a_plus", "a_zero", "build_fock", "moment",
    "x_op",
]
