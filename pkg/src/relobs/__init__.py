"""Exact operator algebra for Galilean few-body observables, with grid numerics to check it."""

from .algebra import (GaussianRational, OperatorPoly, ParticleSystem, PotentialAtom,
                      SubstitutionMap, commutator, substitute)
from .expr import format_poly, parse_and_lower, parse_expression
from .reduction import (LinearFrameMap, apply_frame_map, jacobi_map, project_cm,
                        reduce_hamiltonian)
from .symmetry import SymmetrySelection, classify

__version__ = "0.1.0"

__all__ = [
    "GaussianRational", "LinearFrameMap", "OperatorPoly", "ParticleSystem", "PotentialAtom",
    "SubstitutionMap", "SymmetrySelection", "apply_frame_map", "classify", "commutator",
    "format_poly", "jacobi_map", "parse_and_lower", "parse_expression", "project_cm",
    "reduce_hamiltonian", "substitute",
]
