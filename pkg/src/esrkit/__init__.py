"""Spin-Hamiltonian ESR toolkit: level structure, transmission maps, line
analysis, ligand-field g-factors and detection sensitivity."""

from .constants import CONSTANTS, PhysicalConstants
from .spin import OperatorSet, embed_product, spin_matrices, validate_spin
from .eigen import ConvergenceError, eigensolve
from .hamiltonian import (
    SpinSystem,
    TransitionLine,
    build_hamiltonian,
    resonance_fields,
    transition_frequency,
    transition_table,
)

__all__ = [
    "CONSTANTS",
    "PhysicalConstants",
    "OperatorSet",
    "embed_product",
    "spin_matrices",
    "validate_spin",
    "ConvergenceError",
    "eigensolve",
    "SpinSystem",
    "TransitionLine",
    "build_hamiltonian",
    "resonance_fields",
    "transition_frequency",
    "transition_table",
]

__version__ = "0.1.0"
