"""Numerical toolkit for long-wave traveling waves in diatomic FPUT lattices."""

from .dispersion import DimerParams, RootReport, sound_speed
from .statespace import StateVector, SymmetryKind, jordan_chain

__all__ = [
    "DimerParams",
    "RootReport",
    "StateVector",
    "SymmetryKind",
    "jordan_chain",
    "sound_speed",
]
__version__ = "0.1.0"
