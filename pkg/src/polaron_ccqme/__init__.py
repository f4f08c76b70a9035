"""Polaron-frame canonically consistent quantum master equations.

Builds Redfield and mean-force-corrected (CCQME) generators in the polaron
frame and in the original frame for N-level systems linearly coupled to a
bosonic bath, and provides propagation, steady states, Liouvillian gaps and
batch experiments on top of them.
"""

__version__ = "0.1.0"

from .model import (
    BathSpec,
    SpinBosonSpec,
    SuperOhmic,
    SystemSpec,
    Tabulated,
    build_system_hamiltonian,
    spin_boson_to_general,
)
from .polaron import build_polaron_frame, diagonalize
from .generators import build_model, liouvillian, q_mfg_tensor, redfield_tensor
from .dynamics import mfg_state, propagate, spectral_decompose, steady_state

__all__ = [
    "BathSpec",
    "SpinBosonSpec",
    "SuperOhmic",
    "SystemSpec",
    "Tabulated",
    "build_system_hamiltonian",
    "spin_boson_to_general",
    "build_polaron_frame",
    "diagonalize",
    "build_model",
    "liouvillian",
    "q_mfg_tensor",
    "redfield_tensor",
    "mfg_state",
    "propagate",
    "spectral_decompose",
    "steady_state",
]
