"""Rotational wavepacket Ramsey interferometry of a trapped linear molecular ion."""
from .dynamics import (
    ConvergenceError,
    PropagationSettings,
    RotorState,
    apply_sequence,
    correlation,
    propagate_free,
    propagate_pulse,
)
from .ensemble import (
    InitialDistribution,
    ensemble_populations,
    load_distribution,
    pure_ground,
    surrogate_experimental,
    thermal,
)
from .interferometry import Interferogram, revival_time, scan_interferogram, spectrum, visibility
from .pulse import PulseSpec, fluence, intensity_at, support_window
from .rotor import BasisSpec, MolecularParams, cos2_matrix, rotational_energy

__version__ = "0.1.0"

__all__ = [
    "BasisSpec", "ConvergenceError", "InitialDistribution", "Interferogram", "MolecularParams",
    "PropagationSettings", "PulseSpec", "RotorState", "apply_sequence", "correlation",
    "cos2_matrix", "ensemble_populations", "fluence", "intensity_at", "load_distribution",
    "propagate_free", "propagate_pulse", "pure_ground", "revival_time", "rotational_energy",
    "scan_interferogram", "spectrum", "support_window", "surrogate_experimental", "thermal",
    "visibility",
]
