"""Z_K-periodic variational dynamics and quantum leakage of the spin-J blockade chain."""

from .dynamics import (Velocity, eom_exact, eom_large_j, eom_series, eom_spin_half,
                       semiclassical_energy, variational_energy)
from .gram import GramBundle, gram_blocks, inverse_im_g_thetaphi
from .integrator import Trajectory, evolve, step
from .leakage import VarianceReport, energy_variance, leakage_large_j, leakage_rate, leakage_spin_half
from .model import (DegenerateManifoldError, ModelError, ModelParams, ParameterError, PoleError,
                    ResonanceError, Sites, VariationalState, WrongSpinError, derive_sites, validate)
from .transfer import block_transfer, dominant_pair, site_transfer

__all__ = [
    "ModelParams", "VariationalState", "Sites", "derive_sites", "validate",
    "ModelError", "ParameterError", "DegenerateManifoldError", "PoleError", "ResonanceError",
    "WrongSpinError",
    "site_transfer", "block_transfer", "dominant_pair",
    "GramBundle", "gram_blocks", "inverse_im_g_thetaphi",
    "Velocity", "eom_exact", "eom_series", "eom_spin_half", "eom_large_j",
    "variational_energy", "semiclassical_energy",
    "VarianceReport", "energy_variance", "leakage_rate", "leakage_spin_half", "leakage_large_j",
    "Trajectory", "step", "evolve",
]

__version__ = "0.1.0"
