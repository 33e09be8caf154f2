"""Dirac partitioned unitary QCA, its coarse-graining channel and emergent classical limits."""

__version__ = "0.1.0"

from .coarse import CGSchedule, CoarseTrajectory, cg_jump, cg_once, check_block_sorted, run_cg_trajectory
from .dynamics import StepSchedule, evolve, step_amplitudes, step_density, theta_from_mass
from .lattice import (
    AmplitudeField,
    LatticeConfig,
    SiteIndex,
    density_from_amplitudes,
    init_centered_superposition,
    init_population_profile,
    init_single_excitation,
)

__all__ = [
    "AmplitudeField",
    "CGSchedule",
    "CoarseTrajectory",
    "LatticeConfig",
    "SiteIndex",
    "StepSchedule",
    "cg_jump",
    "cg_once",
    "check_block_sorted",
    "density_from_amplitudes",
    "evolve",
    "init_centered_superposition",
    "init_population_profile",
    "init_single_excitation",
    "run_cg_trajectory",
    "step_amplitudes",
    "step_density",
    "theta_from_mass",
]
