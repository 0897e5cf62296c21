"""Rigid-rotor excitation by a chirped, rotating drive.

Quantum ladder climbing and classical autoresonance in the two-parameter
``(p1, p2)`` description: coupling coefficients, lab-frame and
rotating-wave evolution, thermal ensembles, closed-form theory, classical
Monte Carlo and efficiency metrics.
"""

__version__ = "0.1.0"

from .analysis import EfficiencyReport, bunch_width, efficiency, target_l
from .basis import BasisMap, StateVector, build_basis, build_chain
from .coupling import CouplingTable, b_coefficient, build_coupling, coefficient
from .errors import IntegrationError, InvalidInputError
from .evolve import EvolveConfig, Trajectory, crossing_time, evolve_full, evolve_rwa_chain, two_level_lz
from .params import DimensionlessParams, DrivePulse, PhysicalParams, derive_params, drive_phase, thermal_lc
from .theory import classify_regime, efficient_lc_threshold, lc_efficiency, lz_probability

__all__ = [
    "BasisMap",
    "CouplingTable",
    "DimensionlessParams",
    "DrivePulse",
    "EfficiencyReport",
    "EvolveConfig",
    "IntegrationError",
    "InvalidInputError",
    "PhysicalParams",
    "StateVector",
    "Trajectory",
    "b_coefficient",
    "build_basis",
    "build_chain",
    "build_coupling",
    "bunch_width",
    "classify_regime",
    "coefficient",
    "crossing_time",
    "derive_params",
    "drive_phase",
    "efficiency",
    "efficient_lc_threshold",
    "evolve_full",
    "evolve_rwa_chain",
    "lc_efficiency",
    "lz_probability",
    "target_l",
    "thermal_lc",
    "two_level_lz",
]
