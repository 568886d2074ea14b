"""Trapped-ion simulation of the long-range ferromagnetic XXZ chain.

Phonon modes of a linear Paul trap, the phonon-mediated spin-spin couplings
and their power-law decay, the map to XXZ model parameters, critical
exponents, one-loop RG flows, and exact diagonalization / quench checks on
small chains.
"""

__version__ = "0.1.0"

from .couplings import BeamParams, CouplingMatrix, detuning_sweep, effective_couplings, fit_power_law
from .exponents import ExponentSet, exponent_set, quench_exponents
from .model_map import ExperimentParams, ModelSpec, critical_field, experiment_to_model, phase_boundary
from .phonons import TrapSpec, longitudinal_modes, solve_equilibrium
from .rg import RGState, closed_form_flow, find_fixed_points, integrate_flow
