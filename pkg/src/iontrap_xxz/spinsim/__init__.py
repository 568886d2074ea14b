"""Exact diagonalization and quench dynamics of finite spin-1/2 XXZ chains."""

from .ed import (EDResult, EigensolverError, FiniteSizeReport, finite_size_hc, ground_state_scan,
                 saturation_field, sector_crossings, sector_energies, single_magnon_field)
from .hamiltonian import DEFAULT_CAP, SizeError, SpinHamiltonian, build_hamiltonian, total_sx, total_sz
from .quench import (KZResult, QuenchProtocol, QuenchResult, StepUnderflow, defect_density, kz_sweep,
                     polarized_state, quench_evolve)
