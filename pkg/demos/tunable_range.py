"""Tune the interaction range of a 10-ion chain with the beatnote detuning.

Prints sigma, beta_Z and the Kibble-Zurek exponent at a handful of
dimensionless detunings, for the uneven harmonic-trap chain and for an
equally spaced one.

    python demos/tunable_range.py
"""

import math

import numpy as np

from iontrap_xxz.couplings import detuning_for, detuning_sweep
from iontrap_xxz.exponents import quench_exponents

delta_tilde = np.array([0.003, 0.03, 0.3, 1.0, 3.0, 10.0, 40.0])
res = detuning_sweep(10, "both", detuning_for(delta_tilde), with_prefactor=False)

for mode in ("real", "equidistant"):
    print(f"\n{mode} chain")
    print(f"{'delta_tilde':>12} {'sigma':>8} {'beta_Z':>8} {'zeta':>8}")
    for p in res.series(mode):
        zeta = quench_exponents(p.sigma).zeta if p.sigma > 1 else math.nan
        print(f"{p.delta_tilde:12.4g} {p.sigma:8.4f} {p.beta_z:8.4f} {zeta:8.4f}")

# close to the centre-of-mass mode every pair couples almost equally (sigma ~ 0);
# far from it the couplings approach the dipolar 1/r^3 limit
