"""Ramp a small XXZ chain through the saturation field at several rates.

Faster ramps leave more bonds without XY order. The log-log slope from ten
or so spins is printed next to the thermodynamic prediction; the two are not
expected to agree at these sizes.

    python demos/kibble_zurek.py [n_sites]
"""

import sys

import numpy as np

from iontrap_xxz.model_map import ModelSpec, critical_field
from iontrap_xxz.spinsim import QuenchProtocol, kz_sweep, quench_evolve

n = int(sys.argv[1]) if len(sys.argv) > 1 else 8
model = ModelSpec(sigma=2.3, lam=0.5, n_sites=n)
hc = critical_field(model).value
print(f"N={n}  mean-field h_c (largest site) = {hc:.4f}")

slow = quench_evolve(model, QuenchProtocol(h0=1.5 * hc, rate=0.01))
print(f"slow ramp: fidelity with the final ground state {slow.final_ground_fidelity:.4f}, "
      f"{slow.steps} steps, norm drift {slow.max_norm_drift:.1e}")

kz = kz_sweep(model, np.geomspace(0.02, 5, 7))
for v, rho in zip(kz.rates, kz.densities):
    print(f"  rate {v:8.4f}  defect density {rho:.4f}")
print(f"fitted slope {kz.slope:.3f} +- {kz.slope_stderr:.3f}; predicted zeta {kz.zeta_predicted:.4f}")
