"""Flow of the magnon interaction on both sides of the upper critical condition.

For sigma = 2.3 (epsilon = 0.3) weak couplings grow toward the interacting
fixed point eps*K_1; for sigma = 1.7 (epsilon = -0.3) every coupling flows
back to zero and mean-field exponents apply.

    python demos/rg_fixed_points.py
"""

from iontrap_xxz.exponents import exponent_set
from iontrap_xxz.rg import RGState, closed_form_flow, find_fixed_points, integrate_flow

for sigma in (2.3, 1.7):
    e = exponent_set(sigma)
    print(f"\nsigma={sigma}: phi={e.phi:.2f} epsilon={e.epsilon:+.2f}")
    for fp in find_fixed_points(e.epsilon, e.K_d, e.phi):
        print(f"  fixed point g*={fp.g_star:.6f} ({fp.stability})")
    for g0 in (0.2, 0.5, 1.5):
        tr = integrate_flow(RGState(g0, 0.0), e.epsilon, e.phi, e.K_d, b_min=-60)
        exact = closed_form_flow(g0, 0.0, tr.final.b, e.epsilon, e.phi, e.K_d).g
        print(f"  g0={g0:.1f} -> g={tr.final.g:.6f} at b={tr.final.b:.1f} "
              f"(closed form {exact:.6f}, {tr.termination})")
