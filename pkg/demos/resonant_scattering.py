"""Resonant single-photon scattering on a qubit in an infinite waveguide.

Builds the dynamical map from the solver, compares it with the closed forms,
and shows the window where the map reflects the Bloch ball through the XY
plane (det M < 0) while staying completely positive.

    python3 demos/resonant_scattering.py [alpha]
"""

import sys

import numpy as np

from scatterdm import PhysicalConfig
from scatterdm.dynamical_map import choi_min_eig, solve_map
from scatterdm.nm_measures import blp_measure, delta_stationary_analysis, gm_measure
from scatterdm.two_excitation import closed_form_resonant, lattice_for

alpha = float(sys.argv[1]) if len(sys.argv) > 1 else 1.0
cfg = PhysicalConfig(alpha=alpha)
traj, _, _ = solve_map(cfg, lattice_for(cfg, dt=2e-3, t_max=10.0))

p_g, p_e, c = closed_form_resonant(traj.t, alpha, cfg.omega0)
print(f"alpha = {alpha}")
print(f"solver vs closed form: p_g {np.abs(traj.p_g - p_g).max():.1e}, "
      f"p_e {np.abs(traj.p_e - p_e).max():.1e}, c {np.abs(traj.c - c).max():.1e}")

print("\n   t     p_g      p_e      |c|     delta")
for t in (0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0):
    i = int(round(t / (traj.t[1] - traj.t[0])))
    print(f"{t:5.1f}  {traj.p_g[i]:.4f}  {traj.p_e[i]:.4f}  {abs(traj.c[i]):.4f}  {traj.delta[i]:+.5f}")

res = delta_stationary_analysis(alpha)
if res["count"]:
    print(f"\ndelta minimum {res['delta_min']:.3e} at t = {res['t_star']:.4f}")
else:
    print("\ndelta stays nonnegative")

neg = np.flatnonzero(traj.det_M < 0)
if neg.size:
    worst = min(choi_min_eig(traj.snapshot(i)) for i in neg)
    print(f"det M < 0 on t in [{traj.t[neg[0]]:.2f}, {traj.t[neg[-1]]:.2f}], "
          f"smallest Choi eigenvalue there {worst:.3f} (map stays CP)")
print(f"GM = {gm_measure(traj):.4f}, BLP = {blp_measure(traj):.4f}")
