"""Time-local master equation behind the scattering map.

Extracts the rates from the resonant alpha = 1 map, shows the negative-rate
window and the pole at the zero of delta, then integrates the master equation
from a random state and compares with the map.
"""

import warnings

import numpy as np

from scatterdm import PhysicalConfig
from scatterdm.dynamical_map import apply_map, random_state, solve_map, trace_distance
from scatterdm.master_equation import extract_rates, integrate_me, singular_windows
from scatterdm.two_excitation import lattice_for

cfg = PhysicalConfig(alpha=1.0)
traj, _, _ = solve_map(cfg, lattice_for(cfg, dt=5e-3, t_max=8.0))
rates = extract_rates(traj)

print("   t    gamma+    gamma-    gamma_z       S")
for t in (0.1, 0.5, 1.0, 2.0, 3.0, 5.0):
    i = int(round(t / rates.dt))
    print(f"{t:4.1f} {rates.gamma_plus[i]:9.4f} {rates.gamma_minus[i]:9.4f} {rates.gamma_z[i]:9.4f} {rates.S[i]:9.3f}")

ok = ~rates.singular
neg = np.flatnonzero(ok & (rates.gamma_minus < 0))
print(f"\ngamma- < 0 on {neg.size} samples, first at t = {rates.t[neg[0]]:.3f}")
for a, b in singular_windows(rates.singular):
    print(f"singular window t in [{rates.t[a]:.3f}, {rates.t[b - 1]:.3f}]")

rho0 = random_state(np.random.default_rng(5))
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    states, bad = integrate_me(rates, rho0, reseed=lambda i: apply_map(traj.snapshot(i), rho0))
d = [trace_distance(states[i], apply_map(traj.snapshot(i), rho0)) for i in np.flatnonzero(~bad & ok)]
print(f"master equation vs map: max trace distance {max(d):.1e}")
