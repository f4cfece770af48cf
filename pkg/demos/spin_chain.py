"""Classical Heisenberg chain of 100 spins from a smooth closed curve.

Total spin and every spin length are conserved to rounding error; the energy,
quadratic but not preserved exactly by the spherical method, stays within a
tiny bounded band.
"""

import numpy as np

from _common import out_path
from spinstep import StepConfig, closed_curve_state, heisenberg_chain, integrate
from spinstep import diagnostics as diag
from spinstep.csvio import write_table

rng = np.random.default_rng(0)
n = 100
H = heisenberg_chain(n)
w0 = closed_curve_state(n, rng)
traj = integrate(H, w0, 0.0, StepConfig(0.05), 2000)

S = traj.states.sum(axis=1)
print(f"energy deviation     {np.max(np.abs(traj.energies - traj.energies[0])):.1e}")
print(f"total spin deviation {np.max(np.abs(S - S[0])):.1e}")
print(f"radius deviation     {diag.radius_deviation(traj, 1.0):.1e}")

# Snapshots of the curve every 400 steps: one row per spin, columns per time.
snaps = traj.states[::400]
header = [f"{c}_t{t:g}" for t in traj.times[::400] for c in "xyz"]
write_table(out_path("spin_chain_snapshots.csv"), header, snaps.transpose(1, 0, 2).reshape(n, -1))
