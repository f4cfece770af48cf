"""Rigid body with direction-dependent inertia: bounded versus drifting energy.

The energy is cubic, so neither midpoint rule conserves it exactly. The
spherical method is symplectic and its energy error stays bounded; the
classical midpoint rule is not symplectic on the sphere and its error grows.
"""

import numpy as np

from _common import out_path
from spinstep import StepConfig, integrate, irreversible_rigid_body, spin_state
from spinstep.csvio import write_table

H = irreversible_rigid_body((1.0, 2.0, 4.0), sigma=2.0 / 3.0)
w0 = spin_state([[0.0, 0.7248, -0.6889]])
cfg = StepConfig(0.5)
steps = 8000

dev = {}
for method in ("spherical", "classical"):
    traj = integrate(H, w0, 0.0, cfg, steps, method)
    dev[method] = np.abs(traj.energies - traj.energies[0])

for k in (500, 2000, 4000, 8000):
    s, c = dev["spherical"][: k + 1].max(), dev["classical"][: k + 1].max()
    print(f"{k:5d} steps: spherical {s:.3e}  classical {c:.3e}  ratio {c / s:.2f}")

times = cfg.h * np.arange(steps + 1)
write_table(out_path("irreversible_energy.csv"), ["t", "spherical_dH", "classical_dH"],
            np.column_stack([times, dev["spherical"], dev["classical"]]))
