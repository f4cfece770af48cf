"""Nambu systems: the Lagrange top equations and the quadratic Casimir catalog.

``w1' = w2 w3, w2' = w3 w1, w3' = w1 w2`` keeps ``C = (w1^2 - w2^2)/2`` and
``H = (w1^2 - w3^2)/2``. From ``(2, 1, 1)`` the exact solution reaches
infinity near ``t = 0.76``; the discrete orbit follows it until the implicit
equation stops having a nearby root, and both invariants hold along the way.
"""

import numpy as np

from spinstep import NambuSystem, StepConfig, casimir_catalog, integrate_nambu, lagrange_system
from spinstep.errors import SpinStepError

sys_ = lagrange_system()
cfg = StepConfig(0.05)
try:
    integrate_nambu(sys_, [2.0, 1.0, 1.0], cfg, 1000)
except SpinStepError as exc:
    print(f"lagrange: solver stops at step {exc.step_index} (t = {exc.step_index * cfg.h:.2f})")
    k = exc.step_index
traj = integrate_nambu(sys_, [2.0, 1.0, 1.0], cfg, k)
C = np.array([sys_.casimir(s[0]) for s in traj.states])
print(f"  |w| grows to {np.linalg.norm(traj.final):.1f}; max |dC| {np.abs(C - C[0]).max():.1e}, "
      f"max |dH| {np.abs(traj.energies - traj.energies[0]).max():.1e}")
print(f"  exact blow-up time {np.log((2 + np.sqrt(3)) / (2 - np.sqrt(3))) / (2 * np.sqrt(3)):.3f}")

rng = np.random.default_rng(3)
for name, M in casimir_catalog():
    B = rng.standard_normal((3, 3))
    A = B.T @ B + np.eye(3)
    A /= np.linalg.norm(A, 2)
    w0 = rng.standard_normal(3)
    nsys = NambuSystem.on_level_of(2 * M, lambda w, A=A: 0.5 * w @ A @ w, lambda w, A=A: A @ w, w0, name)
    tr = integrate_nambu(nsys, w0, cfg, 1000)
    C = np.array([nsys.casimir(s[0]) for s in tr.states])
    print(f"{name}: max |dC| {np.abs(C - C[0]).max():.1e}, max |dH| {np.abs(tr.energies - tr.energies[0]).max():.1e}")
