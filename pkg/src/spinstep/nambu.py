"""Nambu systems ``w' = grad C x grad H`` on R^3 with a homogeneous quadratic Casimir.

On a level set ``C(w) = c != 0`` the classical midpoint rule applied to the
rescaled Hamiltonian ``H(w / sqrt(C(w)/c))`` is symplectic. With
``C = |w|^2 / 2`` and ``c = 1`` it reduces to the spherical midpoint method.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidLevelError, SpinStepError
from .integrators import StepConfig, Trajectory, solve_implicit
from .sphere import as_array, cross

LEVEL_TOL = 1e-14


@dataclass(frozen=True)
class NambuSystem:
    """Casimir ``C(w) = 1/2 w^T C_matrix w``, Hamiltonian ``H`` and level ``c``."""

    C_matrix: np.ndarray
    H: Callable
    grad_H: Callable
    c: float
    name: str = "nambu"

    def __post_init__(self):
        M = np.asarray(self.C_matrix, dtype=float)
        if M.shape != (3, 3):
            raise ValueError(f"C_matrix must be 3x3, got {M.shape}")
        if np.max(np.abs(M - M.T)) > 1e-12:
            raise ValueError("C_matrix must be symmetric")
        if self.c == 0:
            raise ValueError("the level c must be nonzero")
        object.__setattr__(self, "C_matrix", M)

    def casimir(self, w) -> float:
        w = as_array(w)
        return 0.5 * float(w @ self.C_matrix @ w)

    @classmethod
    def on_level_of(cls, C_matrix, H, grad_H, w0, name="nambu"):
        """Build the system whose level value is ``C(w0)``."""
        w0 = np.asarray(w0, dtype=float)
        c = 0.5 * float(w0 @ np.asarray(C_matrix, dtype=float) @ w0)
        return cls(C_matrix, H, grad_H, c, name)


def lagrange_system(w0=(2.0, 1.0, 1.0)) -> NambuSystem:
    """``w1' = w2 w3, w2' = w3 w1, w3' = w1 w2`` with ``C = (w1^2 - w2^2)/2``, ``H = (w1^2 - w3^2)/2``."""
    C = np.diag([1.0, -1.0, 0.0])
    A = np.diag([1.0, 0.0, -1.0])

    def H(w):
        return 0.5 * (w[0] * w[0] - w[2] * w[2])

    def grad_H(w):
        return A @ w

    return NambuSystem.on_level_of(C, H, grad_H, w0, name="lagrange")


def nambu_field(sys: NambuSystem, w) -> np.ndarray:
    """``grad C(w) x grad H(w) = (C_matrix w) x grad H(w)``."""
    w = as_array(w)
    return cross(sys.C_matrix @ w, sys.grad_H(w))


def _scale(sys: NambuSystem, w):
    ratio = 0.5 * (w @ sys.C_matrix @ w) / sys.c
    if not ratio > LEVEL_TOL:
        raise InvalidLevelError(f"C(w)/c = {float(ratio):.3e} is not positive")
    return 1.0 / np.sqrt(ratio)


def scaled_hamiltonian(sys: NambuSystem) -> Callable:
    """Return ``w -> H(w / sqrt(C(w)/c))``, constant along rays of ``w``."""

    def H_scaled(w):
        w = as_array(w)
        return sys.H(_scale(sys, w) * w)

    return H_scaled


def scaled_hamiltonian_gradient(sys: NambuSystem, w) -> np.ndarray:
    """Gradient of :func:`scaled_hamiltonian` by the chain rule.

    With ``s = (C(w)/c)^(-1/2)`` and ``g = grad H(s w)``:
    ``grad = s g - s^3 (w . g) C_matrix w / (2 c)``.
    """
    w = as_array(w)
    s = _scale(sys, w)
    g = sys.grad_H(s * w)
    return s * g - (s**3 * (w @ g) / (2.0 * sys.c)) * (sys.C_matrix @ w)


def projected_nambu_field(sys: NambuSystem, w) -> np.ndarray:
    """Nambu field of the rescaled Hamiltonian; it is constant on rays."""
    w = as_array(w)
    return cross(sys.C_matrix @ w, scaled_hamiltonian_gradient(sys, w))


def nambu_midpoint_step(sys: NambuSystem, w, cfg: StepConfig, full_output: bool = False):
    """Classical midpoint step of the rescaled Nambu field.

    Conserves ``C`` (a quadratic invariant) and, when ``H`` is a homogeneous
    quadratic, ``H`` as well.
    """
    w = as_array(w)
    if w.shape != (3,):
        raise ValueError(f"Nambu systems act on R^3, got shape {w.shape}")
    _scale(sys, w)
    h = cfg.h

    def residual(W):
        return W - w - h * projected_nambu_field(sys, 0.5 * (w + W))

    return solve_implicit(residual, w, cfg, full_output)


def integrate_nambu(sys: NambuSystem, w0, cfg: StepConfig, steps: int, t0: float = 0.0) -> Trajectory:
    """Repeated :func:`nambu_midpoint_step`; ``energies`` holds ``H(w_k)``."""
    w = as_array(w0).astype(float)
    if abs(sys.casimir(w) - sys.c) > 1e-10 * max(1.0, abs(sys.c)):
        raise InvalidLevelError(f"initial state has C = {sys.casimir(w)}, expected {sys.c}")
    states = np.empty((steps + 1, 3))
    states[0] = w
    for k in range(steps):
        try:
            w = nambu_midpoint_step(sys, w, cfg)
        except SpinStepError as exc:
            exc.step_index = k
            raise
        states[k + 1] = w
    times = t0 + cfg.h * np.arange(steps + 1)
    energies = np.array([sys.H(s) for s in states])
    return Trajectory(times, states[:, None, :], energies)


CASIMIR_CATALOG = {
    # name: (polynomial, Lie algebra)
    "A3,1": ("w1^2", "Heisenberg"),
    "A3,4": ("w1*w2", "e(1,1)"),
    "A3,6": ("w1^2 + w2^2", "e(2)"),
    "A3,8": ("w2^2 + w1*w3", "su(1,1), sl(2)"),
    "A3,9": ("w1^2 + w2^2 + w3^2", "su(2), so(3)"),
}


def casimir_catalog() -> list[tuple[str, np.ndarray]]:
    """Quadratic Casimirs of the five 3-dimensional Lie algebras that have one.

    Each matrix ``M`` is symmetric with ``w^T M w`` equal to the listed
    polynomial (so ``w1 w2`` has off-diagonal entries 1/2). Pass ``2 M`` as
    :attr:`NambuSystem.C_matrix` to get the same polynomial as ``C``.
    """
    A31 = np.diag([1.0, 0.0, 0.0])
    A34 = np.array([[0.0, 0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]])
    A36 = np.diag([1.0, 1.0, 0.0])
    A38 = np.array([[0.0, 0.0, 0.5], [0.0, 1.0, 0.0], [0.5, 0.0, 0.0]])
    A39 = np.eye(3)
    return [("A3,1", A31), ("A3,4", A34), ("A3,6", A36), ("A3,8", A38), ("A3,9", A39)]
