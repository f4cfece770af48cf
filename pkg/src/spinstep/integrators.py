"""Midpoint-type one-step maps and the implicit solver behind them.

Three maps are provided, all implicit and all solved by the same routine:

* ``classical_midpoint_step``: ``W - w = h X((w + W)/2)`` on R^(3n).
* ``spherical_midpoint_step``: ``W - w = h xi(rho(w + W))`` on (S^2)^n.
* ``extended_spherical_step``: ``W - w = h X(Gamma(w, W))`` on R^(3n),
  a Lie-Poisson integrator that keeps every sphere radius.

Time-dependent systems are evaluated at ``t + h/2``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, NoConvergenceError
from .sphere import _gamma, as_ambient, norms, projected_sum
from .systems import SpinHamiltonian, field_of

METHODS = ("spherical", "classical", "extended")


@dataclass(frozen=True)
class StepConfig:
    """Step size and implicit-solver settings.

    ``h`` may be negative to run a map backwards in time (used for
    self-adjointness checks); it must be nonzero.
    """

    h: float
    solver_tol: float = 1e-13
    max_iterations: int = 100
    newton_fallback: bool = True
    fd_delta: float = 1e-7

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h != 0):
            raise ValueError(f"step size must be finite and nonzero, got {self.h}")
        if not self.solver_tol > 0:
            raise ValueError("solver_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not self.fd_delta > 0:
            raise ValueError("fd_delta must be positive")

    def replace(self, **changes) -> "StepConfig":
        return dataclasses.replace(self, **changes)

    def reversed(self) -> "StepConfig":
        return self.replace(h=-self.h)


class SolverInfo(NamedTuple):
    iterations: int
    residual_norm: float
    strategy: str


@dataclass
class Trajectory:
    """Discrete trajectory ``w_0, w_1, ...`` with optional energies.

    ``states`` has shape ``(steps + 1, n, 3)``.
    """

    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray | None = None
    iterations: np.ndarray | None = None

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _max_norm(r) -> float:
    return float(np.max(np.abs(r)))


def solve_implicit(residual: Callable, guess, cfg: StepConfig, full_output: bool = False):
    """Find ``W`` with ``max|residual(W)| <= cfg.solver_tol``.

    The residual is assumed to have the natural form ``W - F(W)``, so the
    first strategy is the fixed-point iteration ``W <- W - residual(W)``.
    If that fails within ``cfg.max_iterations`` (or diverges, or steps
    outside the domain of the residual) and ``cfg.newton_fallback`` is set,
    a damped Newton iteration with a forward-difference Jacobian takes over
    from the best iterate seen.

    Args:
        residual: map from an array to an array of the same shape.
        guess: initial iterate; must lie in the domain of ``residual``.
        cfg: solver settings.
        full_output: also return a :class:`SolverInfo`.

    Raises:
        NoConvergenceError: neither strategy reached the tolerance.
    """
    tol = cfg.solver_tol
    W = np.array(guess, dtype=np.result_type(guess, float), copy=True)
    r = residual(W)
    norm = _max_norm(r)
    best_W, best_r, best_norm = W, r, norm
    iterations = 0

    if norm <= tol:
        return (W, SolverInfo(0, norm, "none")) if full_output else W

    stalled = 0
    while iterations < cfg.max_iterations:
        iterations += 1
        W_next = W - r
        try:
            r_next = residual(W_next)
        except DomainError:
            break
        norm_next = _max_norm(r_next)
        if not np.isfinite(norm_next):
            break
        W, r, norm = W_next, r_next, norm_next
        if norm <= tol:
            # The residual is already computed, so one more update is free;
            # it also makes linear invariants of the field exact.
            W = W - r
            return (W, SolverInfo(iterations, norm, "fixed-point")) if full_output else W
        if norm < best_norm:
            best_W, best_r, best_norm = W, r, norm
            stalled = 0
        else:
            stalled += 1
            if stalled >= 5 or norm > 1e6 * (best_norm + 1.0):
                break

    if not cfg.newton_fallback:
        raise NoConvergenceError(best_norm, iterations)

    W, r, norm = best_W, best_r, best_norm
    size = W.size
    shape = W.shape
    for _ in range(cfg.max_iterations):
        iterations += 1
        J = np.empty((size, size), dtype=W.dtype)
        flat = W.reshape(-1)
        base = r.reshape(-1)
        try:
            for k in range(size):
                step = cfg.fd_delta * max(1.0, abs(float(flat[k])))
                Wk = flat.copy()
                Wk[k] += step
                J[:, k] = (residual(Wk.reshape(shape)).reshape(-1) - base) / step
        except DomainError:
            break
        try:
            dx = np.linalg.solve(J, -base)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -base, rcond=None)[0]
        dx = dx.reshape(shape)
        alpha = 1.0
        accepted = False
        while alpha > 1e-4:
            W_try = W + alpha * dx
            try:
                r_try = residual(W_try)
            except DomainError:
                alpha *= 0.5
                continue
            n_try = _max_norm(r_try)
            if np.isfinite(n_try) and n_try < norm:
                W, r, norm = W_try, r_try, n_try
                accepted = True
                break
            alpha *= 0.5
        if norm <= tol:
            return (W, SolverInfo(iterations, norm, "newton")) if full_output else W
        if not accepted:
            break

    raise NoConvergenceError(norm, iterations)


def _is_hamiltonian(system) -> bool:
    return isinstance(system, SpinHamiltonian)


def _field(system) -> Callable:
    """Ambient field ``(w, t) -> X(w, t)`` for a Hamiltonian or a bare callable."""
    if _is_hamiltonian(system):
        return field_of(system)
    return system


def spherical_midpoint_step(system, w, t: float, cfg: StepConfig, full_output: bool = False):
    """One step of the spherical midpoint method.

    Solves ``W - w = h xi(rho(w + W))`` where ``xi`` is the Hamiltonian field
    of ``system`` (or ``system`` itself if it is a callable ``(u, t) -> xi``)
    evaluated at time ``t + h/2``. On (S^2)^n the result stays on the spheres
    because the classical midpoint rule conserves quadratic invariants; no
    renormalization is applied.

    Accepts any ambient state with nonzero rows, which is what the
    finite-difference Jacobian checks rely on.
    """
    w = as_ambient(w)
    xi = _field(system)
    h = cfg.h
    tm = t + 0.5 * h

    def residual(W):
        return W - w - h * xi(projected_sum(w, W), tm)

    return solve_implicit(residual, w, cfg, full_output)


def classical_midpoint_step(system, w, t: float, cfg: StepConfig, full_output: bool = False):
    """One step of the classical midpoint rule ``W - w = h X((w + W)/2)``."""
    w = as_ambient(w)
    X = _field(system)
    h = cfg.h
    tm = t + 0.5 * h

    def residual(W):
        return W - w - h * X(0.5 * (w + W), tm)

    return solve_implicit(residual, w, cfg, full_output)


def extended_spherical_step(system, w, t: float, cfg: StepConfig, full_output: bool = False):
    """One step of the extended spherical midpoint method on R^(3n).

    Solves ``W - w = h X(Gamma(w, W))``; for Hamiltonian fields each radius
    ``|w_i|`` is conserved and on unit spheres the map coincides with
    :func:`spherical_midpoint_step`.
    """
    w = as_ambient(w)
    X = _field(system)
    h = cfg.h
    tm = t + 0.5 * h
    norms_w = norms(w)
    if np.any(~(norms_w > 0)):
        _gamma(w, w)  # raises ZeroVectorError naming the sphere

    def residual(W):
        return W - w - h * X(_gamma(w, W), tm)

    return solve_implicit(residual, w, cfg, full_output)


STEPPERS = {
    "spherical": spherical_midpoint_step,
    "classical": classical_midpoint_step,
    "extended": extended_spherical_step,
}


def get_stepper(method: str) -> Callable:
    try:
        return STEPPERS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}") from None


def integrate(
    system,
    w0,
    t0: float,
    cfg: StepConfig,
    steps: int,
    method: str = "spherical",
    record_energy: bool = True,
) -> Trajectory:
    """Apply a one-step map ``steps`` times.

    Args:
        system: a :class:`SpinHamiltonian` or a field ``(w, t) -> X``.
        w0: initial state, shape ``(n, 3)``. For ``method="spherical"`` it
            must lie on (S^2)^n.
        t0: initial time; ``times[k] = t0 + k h``.
        cfg: step size and solver settings.
        steps: number of steps, ``>= 0``.
        method: ``"spherical"``, ``"classical"`` or ``"extended"``.
        record_energy: store ``H(w_k, t_k)``; needs a Hamiltonian.

    Raises:
        NoConvergenceError, DomainError: from the failing step, with the
            attribute ``step_index`` set.
    """
    stepper = get_stepper(method)
    if steps < 0:
        raise ValueError("steps must be non-negative")
    w = as_ambient(w0).copy()
    if method == "spherical" and np.any(np.abs(norms(w) - 1.0) > 1e-10):
        raise ValueError("spherical midpoint method needs an initial state on (S^2)^n")
    record_energy = record_energy and _is_hamiltonian(system)

    times = t0 + cfg.h * np.arange(steps + 1)
    states = np.empty((steps + 1,) + w.shape, dtype=w.dtype)
    states[0] = w
    its = np.zeros(steps + 1, dtype=int)
    for k in range(steps):
        try:
            w, info = stepper(system, w, times[k], cfg, full_output=True)
        except (NoConvergenceError, DomainError) as exc:
            exc.step_index = k
            exc.args = (f"step {k}: {exc.args[0] if exc.args else exc}",)
            raise
        states[k + 1] = w
        its[k + 1] = info.iterations

    energies = None
    if record_energy:
        energies = np.array([system.value(s, t) for s, t in zip(states, times)])
    return Trajectory(times, states, energies, its)
