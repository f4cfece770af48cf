"""Numerical checks of the structural properties of the midpoint maps.

Every check returns a :class:`DiagnosticReport` (or plain numbers for the
convergence studies) and is deterministic given its inputs and ``seed``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, NoConvergenceError
from .integrators import StepConfig, get_stepper, integrate
from .sphere import (
    as_ambient,
    geodesic_distance,
    geodesic_midpoint,
    norms,
    rotate,
)
from .systems import (
    SpinHamiltonian,
    field_of,
    hamiltonian_vector_field,
    point_vortices,
    poisson_bivector,
    radial_shift,
    rotated_hamiltonian,
)

# Finite-difference Jacobians are evaluated in extended precision where the
# platform has it (80-bit on x86), which pushes the rounding floor below the
# truncation error for deltas down to 1e-6.
FD_DTYPE = np.longdouble if np.finfo(np.longdouble).eps < np.finfo(float).eps else np.float64


@dataclass(frozen=True)
class DiagnosticReport:
    name: str
    max_violation: float
    tolerance: float
    details: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.max_violation <= self.tolerance)

    def to_line(self) -> str:
        """``name,max_violation,tolerance,pass`` as written by the CLI."""
        name = self.name.replace(",", ";")
        return f"{name},{self.max_violation!r},{self.tolerance!r},{str(self.passed).lower()}"


@dataclass(frozen=True)
class StepMap:
    """Deterministic one-step map ``w -> W`` at fixed ``h``, ``t`` and solver settings.

    ``space`` is ``"sphere"`` or ``"ambient"`` and only documents where the
    map is meant to act; both kinds accept any ambient input.
    """

    fn: Callable
    space: str = "ambient"

    def __call__(self, w):
        return self.fn(w)


def make_step_map(system, cfg: StepConfig, t: float = 0.0, method: str = "spherical") -> StepMap:
    stepper = get_stepper(method)
    space = "sphere" if method == "spherical" else "ambient"
    return StepMap(lambda w: stepper(system, w, t, cfg), space)


def _precise_cfg(cfg: StepConfig, dtype) -> StepConfig:
    tol = min(cfg.solver_tol, 64 * float(np.finfo(dtype).eps))
    return cfg.replace(solver_tol=tol)


def map_jacobian_fd(phi, w, delta: float = 1e-5, dtype=None) -> np.ndarray:
    """Central finite-difference Jacobian of ``phi`` at ``w``, shape ``(3n, 3n)``.

    ``phi`` is evaluated on inputs of ``dtype`` (default: the dtype of
    ``w``); the result is returned in float64.
    """
    w = as_ambient(w)
    if dtype is not None:
        w = w.astype(dtype)
    shape = w.shape
    size = w.size
    J = np.empty((size, size), dtype=w.dtype)
    for k in range(size):
        e = np.zeros(size, dtype=w.dtype)
        e[k] = delta
        e = e.reshape(shape)
        J[:, k] = (np.asarray(phi(w + e)) - np.asarray(phi(w - e))).reshape(-1) / (2 * delta)
    return J.astype(float)


def _unit_covectors(rng, size, trials):
    v = rng.standard_normal((trials, 2, size))
    return v / np.linalg.norm(v, axis=2, keepdims=True)


def check_poisson_preservation(
    H,
    w,
    cfg: StepConfig,
    trials: int = 50,
    delta: float = 1e-5,
    seed: int = 0,
    method: str = "spherical",
    tolerance: float = 1e-6,
    t: float = 0.0,
) -> DiagnosticReport:
    """Pull random covector pairs back through the step and compare bivectors.

    For each pair ``(Sigma, Lambda)`` at ``W = phi(w)``, with
    ``sigma = Dphi(w)^T Sigma`` and ``lambda = Dphi(w)^T Lambda``, the
    violation is ``|K(W)(Sigma, Lambda) - K(w)(sigma, lambda)|`` divided by
    ``|K(w)(sigma, lambda)| + 1``. A Poisson map gives zero up to the
    finite-difference error of ``Dphi``.
    """
    w = as_ambient(w)
    precise = _precise_cfg(cfg, FD_DTYPE)
    phi = make_step_map(H, precise, t, method)
    W = np.asarray(phi(w.astype(FD_DTYPE)), dtype=float)
    J = map_jacobian_fd(phi, w, delta, FD_DTYPE)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for Sigma, Lam in _unit_covectors(rng, w.size, trials):
        sigma = (J.T @ Sigma).reshape(w.shape)
        lam = (J.T @ Lam).reshape(w.shape)
        after = poisson_bivector(W, Sigma.reshape(w.shape), Lam.reshape(w.shape))
        before = poisson_bivector(w, sigma, lam)
        worst = max(worst, abs(after - before) / (abs(before) + 1.0))
    name = getattr(H, "name", "field")
    return DiagnosticReport(
        f"poisson[{method}/{name}/h={cfg.h:g}]",
        worst,
        tolerance,
        f"{trials} covector pairs, fd delta {delta:g}, {np.dtype(FD_DTYPE).name} evaluation",
    )


def energy_integral(H: SpinHamiltonian) -> Callable:
    return lambda w, t: H.value(w, t)


def total_spin(w, t=0.0) -> np.ndarray:
    return np.sum(w, axis=0)


def squared_radii(w, t=0.0) -> np.ndarray:
    return np.sum(w * w, axis=1)


def conservation_report(
    H, traj, integrals: Mapping[str, Callable], tolerance: float = 1e-12
) -> list[DiagnosticReport]:
    """Max deviation of each named integral ``f(w, t)`` from its initial value.

    Vector-valued integrals are compared componentwise (max-norm).
    """
    reports = []
    for name, f in integrals.items():
        ref = np.asarray(f(traj.states[0], traj.times[0]), dtype=float)
        worst = 0.0
        for s, t in zip(traj.states, traj.times):
            dev = np.max(np.abs(np.asarray(f(s, t), dtype=float) - ref))
            worst = max(worst, float(dev))
        reports.append(DiagnosticReport(name, worst, tolerance, f"{len(traj)} states"))
    return reports


def reference_solution(system, w0, times, t0: float = 0.0, rtol: float = 1e-13) -> np.ndarray:
    """High-accuracy solution of ``w' = X(w, t)`` sampled at ``times``.

    Uses scipy's DOP853 on the ambient field; independent of the midpoint
    maps. Returns an array of shape ``(len(times), n, 3)``.
    """
    w0 = as_ambient(w0)
    X = field_of(system) if isinstance(system, SpinHamiltonian) else system
    shape = w0.shape

    def rhs(t, y):
        return X(y.reshape(shape), t).reshape(-1)

    times = np.asarray(times, dtype=float)
    sol = solve_ivp(
        rhs, (t0, times[-1]), w0.reshape(-1), method="DOP853",
        rtol=rtol, atol=rtol * 0.1, t_eval=times,
    )
    if not sol.success:
        raise NoConvergenceError(np.nan, 0, f"reference solve failed: {sol.message}")
    return sol.y.T.reshape((len(times),) + shape)


def _steps_for(T, h):
    steps = int(round(T / h))
    if abs(steps * h - T) > 1e-9 * T:
        raise ValueError(f"T = {T} is not a multiple of h = {h}")
    return steps


def _max_error(states, ref):
    diff = (states - ref).reshape(len(states), -1)
    return float(np.max(np.linalg.norm(diff, axis=1)))


def convergence_errors(
    system, w0, T: float, h_list, method: str = "spherical",
    reference: str = "ode", cfg: StepConfig | None = None, t0: float = 0.0,
) -> np.ndarray:
    """Max-over-time error ``max_k |w_k - w(t0 + hk)|`` for each ``h`` in ``h_list``.

    ``reference="ode"`` compares against :func:`reference_solution`;
    ``reference="self"`` uses the same method at ``min(h_list) / 32``.
    """
    w0 = as_ambient(w0)
    h_list = [float(h) for h in h_list]
    base = cfg or StepConfig(h_list[0])
    if reference == "self":
        h_ref = min(h_list) / 32
        n_ref = _steps_for(T, h_ref)
        ref_traj = integrate(system, w0, t0, base.replace(h=h_ref), n_ref, method, False)
    errors = []
    for h in h_list:
        steps = _steps_for(T, h)
        traj = integrate(system, w0, t0, base.replace(h=h), steps, method, False)
        if reference == "self":
            stride = int(round(h / h_ref))
            ref = ref_traj.states[::stride]
        elif reference == "ode":
            ref = reference_solution(system, w0, traj.times, t0)
        else:
            raise ValueError(f"unknown reference {reference!r}")
        errors.append(_max_error(traj.states, ref))
    return np.array(errors)


def fitted_slope(h_list, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    return float(np.polyfit(np.log(h_list), np.log(errors), 1)[0])


def convergence_order(
    system, w0, T: float, h_list, method: str = "spherical",
    reference: str = "ode", cfg: StepConfig | None = None, t0: float = 0.0,
) -> float:
    errors = convergence_errors(system, w0, T, h_list, method, reference, cfg, t0)
    return fitted_slope(h_list, errors)


def compare_methods(
    system, w0, T: float, h: float, methods=("spherical", "classical"),
    cfg: StepConfig | None = None, t0: float = 0.0,
) -> dict[str, float]:
    """Max error against the ODE reference for each method at one step size.

    The pseudo-method ``"reference"`` re-enters the reference itself.
    """
    w0 = as_ambient(w0)
    steps = _steps_for(T, h)
    times = t0 + h * np.arange(steps + 1)
    ref = reference_solution(system, w0, times, t0)
    cfg = (cfg or StepConfig(h)).replace(h=h)
    out = {}
    for m in methods:
        if m == "reference":
            states = reference_solution(system, w0, times, t0)
        else:
            states = integrate(system, w0, t0, cfg, steps, m, False).states
        out[m] = _max_error(states, ref)
    return out


def poincare_section(
    H, w0, period: float, N: int, num_periods: int,
    cfg: StepConfig | None = None, t0: float = 0.0, method: str = "spherical",
) -> np.ndarray:
    """Sample a periodically forced trajectory once per period.

    The step size is ``period / N``; returns ``num_periods + 1`` states.
    """
    w = as_ambient(w0)
    h = period / N
    cfg = (cfg or StepConfig(h)).replace(h=h)
    stepper = get_stepper(method)
    out = np.empty((num_periods + 1,) + w.shape)
    out[0] = w
    k = 0
    for p in range(num_periods):
        for _ in range(N):
            try:
                w = stepper(H, w, t0 + k * h, cfg)
            except (NoConvergenceError, DomainError) as exc:
                exc.step_index = k
                raise
            k += 1
        out[p + 1] = w
    return out


# Four-vortex invariant manifold ---------------------------------------------

D_Z = np.diag([-1.0, -1.0, 1.0])
D_X = np.diag([1.0, -1.0, -1.0])
D_Y = np.diag([-1.0, 1.0, -1.0])


def _c(theta, phi):
    return np.array([np.cos(phi) * np.sin(theta), np.sin(theta) * np.sin(phi), np.cos(theta)])


def _chart(theta, phi):
    return np.stack([
        _c(theta, phi),
        _c(theta, phi + np.pi),
        _c(np.pi - theta, -phi),
        _c(np.pi - theta, np.pi - phi),
    ])


def vortex_manifold_chart(theta: float, phi: float) -> np.ndarray:
    """Four-vortex configuration ``(w, D_z w, D_x w, D_y w)`` with ``w = c(theta, phi)``.

    ``D_a`` is the rotation by pi about axis ``a``. Raises
    :class:`VortexCollisionError` where two vortices coincide.
    """
    C = _chart(theta, phi)
    point_vortices(np.ones(4)).gradient(C, 0.0)  # collision check
    return C


def chart_derivatives(theta: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Analytic ``dC/dtheta`` and ``dC/dphi``, each of shape ``(4, 3)``."""

    def dtheta(th, ph):
        return np.array([np.cos(ph) * np.cos(th), np.cos(th) * np.sin(ph), -np.sin(th)])

    def dphi(th, ph):
        return np.array([-np.sin(ph) * np.sin(th), np.sin(th) * np.cos(ph), 0.0])

    # Inner derivatives of the arguments (pi - theta, -phi) etc. give the signs.
    d_th = np.stack([
        dtheta(theta, phi),
        dtheta(theta, phi + np.pi),
        -dtheta(np.pi - theta, -phi),
        -dtheta(np.pi - theta, np.pi - phi),
    ])
    d_ph = np.stack([
        dphi(theta, phi),
        dphi(theta, phi + np.pi),
        -dphi(np.pi - theta, -phi),
        -dphi(np.pi - theta, np.pi - phi),
    ])
    return d_th, d_ph


def manifold_tangency_residual(theta: float, phi: float) -> float:
    """Norm of the part of ``X_H`` at ``C(theta, phi)`` normal to the chart.

    Uses unit vortex strengths; zero means the field is tangent to the
    two-dimensional manifold at that point.
    """
    C = vortex_manifold_chart(theta, phi)
    X = hamiltonian_vector_field(point_vortices(np.ones(4)), C).reshape(-1)
    d_th, d_ph = chart_derivatives(theta, phi)
    B = np.stack([d_th.reshape(-1), d_ph.reshape(-1)], axis=1)
    coef, *_ = np.linalg.lstsq(B, X, rcond=None)
    return float(np.linalg.norm(X - B @ coef))


def chart_residual(w) -> float:
    """``max(|w2 - D_z w1|, |w3 - D_x w1|, |w4 - D_y w1|)``."""
    w = as_ambient(w)
    return float(max(
        np.linalg.norm(w[1] - D_Z @ w[0]),
        np.linalg.norm(w[2] - D_X @ w[0]),
        np.linalg.norm(w[3] - D_Y @ w[0]),
    ))


def manifold_invariance_run(
    theta0: float, phi0: float, h: float, steps: int,
    cfg: StepConfig | None = None, w0=None, full_output: bool = False,
):
    """Integrate four unit vortices with the spherical midpoint method from a chart point.

    Returns the maximum of :func:`chart_residual` along the trajectory. ``w0``
    overrides the starting state (e.g. a point slightly off the manifold).
    """
    H = point_vortices(np.ones(4))
    start = vortex_manifold_chart(theta0, phi0) if w0 is None else as_ambient(w0)
    cfg = (cfg or StepConfig(h)).replace(h=h)
    traj = integrate(H, start, 0.0, cfg, steps, "spherical", False)
    res = np.array([chart_residual(s) for s in traj.states])
    if full_output:
        return float(res.max()), res, traj
    return float(res.max())


# Structural checks ----------------------------------------------------------

def check_self_adjoint(system, w, cfg: StepConfig, t: float = 0.0, method: str = "spherical",
                       tolerance: float | None = None) -> DiagnosticReport:
    """``Phi(-h)(Phi(h)(w)) = w``."""
    stepper = get_stepper(method)
    w = as_ambient(w)
    W = stepper(system, w, t, cfg)
    back = stepper(system, W, t + cfg.h, cfg.reversed())
    tol = 10 * cfg.solver_tol if tolerance is None else tolerance
    return DiagnosticReport(f"self-adjoint[{method}]", float(np.max(np.abs(back - w))), tol)


def check_equivariance(H: SpinHamiltonian, w, g, cfg: StepConfig, t: float = 0.0,
                       method: str = "spherical", tolerance: float | None = None) -> DiagnosticReport:
    """``g^-1 Phi_H(g w) = Phi_{H o g}(w)`` for a rotation tuple ``g``."""
    stepper = get_stepper(method)
    w = as_ambient(w)
    g = np.asarray(g, dtype=float)
    if g.shape == (3, 3):
        g = np.broadcast_to(g, (w.shape[0], 3, 3))
    g_inv = np.swapaxes(g, 1, 2)
    lhs = rotate(g_inv, stepper(H, rotate(g, w), t, cfg))
    rhs = stepper(rotated_hamiltonian(H, g), w, t, cfg)
    tol = 10 * cfg.solver_tol if tolerance is None else tolerance
    return DiagnosticReport(f"equivariance[{method}]", float(np.max(np.abs(lhs - rhs))), tol)


def check_extension_independence(H: SpinHamiltonian, w, c, cfg: StepConfig, t: float = 0.0,
                                 tolerance: float | None = None) -> DiagnosticReport:
    """The spherical step is unchanged when ``H`` becomes ``H + sum c_i |w_i|^2``."""
    step = get_stepper("spherical")
    a = step(H, w, t, cfg)
    b = step(radial_shift(H, c), w, t, cfg)
    tol = 10 * cfg.solver_tol if tolerance is None else tolerance
    return DiagnosticReport("extension-independence", float(np.max(np.abs(a - b))), tol)


def harmonic_rotation_angle(lam_h: float, cfg: StepConfig | None = None,
                            axis=(0.0, 0.0, 1.0), w=(1.0, 0.0, 0.0)) -> float:
    """Rotation angle of one spherical step for ``w' = lam w x a`` with ``lam h = lam_h``.

    Runs with ``h = 1`` and ``lam = lam_h``; ``w`` must be orthogonal to
    ``axis``. Raises if the step has no solution.
    """
    from .systems import harmonic_oscillator

    cfg = (cfg or StepConfig(1.0, solver_tol=1e-15)).replace(h=1.0)
    a = np.asarray(axis, dtype=float)
    w = np.asarray(w, dtype=float)[None]
    W = get_stepper("spherical")(harmonic_oscillator(a, lam_h), w, 0.0, cfg)
    # The field lam w x a turns w clockwise about a.
    s = np.dot(np.cross(W[0], w[0]), a / np.linalg.norm(a))
    return float(np.arctan2(s, np.dot(w[0], W[0])))


def expected_harmonic_angle(lam_h: float) -> float:
    """``arccos(1 - (lam h)^2 / 2)``; NaN outside the stability interval."""
    arg = 1.0 - 0.5 * lam_h**2
    return float(np.arccos(arg)) if -1.0 <= arg <= 1.0 else float("nan")


def check_geodesic_characterization(H: SpinHamiltonian, w, cfg: StepConfig, t: float = 0.0,
                                    tolerance: float = 1e-10) -> DiagnosticReport:
    """Single-sphere step: the field at the geodesic midpoint is tangent to the arc,
    and ``2 sin(d(w, W)/2) = |h xi(m)|``.
    """
    w = as_ambient(w)
    if w.shape[0] != 1:
        raise ValueError("the geodesic characterization is for one sphere")
    W = get_stepper("spherical")(H, w, t, cfg)
    m = geodesic_midpoint(w[0], W[0])
    v = cfg.h * hamiltonian_vector_field(H, m[None], t + 0.5 * cfg.h)[0]
    chord = W[0] - w[0]
    parallel = float(np.linalg.norm(np.cross(v, chord)))
    length = abs(2.0 * np.sin(geodesic_distance(w[0], W[0]) / 2.0) - float(np.linalg.norm(v)))
    # Tangent of the geodesic at m is the chord direction.
    return DiagnosticReport(
        "geodesic-characterization", max(parallel, length), tolerance,
        f"parallel {parallel:.2e}, length {length:.2e}",
    )


def radius_deviation(traj, radii=None) -> float:
    """Max deviation of ``|w_i|`` from ``radii`` (default: the initial radii)."""
    r = norms(traj.states)
    r0 = r[0] if radii is None else np.asarray(radii, dtype=float)
    return float(np.max(np.abs(r - r0)))
