import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinstep.errors import AntipodalPairError, NoConvergenceError
from spinstep.integrators import (
    StepConfig,
    classical_midpoint_step,
    extended_spherical_step,
    get_stepper,
    integrate,
    solve_implicit,
    spherical_midpoint_step,
)
from spinstep.sphere import cross, random_spin_state
from spinstep.systems import (
    free_rigid_body,
    harmonic_oscillator,
    heisenberg_chain,
    irreversible_rigid_body,
    point_vortices,
)


def skew(a):
    return np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])


# Solver ----------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        StepConfig(0.0)
    with pytest.raises(ValueError):
        StepConfig(0.1, solver_tol=0.0)
    assert StepConfig(0.1).reversed().h == -0.1


def test_fixed_point_contraction():
    b = np.array([1.0, -2.0, 3.0])
    W, info = solve_implicit(lambda W: W - (0.5 * W + b), np.zeros(3), StepConfig(1.0), True)
    npt.assert_allclose(W, 2 * b, atol=1e-13)
    assert info.strategy == "fixed-point"
    # Error halves each sweep: about log2(|2b| / tol) sweeps.
    assert 40 <= info.iterations <= 50


def test_newton_fallback_when_fixed_point_diverges():
    # W = 3W - 2 has the repelling fixed point W = 1.
    W, info = solve_implicit(lambda W: W - (3 * W - 2), np.array([0.0]), StepConfig(1.0), True)
    npt.assert_allclose(W, [1.0], atol=1e-13)
    assert info.strategy == "newton"


def test_no_convergence_without_fallback():
    cfg = StepConfig(1.0, newton_fallback=False, max_iterations=10)
    with pytest.raises(NoConvergenceError) as exc:
        solve_implicit(lambda W: W - (3 * W - 2), np.array([0.0]), cfg)
    assert exc.value.residual_norm > 0
    assert exc.value.iterations <= 10


def test_no_convergence_with_fallback():
    # x = x^2 + 1 has no real solution.
    with pytest.raises(NoConvergenceError):
        solve_implicit(lambda W: W - (W * W + 1.0), np.array([0.0]), StepConfig(1.0))


# Closed-form oracles ---------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.floats(-0.5, 0.5).filter(lambda h: abs(h) > 1e-3), st.integers(0, 2**32 - 1))
def test_classical_midpoint_is_cayley_map(h, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(3)
    w = rng.standard_normal((1, 3))
    field = lambda u, t: cross(u, np.broadcast_to(a, u.shape))  # noqa: E731
    A = -skew(a)
    W = classical_midpoint_step(field, w, 0.0, StepConfig(h))
    cayley = np.linalg.solve(np.eye(3) - 0.5 * h * A, (np.eye(3) + 0.5 * h * A) @ w[0])
    npt.assert_allclose(W[0], cayley, atol=1e-12)


@pytest.mark.parametrize("lam_h", [0.1, 0.5, 1.0, 1.5, 1.9])
def test_spherical_harmonic_angle(lam_h):
    H = harmonic_oscillator((0, 0, 1), lam_h)
    W = spherical_midpoint_step(H, [[1.0, 0, 0]], 0.0, StepConfig(1.0, solver_tol=1e-15))
    angle = np.arccos(1 - 0.5 * lam_h**2)
    # lam w x a turns w clockwise about a.
    npt.assert_allclose(W[0], [np.cos(angle), -np.sin(angle), 0.0], atol=1e-14)


def test_spherical_harmonic_beyond_stability():
    H = harmonic_oscillator((0, 0, 1), 2.5)
    with pytest.raises(NoConvergenceError):
        spherical_midpoint_step(H, [[1.0, 0, 0]], 0.0, StepConfig(1.0))


def test_time_dependent_field_evaluated_at_midpoint_time():
    a = np.array([0.0, 0.0, 1.0])
    field = lambda u, t: t * cross(u, np.broadcast_to(a, u.shape))  # noqa: E731
    t, h = 1.3, 0.4
    W = spherical_midpoint_step(field, [[1.0, 0, 0]], t, StepConfig(h))
    angle = np.arccos(1 - 0.5 * ((t + h / 2) * h) ** 2)
    npt.assert_allclose(np.arctan2(-W[0, 1], W[0, 0]), angle, atol=1e-13)


# Structural properties on single steps -----------------------------------------

@pytest.mark.parametrize("method", ["spherical", "classical", "extended"])
def test_one_step_stays_on_spheres(method, rng):
    H = point_vortices([1.0, -1.0, 2.0])
    w = random_spin_state(3, rng)
    W = get_stepper(method)(H, w, 0.0, StepConfig(0.05))
    npt.assert_allclose(np.linalg.norm(W, axis=1), 1.0, atol=1e-14)


def test_extended_equals_spherical_on_unit_spheres(rng):
    H = heisenberg_chain(5)
    w = random_spin_state(5, rng)
    cfg = StepConfig(0.2)
    npt.assert_allclose(
        extended_spherical_step(H, w, 0.0, cfg), spherical_midpoint_step(H, w, 0.0, cfg), atol=1e-14
    )


def test_extended_keeps_radii(rng):
    H = heisenberg_chain(4)
    r = np.array([0.5, 1.0, 2.0, 3.0])
    w = random_spin_state(4, rng) * r[:, None]
    W = extended_spherical_step(H, w, 0.0, StepConfig(0.1))
    npt.assert_allclose(np.linalg.norm(W, axis=1), r, rtol=1e-13)


def test_spherical_step_solves_defining_equation(rng):
    H = irreversible_rigid_body()
    w = random_spin_state(1, rng)
    W = spherical_midpoint_step(H, w, 0.0, StepConfig(0.3))
    m = (w + W) / np.linalg.norm(w + W)
    npt.assert_allclose(W - w, 0.3 * cross(m, H.gradient(m, 0.15)), atol=1e-13)


@pytest.mark.parametrize("method", ["spherical", "classical", "extended"])
def test_self_adjoint(method, rng):
    H = irreversible_rigid_body()
    w = random_spin_state(1, rng)
    cfg = StepConfig(0.3)
    step = get_stepper(method)
    back = step(H, step(H, w, 0.0, cfg), 0.3, cfg.reversed())
    npt.assert_allclose(back, w, atol=1e-13)


def test_antipodal_guess_rejected_inside_solver():
    # Huge steps drive iterates towards -w; the solver rejects those points
    # and still either converges or reports failure cleanly.
    H = harmonic_oscillator((0, 0, 1), 1.99)
    try:
        W = spherical_midpoint_step(H, [[1.0, 0, 0]], 0.0, StepConfig(1.0))
    except (NoConvergenceError, AntipodalPairError):
        return
    npt.assert_allclose(np.linalg.norm(W), 1.0, atol=1e-13)


# Trajectories ----------------------------------------------------------------

def test_integrate_conserves_quadratic_energy():
    H = free_rigid_body()
    w0 = [[np.cos(1.1), 0.0, np.sin(1.1)]]
    traj = integrate(H, w0, 0.0, StepConfig(0.1, solver_tol=1e-14), 200)
    assert traj.states.shape == (201, 1, 3)
    assert np.max(np.abs(traj.energies - traj.energies[0])) < 1e-13
    npt.assert_allclose(traj.times[-1], 20.0)
    assert traj.iterations[0] == 0 and traj.iterations[1:].min() > 0


def test_integrate_zero_steps():
    traj = integrate(free_rigid_body(), [[1.0, 0, 0]], 2.0, StepConfig(0.1), 0)
    assert len(traj) == 1 and traj.times[0] == 2.0


def test_integrate_requires_spin_state():
    with pytest.raises(ValueError):
        integrate(free_rigid_body(), [[2.0, 0, 0]], 0.0, StepConfig(0.1), 3)
    traj = integrate(free_rigid_body(), [[2.0, 0, 0]], 0.0, StepConfig(0.1), 3, "extended")
    npt.assert_allclose(np.linalg.norm(traj.final), 2.0)


def test_failure_reports_step_index():
    a = np.array([0.0, 0.0, 1.0])
    # Effective lam h at step k is k + 1/2, beyond 2 first at k = 2.
    field = lambda u, t: t * cross(u, np.broadcast_to(a, u.shape))  # noqa: E731
    with pytest.raises(NoConvergenceError) as exc:
        integrate(field, [[1.0, 0, 0]], 0.0, StepConfig(1.0), 5, record_energy=False)
    assert exc.value.step_index == 2
    assert str(exc.value).startswith("step 2:")


def test_unknown_method():
    with pytest.raises(ValueError):
        get_stepper("rk4")
