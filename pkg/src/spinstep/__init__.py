"""Spherical midpoint integration for Hamiltonian systems on products of 2-spheres."""

from .errors import (
    AntipodalPairError,
    DimensionMismatchError,
    DomainError,
    InvalidLevelError,
    NoConvergenceError,
    SpinStepError,
    VortexCollisionError,
    ZeroVectorError,
)
from .integrators import (
    METHODS,
    SolverInfo,
    StepConfig,
    Trajectory,
    classical_midpoint_step,
    extended_spherical_step,
    get_stepper,
    integrate,
    solve_implicit,
    spherical_midpoint_step,
)
from .nambu import (
    NambuSystem,
    casimir_catalog,
    integrate_nambu,
    lagrange_system,
    nambu_field,
    nambu_midpoint_step,
)
from .sphere import projected_sum, random_spin_state, spin_state
from .systems import (
    SpinHamiltonian,
    closed_curve_state,
    forced_rigid_body,
    free_rigid_body,
    hamiltonian_vector_field,
    harmonic_oscillator,
    heisenberg_chain,
    irreversible_rigid_body,
    point_vortices,
    poisson_bivector,
    poisson_bracket,
    radial_shift,
)

__version__ = "0.1.0"
