"""Hamiltonian spin systems on (S^2)^n and their Lie-Poisson extensions to R^(3n).

A :class:`SpinHamiltonian` bundles an energy ``value(w, t)`` with its
extrinsic gradient ``gradient(w, t)`` (row ``i`` is dH/dw_i). Both accept
ambient states of shape ``(n, 3)``; autonomous systems ignore ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError, VortexCollisionError
from .sphere import as_ambient, as_array, cross, norms, project_rays, rotate

VORTEX_COLLISION_TOL = 1e-12


@dataclass(frozen=True)
class SpinHamiltonian:
    """Energy function on R^(3n) with per-sphere gradient.

    Attributes:
        n: number of spheres.
        value: ``(w, t) -> float``.
        gradient: ``(w, t) -> array (n, 3)``.
        time_dependent: whether ``t`` enters the energy.
        name: short label used in reports.
        params: construction parameters, for display only.
    """

    n: int
    value: Callable
    gradient: Callable
    time_dependent: bool = False
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __call__(self, w, t: float = 0.0) -> float:
        return self.value(w, t)


def _check_n(H: SpinHamiltonian, w):
    w = as_ambient(w)
    if w.shape[0] != H.n:
        raise DimensionMismatchError(f"{H.name} acts on {H.n} spheres, got {w.shape[0]}")
    return w


def hamiltonian_vector_field(H: SpinHamiltonian, w, t: float = 0.0) -> np.ndarray:
    """Lie-Poisson Hamiltonian field, component ``k`` is ``w_k x dH/dw_k``."""
    w = _check_n(H, w)
    return cross(w, H.gradient(w, t))


def field_of(H: SpinHamiltonian) -> Callable:
    """Return the unchecked ``(w, t) -> X_H(w, t)`` used inside implicit solves."""
    grad = H.gradient

    def X(w, t):
        return cross(w, grad(w, t))

    return X


def _inverse_inertia(inertia):
    I = np.asarray(inertia, dtype=float)
    if I.shape != (3,) or np.any(~(I > 0)):
        raise ValueError(f"inertia must be three positive reals, got {inertia!r}")
    return 1.0 / I


def free_rigid_body(inertia=(1.0, 2.0, 4.0)) -> SpinHamiltonian:
    """Reduced free rigid body, ``H = 1/2 w . I^-1 w`` with diagonal ``I``."""
    inv = _inverse_inertia(inertia)

    def value(w, t=0.0):
        return 0.5 * float(np.sum(w * w * inv))

    def gradient(w, t=0.0):
        return w * inv

    return SpinHamiltonian(1, value, gradient, False, "free-rb", {"I": tuple(inertia)})


def irreversible_rigid_body(inertia=(1.0, 2.0, 4.0), sigma: float = 2.0 / 3.0) -> SpinHamiltonian:
    """Rigid body whose moments depend on the rotation direction.

    The inertia tensor is ``diag(I_i / (1 + sigma w_i))``, giving
    ``H = 1/2 sum_i w_i^2 (1 + sigma w_i) / I_i``, a cubic energy.
    """
    inv = _inverse_inertia(inertia)
    if not abs(sigma) < 1:
        raise ValueError(f"|sigma| must be below 1, got {sigma}")

    def value(w, t=0.0):
        return 0.5 * float(np.sum(w * w * (1.0 + sigma * w) * inv))

    def gradient(w, t=0.0):
        return w * (1.0 + 1.5 * sigma * w) * inv

    return SpinHamiltonian(
        1, value, gradient, False, "irreversible-rb", {"I": tuple(inertia), "sigma": sigma}
    )


def forced_rigid_body(inertia=(1.0, 4.0 / 3.0, 2.0), epsilon: float = 0.07) -> SpinHamiltonian:
    """Rigid body with periodic loading ``epsilon sin(t) w_3`` (period 2 pi)."""
    inv = _inverse_inertia(inertia)

    def value(w, t=0.0):
        return 0.5 * float(np.sum(w * w * inv)) + epsilon * np.sin(t) * float(w[0, 2])

    def gradient(w, t=0.0):
        g = w * inv
        g[0, 2] += epsilon * np.sin(t)
        return g

    return SpinHamiltonian(
        1, value, gradient, True, "forced-rb", {"I": tuple(inertia), "epsilon": epsilon}
    )


def harmonic_oscillator(axis=(0.0, 0.0, 1.0), lam: float = 1.0) -> SpinHamiltonian:
    """Linear test system ``H = lam a . w``, whose field ``lam w x a`` rotates about ``a``."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    la = lam * a

    def value(w, t=0.0):
        return float(np.sum(w[0] * la))

    def gradient(w, t=0.0):
        return np.broadcast_to(la, w.shape).astype(w.dtype)

    return SpinHamiltonian(1, value, gradient, False, "harmonic", {"a": tuple(a), "lambda": lam})


def _vortex_pairs(w):
    d = 2.0 - 2.0 * (w @ w.T)
    n = w.shape[0]
    iu = np.triu_indices(n, 1)
    bad = np.flatnonzero(~(d[iu] >= VORTEX_COLLISION_TOL))
    if bad.size:
        raise VortexCollisionError(int(iu[0][bad[0]]), int(iu[1][bad[0]]))
    return d


def point_vortices(strengths) -> SpinHamiltonian:
    """Point vortices on the sphere with strengths ``kappa_i``.

    ``H = -1/(4 pi) sum_{i<j} k_i k_j ln(2 - 2 w_i . w_j)``. Both value and
    gradient raise :class:`VortexCollisionError` on (near) coincident vortices.
    """
    k = np.asarray(strengths, dtype=float)
    if k.ndim != 1 or k.size < 1 or not np.all(np.isfinite(k)):
        raise ValueError("strengths must be a non-empty sequence of finite reals")
    kk = np.outer(k, k)
    n = k.size
    iu = np.triu_indices(n, 1)

    def value(w, t=0.0):
        d = _vortex_pairs(w)
        return float(-np.sum(kk[iu] * np.log(d[iu])) / (4.0 * np.pi))

    def gradient(w, t=0.0):
        d = _vortex_pairs(w)
        np.fill_diagonal(d, 1.0)
        c = kk / d
        np.fill_diagonal(c, 0.0)
        return (c @ w) / (2.0 * np.pi)

    return SpinHamiltonian(n, value, gradient, False, "vortices", {"kappa": tuple(k)})


def heisenberg_chain(n: int) -> SpinHamiltonian:
    """Periodic classical Heisenberg chain ``H = sum_i w_{i-1} . w_i``, ``w_0 = w_n``."""
    if n < 2:
        raise ValueError("a periodic chain needs at least two spins")

    def value(w, t=0.0):
        return float(np.sum(w * np.roll(w, 1, axis=0)))

    def gradient(w, t=0.0):
        return np.roll(w, 1, axis=0) + np.roll(w, -1, axis=0)

    return SpinHamiltonian(n, value, gradient, False, "heisenberg", {"n": n})


def scale_invariant_extension(F: SpinHamiltonian) -> SpinHamiltonian:
    """Extend ``F`` off the spheres as ``F o rho``, which is constant on rays.

    The gradient follows from the chain rule through ``rho``: row ``i`` is
    ``(I - u_i u_i^T) dF/dw_i(u) / |w_i|`` with ``u = rho(w)``.
    """

    def value(w, t=0.0):
        return F.value(project_rays(w), t)

    def gradient(w, t=0.0):
        r = norms(w)[:, None]
        u = w / r
        g = F.gradient(u, t)
        g = g - np.sum(g * u, axis=1, keepdims=True) * u
        return g / r

    return SpinHamiltonian(
        F.n, value, gradient, F.time_dependent, f"{F.name}∘rho", dict(F.params)
    )


def radial_shift(H: SpinHamiltonian, c) -> SpinHamiltonian:
    """Return ``H + sum_i c_i |w_i|^2``, which has the same dynamics on the spheres."""
    c = np.broadcast_to(np.asarray(c, dtype=float), (H.n,))

    def value(w, t=0.0):
        return H.value(w, t) + float(np.sum(c * np.sum(w * w, axis=1)))

    def gradient(w, t=0.0):
        return H.gradient(w, t) + 2.0 * c[:, None] * w

    return SpinHamiltonian(H.n, value, gradient, H.time_dependent, f"{H.name}+c|w|^2", dict(H.params))


def rotated_hamiltonian(H: SpinHamiltonian, g) -> SpinHamiltonian:
    """Pull ``H`` back by the rotation action: ``H_g(w) = H(g w)``."""
    g = as_array(g)
    if g.shape == (3, 3):
        g = np.broadcast_to(g, (H.n, 3, 3))
    gT = np.swapaxes(g, 1, 2)

    def value(w, t=0.0):
        return H.value(rotate(g, w), t)

    def gradient(w, t=0.0):
        return np.einsum("nij,nj->ni", gT, H.gradient(rotate(g, w), t))

    return SpinHamiltonian(H.n, value, gradient, H.time_dependent, f"{H.name}∘g", dict(H.params))


def poisson_bivector(w, sigma, lam) -> float:
    """Lie-Poisson bivector ``K(w)(sigma, lam) = sum_i det[w_i, sigma_i, lam_i]``."""
    w = as_ambient(w)
    sigma = as_ambient(sigma)
    lam = as_ambient(lam)
    if not (w.shape == sigma.shape == lam.shape):
        raise DimensionMismatchError(
            f"shapes {w.shape}, {sigma.shape}, {lam.shape} differ"
        )
    return float(np.sum(w * cross(sigma, lam)))


def poisson_bracket(w, dF, dG) -> float:
    """Bracket ``{F, G}`` for which ``dF/dt = {F, H}`` along ``X_H``.

    With the field ``w_k x dH/dw_k`` this is ``K(w)(dG, dF)``.
    """
    return poisson_bivector(w, dG, dF)


def gradient_fd(H: SpinHamiltonian, w, t: float = 0.0, delta: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of ``H.value``."""
    w = as_ambient(w)
    g = np.empty_like(w)
    for idx in np.ndindex(w.shape):
        e = np.zeros_like(w)
        e[idx] = delta
        g[idx] = (H.value(w + e, t) - H.value(w - e, t)) / (2.0 * delta)
    return g


def check_gradient(H: SpinHamiltonian, w, t: float = 0.0, delta: float = 1e-6) -> float:
    """Relative error between the analytic gradient and central differences."""
    w = as_ambient(w)
    g = H.gradient(w, t)
    fd = gradient_fd(H, w, t, delta)
    return float(np.max(np.abs(g - fd)) / max(np.max(np.abs(g)), 1e-300))


def closed_curve_state(n: int, rng: np.random.Generator, modes: int = 3, amplitude: float = 0.3) -> np.ndarray:
    """``n`` spins equidistant in parameter along a random smooth closed curve on S^2.

    The curve is a tilted circle plus ``modes`` low Fourier modes with
    amplitudes decaying like ``1/k^2``, projected to the sphere.
    """
    s = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    v = 0.8 * np.stack([np.cos(s), np.sin(s), np.zeros_like(s)], axis=1)
    v[:, 2] += 0.6
    for k in range(1, modes + 1):
        a = rng.standard_normal(3) * amplitude / k**2
        b = rng.standard_normal(3) * amplitude / k**2
        v += np.outer(np.cos(k * s), a) + np.outer(np.sin(k * s), b)
    return project_rays(v)
