"""Geometry on products of 2-spheres embedded in R^(3n).

States are numpy arrays of shape ``(n, 3)``: row ``i`` is the i:th sphere
component. A single 3-vector of shape ``(3,)`` is accepted wherever one
sphere is meant.
"""

from __future__ import annotations

import numpy as np

from .errors import AntipodalPairError, DimensionMismatchError, ZeroVectorError

UNIT_TOL = 1e-12
ZERO_TOL = 1e-300
ANTIPODAL_TOL = 1e-12


def as_array(w):
    """Return ``w`` as a floating array, keeping extended precision if given."""
    a = np.asarray(w)
    if not np.issubdtype(a.dtype, np.floating):
        a = a.astype(float)
    return a


def as_ambient(w) -> np.ndarray:
    """Coerce ``w`` to an ambient state of shape ``(n, 3)``."""
    a = as_array(w)
    if a.ndim == 1:
        if a.size % 3:
            raise DimensionMismatchError(f"length {a.size} is not a multiple of 3")
        a = a.reshape(-1, 3)
    if a.ndim != 2 or a.shape[1] != 3 or a.shape[0] < 1:
        raise DimensionMismatchError(f"expected shape (n, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("state has non-finite components")
    return a


def spin_state(values) -> np.ndarray:
    """Build a point of (S^2)^n from raw reals, renormalizing each row."""
    return project_rays(as_ambient(values))


def is_spin_state(w, tol: float = UNIT_TOL) -> bool:
    a = as_ambient(w)
    return bool(np.all(np.abs(norms(a) - 1.0) <= tol))


def norms(w) -> np.ndarray:
    """Euclidean length of each row."""
    w = as_array(w)
    return np.sqrt(np.sum(w * w, axis=-1))


def _row_norms(w):
    return np.sqrt(np.einsum("ij,ij->i", w, w))


def cross(a, b) -> np.ndarray:
    """Row-wise cross product; faster than ``np.cross`` for tiny arrays."""
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    out[..., 0] = a1 * b2 - a2 * b1
    out[..., 1] = a2 * b0 - a0 * b2
    out[..., 2] = a0 * b1 - a1 * b0
    return out


def normalize(v) -> np.ndarray:
    """Scale a single nonzero 3-vector to unit length."""
    v = as_array(v)
    if v.shape != (3,):
        raise DimensionMismatchError(f"expected a 3-vector, got shape {v.shape}")
    r = np.sqrt(np.dot(v, v))
    if not r >= ZERO_TOL:
        raise ZeroVectorError()
    return v / r


def project_rays(w) -> np.ndarray:
    """Project each component onto the unit sphere, ``w_i -> w_i / |w_i|``."""
    w = as_ambient(w)
    r = norms(w)
    bad = np.flatnonzero(~(r >= ZERO_TOL))
    if bad.size:
        raise ZeroVectorError(index=int(bad[0]))
    return w / r[:, None]


def _check_pair(w, W):
    w = as_ambient(w)
    W = as_ambient(W)
    if w.shape != W.shape:
        raise DimensionMismatchError(f"shapes {w.shape} and {W.shape} differ")
    return w, W


def projected_sum(w, W) -> np.ndarray:
    """Return ``rho(w + W)``, raising if some ``w_i + W_i`` (nearly) cancels.

    This is the evaluation point of the spherical midpoint method. No shape
    checking; callers pass arrays of equal shape.
    """
    s = w + W
    r = _row_norms(s)
    scale = _row_norms(w) + _row_norms(W)
    bad = np.flatnonzero(~(r > ANTIPODAL_TOL * scale))
    if bad.size:
        raise AntipodalPairError(index=int(bad[0]))
    return s / r[:, None]


def gamma_midpoint(w, W) -> np.ndarray:
    r"""Radius-preserving midpoint of two ambient states.

    Component ``i`` is :math:`\sqrt{|w_i||W_i|}\,(w_i + W_i)/|w_i + W_i|`, so
    it has the geometric mean of the two radii and the direction of the
    chord midpoint.
    """
    w, W = _check_pair(w, W)
    return _gamma(w, W)


def _gamma(w, W):
    rw = norms(w)
    rW = norms(W)
    bad = np.flatnonzero(~((rw >= ZERO_TOL) & (rW >= ZERO_TOL)))
    if bad.size:
        raise ZeroVectorError(index=int(bad[0]))
    s = w + W
    rs = norms(s)
    bad = np.flatnonzero(~(rs >= ANTIPODAL_TOL * (rw + rW)))
    if bad.size:
        raise AntipodalPairError(index=int(bad[0]))
    return (np.sqrt(rw * rW) / rs)[:, None] * s


def rotate(g, w) -> np.ndarray:
    """Apply ``g_i`` to component ``i``.

    ``g`` is an array of shape ``(n, 3, 3)``; a single ``(3, 3)`` matrix acts
    diagonally on every sphere.
    """
    w = as_ambient(w)
    g = as_array(g)
    if g.shape == (3, 3):
        return w @ g.T
    if g.shape != (w.shape[0], 3, 3):
        raise DimensionMismatchError(
            f"rotation tuple of shape {g.shape} does not act on {w.shape[0]} spheres"
        )
    return np.einsum("nij,nj->ni", g, w)


def check_rotation_tuple(g, tol: float = UNIT_TOL) -> np.ndarray:
    """Validate that every entry of ``g`` is in SO(3) and return it as ``(n, 3, 3)``."""
    g = as_array(g)
    if g.shape == (3, 3):
        g = g[None]
    if g.ndim != 3 or g.shape[1:] != (3, 3):
        raise DimensionMismatchError(f"expected shape (n, 3, 3), got {g.shape}")
    eye = np.eye(3)
    for i, gi in enumerate(g):
        if np.max(np.abs(gi.T @ gi - eye)) > tol or abs(np.linalg.det(gi) - 1.0) > tol:
            raise ValueError(f"entry {i} is not a rotation matrix")
    return g


def random_rotations(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` Haar-distributed rotation matrices."""
    q, r = np.linalg.qr(rng.standard_normal((n, 3, 3)))
    q = q * np.sign(np.diagonal(r, axis1=1, axis2=2))[:, None, :]
    flip = np.linalg.det(q) < 0
    q[flip, :, 0] *= -1.0
    return q


def axis_rotation(axis, angle: float) -> np.ndarray:
    """Rotation matrix by ``angle`` about ``axis`` (right-hand rule)."""
    k = normalize(axis)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def random_spin_state(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random point of (S^2)^n."""
    return project_rays(rng.standard_normal((n, 3)))


def geodesic_distance(a, b) -> float:
    """Great-circle angle between two unit vectors, in ``[0, pi]``."""
    a = as_array(a)
    b = as_array(b)
    c = np.cross(a, b)
    return float(np.arctan2(np.sqrt(np.dot(c, c)), np.dot(a, b)))


def geodesic_midpoint(a, b) -> np.ndarray:
    """Point on the shorter great-circle arc equidistant from ``a`` and ``b``."""
    a = as_array(a)
    b = as_array(b)
    s = a + b
    r = np.sqrt(np.dot(s, s))
    if not r > ANTIPODAL_TOL * 2.0:
        raise AntipodalPairError()
    return s / r
