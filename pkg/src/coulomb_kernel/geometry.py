"""Minkowski four-vectors, points of the Lobachevsky space and Lorentz maps.

Conventions: components are ordered (t, x, y, z) and the metric signature is
(+, -, -, -).  A Lobachevsky point is a future unit timelike vector u with
u.u = 1, u0 > 0; a cone direction is a null vector on the p0 = 1 slice.
Every function broadcasts over leading axes, so arrays of shape (..., 4) are
accepted wherever a single four-vector is.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ON_SHELL_TOL = 1e-12
ANGLE_CLAMP_TOL = 1e-9


class GeometryError(ValueError):
    """Raised when a vector is off the hyperboloid or the cone."""


def as_vector(x) -> np.ndarray:
    """Return the raw component array of a point, direction or array-like."""
    if isinstance(x, (LobachevskyPoint, ConeDirection)):
        return x.vector
    arr = np.asarray(x)
    return arr if np.iscomplexobj(arr) else arr.astype(float, copy=False)


def minkowski_dot(a, b):
    """a0 b0 - a1 b1 - a2 b2 - a3 b3, broadcast over leading axes."""
    a = as_vector(a)
    b = as_vector(b)
    return a[..., 0] * b[..., 0] - a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2] - a[..., 3] * b[..., 3]


def _shell_tolerance(u: np.ndarray):
    # u.u is a difference of two numbers of size u0^2; allow for its rounding.
    return ON_SHELL_TOL * np.maximum(1.0, u[..., 0] ** 2)


@dataclass(frozen=True, eq=False)
class LobachevskyPoint:
    """A future unit timelike four-vector (a point of hyperbolic 3-space)."""

    vector: np.ndarray

    def __post_init__(self):
        u = np.array(self.vector, dtype=float)
        if u.shape != (4,):
            raise GeometryError(f"expected 4 components, got shape {u.shape}")
        if not u[0] > 0:
            raise GeometryError("Lobachevsky point must have u0 > 0")
        if abs(minkowski_dot(u, u) - 1.0) > _shell_tolerance(u):
            raise GeometryError(f"u.u = {minkowski_dot(u, u)!r} is not 1")
        u.setflags(write=False)
        object.__setattr__(self, "vector", u)

    @classmethod
    def from_rapidity(cls, direction, rapidity: float) -> "LobachevskyPoint":
        """The point at hyperbolic distance ``rapidity`` from the origin along ``direction``."""
        n = np.asarray(direction, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(np.concatenate(([np.cosh(rapidity)], np.sinh(rapidity) * n)))

    @classmethod
    def origin(cls) -> "LobachevskyPoint":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    @property
    def rapidity(self) -> float:
        """Hyperbolic distance from (1, 0, 0, 0)."""
        return float(np.arcsinh(np.linalg.norm(self.vector[1:])))

    def transformed(self, lorentz: np.ndarray) -> "LobachevskyPoint":
        return LobachevskyPoint(np.asarray(lorentz) @ self.vector)

    def __repr__(self):
        return f"LobachevskyPoint({np.array2string(self.vector, precision=6)})"


@dataclass(frozen=True, eq=False)
class ConeDirection:
    """A null vector p = (1, n) with |n| = 1 on the unit-sphere slice of the cone."""

    vector: np.ndarray

    def __post_init__(self):
        p = np.array(self.vector, dtype=float)
        if p.shape != (4,):
            raise GeometryError(f"expected 4 components, got shape {p.shape}")
        if p[0] != 1.0:
            raise GeometryError("cone directions are stored with p0 = 1")
        if abs(minkowski_dot(p, p)) > ON_SHELL_TOL:
            raise GeometryError(f"p.p = {minkowski_dot(p, p)!r} is not 0")
        p.setflags(write=False)
        object.__setattr__(self, "vector", p)

    @classmethod
    def from_unit(cls, n) -> "ConeDirection":
        n = np.asarray(n, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(np.concatenate(([1.0], n)))

    @property
    def spatial(self) -> np.ndarray:
        return self.vector[1:]


def hyperbolic_angle(u, v):
    """Hyperbolic angle lambda >= 0 with cosh(lambda) = u.v.

    Evaluated from the spacelike difference d = u - v, for which
    -d.d = 2 (u.v - 1) = 4 sinh^2(lambda / 2), so near-coincident points keep
    full relative accuracy.  Raises GeometryError if u.v < 1 - 1e-9.
    """
    u = as_vector(u)
    v = as_vector(v)
    d = u - v
    s = -minkowski_dot(d, d)
    scale = np.maximum(1.0, np.maximum(u[..., 0], v[..., 0]) ** 2)
    if np.any(s < -2.0 * ANGLE_CLAMP_TOL * scale):
        raise GeometryError("u.v < 1: inputs are not on the hyperboloid")
    s = np.maximum(s, 0.0)
    return 2.0 * np.arcsinh(0.5 * np.sqrt(s))


def pairwise_angles(points) -> np.ndarray:
    """Matrix of hyperbolic angles between all pairs; exact zeros on the diagonal."""
    u = np.stack([as_vector(p) for p in points])
    lam = hyperbolic_angle(u[:, None, :], u[None, :, :])
    np.fill_diagonal(lam, 0.0)
    return lam


def boost(rapidity: float, axis=(1.0, 0.0, 0.0)) -> np.ndarray:
    """Pure boost with the given rapidity along a spatial axis."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    ch, sh = np.cosh(rapidity), np.sinh(rapidity)
    m = np.eye(4)
    m[0, 0] = ch
    m[0, 1:] = m[1:, 0] = sh * n
    m[1:, 1:] += (ch - 1.0) * np.outer(n, n)
    return m


def rotation(angle: float, axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Spatial rotation by ``angle`` about ``axis`` (Rodrigues formula)."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    r = np.eye(3) + np.sin(angle) * kx + (1.0 - np.cos(angle)) * (kx @ kx)
    m = np.eye(4)
    m[1:, 1:] = r
    return m


def boost_to_rest(u) -> np.ndarray:
    """The pure boost mapping the Lobachevsky point u to (1, 0, 0, 0)."""
    u = as_vector(u)
    r = np.linalg.norm(u[1:])
    if r == 0.0:
        return np.eye(4)
    return boost(-np.arcsinh(r), u[1:] / r)


def random_direction(rng: np.random.Generator, size=None) -> np.ndarray:
    shape = (3,) if size is None else (size, 3)
    g = rng.standard_normal(shape)
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def random_lorentz(rng: np.random.Generator, max_rapidity: float = 2.0) -> np.ndarray:
    """A proper orthochronous Lorentz map: random rotation followed by a random boost."""
    rot = rotation(rng.uniform(0.0, 2.0 * np.pi), random_direction(rng))
    return boost(rng.uniform(0.0, max_rapidity), random_direction(rng)) @ rot


METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


def is_proper_lorentz(m, tol: float = 1e-10) -> bool:
    """True if m preserves the Minkowski form, has det = +1 and m00 >= 1."""
    m = np.asarray(m, dtype=float)
    scale = max(1.0, float(np.abs(m).max()) ** 2)
    preserves = np.abs(m.T @ METRIC @ m - METRIC).max() <= tol * scale
    return bool(preserves and abs(np.linalg.det(m) - 1.0) <= tol * scale**2 and m[0, 0] >= 1.0 - tol)


def sample_points(n: int, lam_max: float, seed: int) -> list[LobachevskyPoint]:
    """n points with uniform directions and radial parameter uniform in [0, lam_max].

    Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not lam_max > 0:
        raise ValueError("lam_max must be positive")
    rng = np.random.default_rng(seed)
    return points_from_rng(rng, n, lam_max)


def points_from_rng(rng: np.random.Generator, n: int, lam_max: float, center=None) -> list[LobachevskyPoint]:
    """Draw n points within distance lam_max of ``center`` (default the origin)."""
    dirs = random_direction(rng, n)
    s = rng.uniform(0.0, lam_max, n)
    vecs = np.concatenate([np.cosh(s)[:, None], np.sinh(s)[:, None] * dirs], axis=1)
    if center is not None:
        # boost_to_rest(c) maps c to the origin; its inverse carries the cluster to c.
        vecs = vecs @ np.linalg.inv(boost_to_rest(center)).T
        vecs[:, 0] = np.sqrt(1.0 + np.sum(vecs[:, 1:] ** 2, axis=1))
    return [LobachevskyPoint(v) for v in vecs]
