"""Homogeneous four-vector states on the light cone and the invariant J-form.

States are represented by their restriction to the unit sphere (the p0 = 1
slice of the forward cone).  Components are contravariant: the electric-type
state built from points u_i is f^mu(p) = sum_i alpha_i u_i^mu / (u_i . p),
and the form is

    (f, g)_J = - integral over S^2 of conj(f) . g  d^2p

with . the Minkowski product.  On each cone direction the matrix B(p) has the
orthonormal eigenbasis w1+, w1-, w_{r^-2}, w_{r^2}; the first two are
J-positive, w_{r^-2} is J-null and w_{r^2} pairs with it with J-product -1.
A state with sum(alpha) = 0 has no w_{r^2} component, hence (f, f)_J >= 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import ConeDirection, LobachevskyPoint, as_vector, boost_to_rest, minkowski_dot
from .quadrature import SphereRule, integrate_sphere, sphere_rule

AXIS_EPS = 1e-12
DEFAULT_ORDER = 64
_SQRT_HALF = math.sqrt(0.5)


def b_matrix(p) -> np.ndarray:
    """The symmetric positive matrix B(p) for a forward null vector p, r = |p_vec| = p0."""
    p = as_vector(p)
    r = float(np.linalg.norm(p[1:]))
    if r == 0.0:
        raise ValueError("B(p) is undefined at the cone vertex r = 0")
    if abs(p[0] - r) > 1e-12 * max(1.0, r) or p[0] <= 0:
        raise ValueError("p must lie on the forward light cone")
    inv2, sq = r**-2, r**2
    pv = p[1:]
    m = np.empty((4, 4))
    m[0, 0] = 0.5 * (inv2 + sq)
    m[0, 1:] = m[1:, 0] = (inv2 - sq) / (2.0 * r) * pv
    m[1:, 1:] = (inv2 + sq - 2.0) / (2.0 * sq) * np.outer(pv, pv) + np.eye(3)
    return m


@dataclass(frozen=True)
class PolarizationBasis:
    """Columns of ``vectors`` are w1+, w1-, w_{r^-2}, w_{r^2}; ``eigenvalues`` match them."""

    vectors: np.ndarray
    eigenvalues: np.ndarray

    @property
    def w1_plus(self):
        return self.vectors[:, 0]

    @property
    def w1_minus(self):
        return self.vectors[:, 1]

    @property
    def w_r_minus2(self):
        return self.vectors[:, 2]

    @property
    def w_r2(self):
        return self.vectors[:, 3]


def basis_at(nodes) -> np.ndarray:
    """Eigenvector matrices for an array of cone vectors, shape (m, 4, 4), columns as in PolarizationBasis."""
    p = np.atleast_2d(as_vector(nodes))
    r = np.linalg.norm(p[:, 1:], axis=1)
    n = p[:, 1:] / r[:, None]
    p1, p2, p3 = n[:, 0], n[:, 1], n[:, 2]
    rho = np.hypot(p1, p2)
    off_axis = rho * rho >= AXIS_EPS
    rho_safe = np.where(off_axis, rho, 1.0)
    m = len(p)
    w = np.zeros((m, 4, 4))
    # w1+ and w1- (unit-sphere form; the formulas are homogeneous of degree zero)
    w[:, 1, 0] = np.where(off_axis, p2 / rho_safe, 0.0)
    w[:, 2, 0] = np.where(off_axis, -p1 / rho_safe, -1.0)
    pole_sign = np.where(p3 >= 0.0, 1.0, -1.0)
    w[:, 1, 1] = np.where(off_axis, p1 * p3 / rho_safe, pole_sign)
    w[:, 2, 1] = np.where(off_axis, p2 * p3 / rho_safe, 0.0)
    w[:, 3, 1] = np.where(off_axis, -rho, 0.0)
    w[:, 0, 2] = _SQRT_HALF
    w[:, 1:, 2] = _SQRT_HALF * n
    w[:, 0, 3] = _SQRT_HALF
    w[:, 1:, 3] = -_SQRT_HALF * n
    return w


def polarization_basis(p) -> PolarizationBasis:
    """Orthonormal eigenbasis of B(p).

    On the polar axis the formulas for w1+- are 0/0; there the limit along
    p1 > 0, p2 = 0 is used: w1+ = (0, 0, -1, 0) and w1- = (0, +-1, 0, 0).
    """
    p = as_vector(p)
    r = float(np.linalg.norm(p[1:]))
    return PolarizationBasis(vectors=basis_at(p[None, :])[0], eigenvalues=np.array([1.0, 1.0, r**-2, r**2]))


@dataclass(frozen=True, eq=False)
class ElectricTypeState:
    """f^mu(p) = sum_i alpha_i u_i^mu / (u_i . p)."""

    alphas: np.ndarray
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        alphas = np.atleast_1d(np.asarray(self.alphas, dtype=complex)).copy()
        pts = np.array([as_vector(u) for u in self.points], dtype=float).reshape(-1, 4)
        if len(alphas) != len(pts):
            raise ValueError("need one coefficient per point")
        for u in pts:
            LobachevskyPoint(u)  # validates
        alphas.setflags(write=False)
        pts.setflags(write=False)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "points", pts)

    @classmethod
    def single(cls, u, alpha: complex = 1.0) -> "ElectricTypeState":
        return cls(np.array([alpha]), [u])

    @property
    def charge(self) -> complex:
        return complex(self.alphas.sum())

    @property
    def transversal(self) -> bool:
        return abs(self.charge) <= 1e-12 * max(float(np.abs(self.alphas).sum()), 1e-300)

    def evaluate(self, nodes) -> np.ndarray:
        """Values at an (m, 4) array of cone vectors, shape (m, 4), complex."""
        p = np.atleast_2d(as_vector(nodes))
        up = p @ (self.points * np.array([1.0, -1.0, -1.0, -1.0])).T  # (m, N) of u_i . p
        if np.any(up <= 1e-12):
            raise ArithmeticError("u . p is not positive on the forward cone")
        return (self.alphas / up) @ self.points

    def transformed(self, lorentz) -> "ElectricTypeState":
        """The state built from the images Lambda u_i."""
        lorentz = np.asarray(lorentz, dtype=float)
        moved = self.points @ lorentz.T
        # a large boost amplifies rounding by ~cosh^2; project back onto u.u = 1
        moved = moved / np.sqrt(minkowski_dot(moved, moved))[:, None]
        return ElectricTypeState(self.alphas, moved)

    def __add__(self, other: "ElectricTypeState") -> "ElectricTypeState":
        return ElectricTypeState(np.concatenate([self.alphas, other.alphas]), np.concatenate([self.points, other.points]))

    def __rmul__(self, c: complex) -> "ElectricTypeState":
        return ElectricTypeState(c * self.alphas, self.points)


def eval_electric(state: ElectricTypeState, p) -> tuple[np.ndarray, complex]:
    """f(p) and the contraction p . f (equal to sum(alpha) on the cone)."""
    p = as_vector(p)
    f = state.evaluate(p[None, :])[0]
    return f, complex(minkowski_dot(p.astype(complex), f))


@dataclass(frozen=True, eq=False)
class SampledState:
    """Node values (m, 4) of a homogeneous state on a sphere rule."""

    rule: SphereRule
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (len(self.rule), 4):
            raise ValueError(f"expected values of shape ({len(self.rule)}, 4), got {vals.shape}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_state(cls, state: ElectricTypeState, rule: SphereRule) -> "SampledState":
        return cls(rule, state.evaluate(rule.nodes))

    @classmethod
    def from_components(cls, rule: SphereRule, coefficients) -> "SampledState":
        """Recombine (m, 4) coefficients against the basis columns w1+, w1-, w_{r^-2}, w_{r^2}."""
        coeff = np.asarray(coefficients, dtype=complex)
        return cls(rule, np.einsum("mij,mj->mi", basis_at(rule.nodes), coeff))


def _j_density(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    return -minkowski_dot(np.conj(f), g)


def centroid_frame(*states: ElectricTypeState) -> np.ndarray:
    """Boost that brings the normalized sum of all points of the states to rest."""
    pts = np.concatenate([s.points for s in states])
    c = pts.sum(axis=0)
    c = c / math.sqrt(minkowski_dot(c, c))
    return boost_to_rest(c)


def j_form(f, g, rule: SphereRule | None = None, frame: str = "centroid") -> complex:
    """The invariant form -integral conj(f_mu) g^mu d^2p.

    Sampled states are integrated on their own rule.  Electric-type states are
    sampled on ``rule`` (default order 64); with ``frame="centroid"`` they are
    first boosted so the centroid of their points is at rest.  The form is
    Lorentz invariant, and the centered frame keeps every u . p factor away
    from zero, which is what the product rule needs to converge.
    """
    if isinstance(f, SampledState) and isinstance(g, SampledState):
        if f.rule is not g.rule and f.rule.order != g.rule.order:
            raise ValueError("sampled states live on different sphere rules")
        return complex(integrate_sphere(_j_density(f.values, g.values), f.rule))
    if isinstance(f, ElectricTypeState) and isinstance(g, ElectricTypeState):
        rule = sphere_rule(DEFAULT_ORDER) if rule is None else rule
        if frame == "centroid":
            lam = centroid_frame(f, g)
            f, g = f.transformed(lam), g.transformed(lam)
        elif frame != "given":
            raise ValueError(f"unknown frame {frame!r}")
        nodes = rule.nodes
        return complex(integrate_sphere(_j_density(f.evaluate(nodes), g.evaluate(nodes)), rule))
    raise TypeError("j_form needs two SampledState or two ElectricTypeState arguments")


@dataclass(frozen=True)
class Decomposition:
    """Per-node coefficients along w1+, w1-, w_{r^-2}, w_{r^2}."""

    rule: SphereRule
    coefficients: np.ndarray

    def component(self, k: int) -> SampledState:
        c = np.zeros_like(self.coefficients)
        c[:, k] = self.coefficients[:, k]
        return SampledState.from_components(self.rule, c)

    @property
    def plus(self) -> SampledState:
        return self.component(0)

    @property
    def minus(self) -> SampledState:
        return self.component(1)

    @property
    def null(self) -> SampledState:
        return self.component(2)

    @property
    def longitudinal(self) -> SampledState:
        return self.component(3)

    def recombine(self) -> SampledState:
        return SampledState.from_components(self.rule, self.coefficients)


def decompose_state(f: SampledState) -> Decomposition:
    """Project each node value on the orthonormal eigenbasis of B(p)."""
    w = basis_at(f.rule.nodes)
    return Decomposition(f.rule, np.einsum("mij,mi->mj", w, f.values))


def lemma_check(state: ElectricTypeState, rule: SphereRule | None = None) -> float:
    """(f, f)_J for a transversal electric-type state; non-negative by the lemma."""
    if not state.transversal:
        raise ValueError("lemma_check needs a transversal state (sum of alphas = 0)")
    if np.all(state.alphas == 0):
        return 0.0
    return j_form(state, state, rule).real
