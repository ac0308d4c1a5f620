"""Spherical (radial) Fourier transform on the Lobachevsky space.

For a radial function F(lambda) the transform and its inverse are

    Fhat(nu) = (4 pi / nu) int_0^inf F(lambda) sinh(lambda) sin(nu lambda) d lambda
    F(lambda) = (1 / 2 pi^2) int_0^inf nu Fhat(nu) sin(nu lambda) / sinh(lambda) d nu

The nu -> 0 and lambda -> 0 limits are taken through sin(x)/x, evaluated by
its Taylor series near zero.  ``forward_radial_2d`` integrates the unreduced
definition (the pairing with (cosh l - sinh l t)^(i nu - 1) over the sphere)
and serves as an independent check of the one-dimensional formula.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import HalflineConfig, gauss_legendre, integrate_halfline, pairwise_sum
from .spectral import lam_over_sinh, phi_principal

TRANSFORM_CONFIG = HalflineConfig(rel_tol=1e-13, abs_tol=1e-16)
ROUND_TRIP_CONFIG = HalflineConfig(rel_tol=1e-9, abs_tol=1e-13, tail_extrapolation=True)


@dataclass(frozen=True)
class RadialFunction:
    """F(lambda) on [0, inf); ``support`` bounds where F is numerically non-zero (None: unbounded)."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    support: float | None = None

    def __call__(self, lam):
        return np.asarray(self.evaluator(np.asarray(lam, dtype=float)))


@dataclass(frozen=True)
class RadialSpectrum:
    """Fhat(nu) on [0, inf)."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    support: float | None = None

    def __call__(self, nu):
        return np.asarray(self.evaluator(np.asarray(nu, dtype=float)))


def _as_radial(F, cls):
    return F if isinstance(F, cls) else cls(F)


def _sin_over(freq, x):
    """sin(freq x) / freq, continuous at freq = 0 (value x)."""
    return x * np.sinc(freq * x / math.pi)


def forward_radial(F, nu, cfg: HalflineConfig | None = None) -> np.ndarray:
    """Fhat at the frequencies ``nu`` (any shape), all from one shared integration."""
    F = _as_radial(F, RadialFunction)
    nu = np.asarray(nu, dtype=float)
    flat = nu.ravel()
    cfg = (cfg or TRANSFORM_CONFIG).for_frequency(float(np.abs(flat).max(initial=0.0)))

    def integrand(lam):
        return (F(lam) * np.sinh(lam))[:, None] * _sin_over(flat[None, :], lam[:, None])

    res = integrate_halfline(integrand, cfg, support=F.support)
    return (4.0 * math.pi * np.asarray(res.value)).reshape(nu.shape)


def inverse_radial(spectrum, lam, cfg: HalflineConfig | None = None) -> np.ndarray:
    """F at the radii ``lam`` (any shape) from its spectrum."""
    spectrum = _as_radial(spectrum, RadialSpectrum)
    lam = np.asarray(lam, dtype=float)
    flat = lam.ravel()
    cfg = (cfg or TRANSFORM_CONFIG).for_frequency(float(np.abs(flat).max(initial=0.0)))

    def integrand(nus):
        # nu sin(nu lam) / sinh(lam) = nu^2 phi_nu(lam)
        return (nus * nus * spectrum(nus))[:, None] * phi_principal(nus[:, None], flat[None, :])

    res = integrate_halfline(integrand, cfg, support=spectrum.support)
    return (np.asarray(res.value) / (2.0 * math.pi**2)).reshape(lam.shape)


def _graded_panels(lam: float, order: int):
    """Gauss nodes on [-1, 1] refined geometrically towards t = 1.

    Near t = 1 the base cosh(l) - sinh(l) t shrinks to exp(-l) over a width of
    about exp(-2 l), so the panels are halved down to that scale.
    """
    x, w = gauss_legendre(order)
    edges = [-1.0, 0.0]
    width = 1.0
    floor = 0.05 * math.exp(-2.0 * lam)
    while width > floor:
        width *= 0.5
        edges.append(1.0 - width)
    edges.append(1.0)
    edges = np.array(edges)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (lo + hi) + 0.5 * (hi - lo) * x).ravel()
    weights = (0.5 * (hi - lo) * w).ravel()
    return nodes, weights


def sphere_pairing(nu: float, lam, order: int = 24):
    """int_{S^2} (u . p)^(i nu - 1) d^2p with u at distance lam from the origin.

    By symmetry this is 2 pi int_{-1}^{1} (cosh lam - sinh lam t)^(i nu - 1) dt.
    ``lam`` may be an array; all radii share panels graded for the largest.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    t, w = _graded_panels(float(lam.max(initial=0.0)), order)
    base = np.cosh(lam)[:, None] - np.sinh(lam)[:, None] * t[None, :]
    vals = np.exp((1j * nu - 1.0) * np.log(base))
    out = 2.0 * math.pi * pairwise_sum(w[None, :] * vals, axis=1)
    return out if out.shape != (1,) else complex(out[0])


def forward_radial_2d(F, nu: float, cfg: HalflineConfig | None = None) -> complex:
    """Fhat(nu) from the unreduced double integral

        int_0^inf F(l) sinh(l)^2 [ int_{S^2} (u . p)^(i nu - 1) d^2p ] dl.

    The imaginary part should vanish for real F; it is returned for checking.
    """
    F = _as_radial(F, RadialFunction)
    # a different outer Gauss order from forward_radial keeps the two evaluations independent
    cfg = (cfg or HalflineConfig(rel_tol=1e-12, abs_tol=1e-15, gauss_order=20)).for_frequency(float(nu))

    def integrand(lam):
        return F(lam) * np.sinh(lam) ** 2 * np.atleast_1d(sphere_pairing(float(nu), lam))

    return complex(integrate_halfline(integrand, cfg, support=F.support).value)


def gaussian_profile(a: float = 1.0) -> RadialFunction:
    """exp(-a lambda^2); support is where F sinh(lambda) drops below 1e-18."""
    support = 0.5 / a + math.sqrt(0.25 / a**2 + 18 * math.log(10) / a)
    return RadialFunction(lambda lam: np.exp(-a * lam * lam), support=support)


def bump_profile(radius: float = 2.0) -> RadialFunction:
    """The smooth compactly supported bump exp(-1 / (1 - (lambda / radius)^2)) on [0, radius)."""

    def f(lam):
        x = lam / radius
        inside = np.abs(x) < 1.0
        d = np.where(inside, 1.0 - x * x, 1.0)
        return np.where(inside, np.exp(-1.0 / d), 0.0)

    return RadialFunction(f, support=radius)


def heat_kernel_profile() -> RadialFunction:
    """(lambda / sinh lambda) exp(-lambda^2 / 4), whose spectrum is 8 pi^(3/2) exp(-nu^2)."""
    support = 2.0 + math.sqrt(4.0 + 4 * 18 * math.log(10))
    return RadialFunction(lambda lam: lam_over_sinh(lam) * np.exp(-0.25 * lam * lam), support=support)


def heat_kernel_spectrum() -> RadialSpectrum:
    return RadialSpectrum(lambda nu: 8.0 * math.pi**1.5 * np.exp(-nu * nu), support=7.0)


class _FixedForward:
    """Forward transform on a cached composite Gauss grid over [0, support].

    The grid is rebuilt only when a frequency beyond the current bound is
    requested (bounds double), so repeated spectrum calls inside the inverse
    integration cost one matrix product each.
    """

    def __init__(self, F: RadialFunction, order: int = 20):
        if F.support is None:
            raise ValueError("fixed-grid forward transform needs a finite support")
        self.F = F
        self.order = order
        self.bound = 0.0
        self.nodes = self.weights = None

    def _build(self, bound: float):
        # half a period of sin(bound lambda) per panel; 20 nodes resolve that to rounding level
        panel = min(1.0, math.pi / bound)
        npan = max(1, math.ceil(self.F.support / panel))
        x, w = gauss_legendre(self.order)
        edges = np.linspace(0.0, self.F.support, npan + 1)
        lo, hi = edges[:-1, None], edges[1:, None]
        self.nodes = (0.5 * (lo + hi) + 0.5 * (hi - lo) * x).ravel()
        self.weights = (0.5 * (hi - lo) * w).ravel() * self.F(self.nodes) * np.sinh(self.nodes)
        self.bound = bound

    def __call__(self, nus):
        nus = np.asarray(nus, dtype=float)
        top = float(np.abs(nus).max(initial=1.0))
        if top > self.bound:
            self._build(2.0 ** math.ceil(math.log2(max(top, 1.0))))
        nz = nus != 0.0
        inv = np.where(nz, 1.0 / np.where(nz, nus, 1.0), 0.0)
        # sin(nu l) / nu, with the nu = 0 limit l
        kernel = np.sin(np.outer(nus, self.nodes)) * inv[:, None] + (~nz)[:, None] * self.nodes[None, :]
        return 4.0 * math.pi * (kernel @ self.weights)


def round_trip(F, lam, cfg: HalflineConfig | None = None, nu_support: float | None = None) -> np.ndarray:
    """inverse(forward(F)) at ``lam``.

    The forward transform inside the inverse integral uses a fixed composite
    Gauss grid on [0, support] fine enough for the largest frequency in each
    call; F must therefore have a finite ``support``.
    """
    F = _as_radial(F, RadialFunction)
    return inverse_radial(RadialSpectrum(_FixedForward(F), support=nu_support), lam, cfg or ROUND_TRIP_CONFIG)
