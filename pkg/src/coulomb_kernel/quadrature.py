"""Quadrature on the unit two-sphere and adaptive integration over [0, inf).

The sphere rule is a product of Gauss-Legendre nodes in cos(theta) and the
uniform trapezoid rule in phi.  Its nodes are cone directions p = (1, n) on
the p0 = 1 slice, so the rule integrates functions of p against d^2p.

Reductions use a fixed pairwise order (``pairwise_sum``) so that a result
never depends on how node evaluations were scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

FOUR_PI = 4.0 * math.pi


class QuadratureError(ArithmeticError):
    """Non-finite integrand values or an integral that failed to converge."""


def pairwise_sum(values, axis: int = 0):
    """Sum along ``axis`` by repeatedly adding adjacent pairs.

    The reduction tree depends only on the length of the axis, which makes the
    result bit-reproducible.
    """
    a = np.moveaxis(np.asarray(values), axis, 0)
    if a.shape[0] == 0:
        return np.zeros(a.shape[1:], dtype=a.dtype)
    while a.shape[0] > 1:
        if a.shape[0] % 2:
            a = np.concatenate([a, np.zeros((1,) + a.shape[1:], dtype=a.dtype)])
        a = a[0::2] + a[1::2]
    return a[0]


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1] (read-only arrays)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True, eq=False)
class SphereRule:
    """Product rule on S^2: ``nodes`` has shape (m, 4) with nodes[:, 0] == 1."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __len__(self):
        return len(self.weights)

    @property
    def directions(self) -> np.ndarray:
        return self.nodes[:, 1:]


@lru_cache(maxsize=16)
def sphere_rule(order: int = 64) -> SphereRule:
    """Gauss-Legendre in cos(theta) with ``order`` nodes times a 2*order point trapezoid in phi."""
    if order < 2:
        raise ValueError("sphere rule order must be >= 2")
    t, wt = gauss_legendre(order)
    nphi = 2 * order
    phi = (np.arange(nphi) + 0.5) * (2.0 * math.pi / nphi)
    sin_theta = np.sqrt((1.0 - t) * (1.0 + t))
    ct, cp = np.meshgrid(t, phi, indexing="ij")
    st = np.broadcast_to(sin_theta[:, None], ct.shape)
    nodes = np.stack(
        [np.ones(ct.size), (st * np.cos(cp)).ravel(), (st * np.sin(cp)).ravel(), ct.ravel()], axis=1
    )
    weights = np.repeat(wt * (2.0 * math.pi / nphi), nphi)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return SphereRule(nodes=nodes, weights=weights, order=order)


def integrate_sphere(f, rule: SphereRule):
    """Sum of w_i f(p_i) over the rule, reduced pairwise.

    ``f`` is either a callable evaluated once on the (m, 4) node array or an
    array of precomputed node values with leading dimension m.  Trailing
    dimensions are integrated component-wise.
    """
    vals = np.asarray(f(rule.nodes) if callable(f) else f)
    if vals.shape[:1] != (len(rule),):
        raise ValueError(f"expected {len(rule)} node values, got shape {vals.shape}")
    finite = np.isfinite(vals)
    if not finite.all():
        bad = int(np.argwhere(~finite.reshape(len(rule), -1).all(axis=1))[0, 0])
        raise QuadratureError(f"integrand is not finite at node {bad}: p = {rule.nodes[bad].tolist()}")
    w = rule.weights.reshape((-1,) + (1,) * (vals.ndim - 1))
    return pairwise_sum(w * vals)


@dataclass(frozen=True)
class HalflineConfig:
    """Settings for ``integrate_halfline``.

    The domain is covered by blocks [0, initial_cutoff], then blocks whose end
    grows by ``growth`` each time; each block is split into panels of length
    at most ``panel``.  Integration stops after a block whose summed absolute
    panel contributions fall below max(abs_tol, rel_tol * |integral|).  With
    ``tail_extrapolation`` it also stops once the geometric continuation of the
    last two block magnitudes, m r / (1 - r) with r their ratio, is below that
    threshold; the estimate is added to the reported error.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-15
    panel: float = 1.0
    initial_cutoff: float = 1.0
    growth: float = 2.0
    max_cutoff: float = 1e4
    stall_limit: int = 5
    gauss_order: int = 16
    max_depth: int = 12
    tail_extrapolation: bool = False

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (self.panel > 0 and self.initial_cutoff > 0 and self.growth > 1):
            raise ValueError("panel, initial_cutoff must be positive and growth > 1")

    def for_frequency(self, omega: float) -> "HalflineConfig":
        """Copy with panels short enough to resolve sin(omega x): min(1, pi / (4 omega))."""
        panel = 1.0 if omega <= 0 else min(1.0, math.pi / (4.0 * omega))
        return HalflineConfig(**{**self.__dict__, "panel": min(self.panel, panel)})


@dataclass(frozen=True)
class HalflineResult:
    value: complex | np.ndarray
    error: float
    cutoff: float
    evaluations: int
    panels: int


class _PanelIntegrator:
    """Adaptive bisection; each visit evaluates the whole-panel and both half-panel rules in one call."""

    def __init__(self, f, cfg: HalflineConfig):
        self.f = f
        self.cfg = cfg
        self.evaluations = 0
        self.panels = 0

    def _rules(self, a: float, b: float):
        x, w = gauss_legendre(self.cfg.gauss_order)
        n = len(x)
        m = 0.5 * (a + b)
        h = 0.5 * (b - a)
        nodes = np.concatenate([m + h * x, 0.5 * (a + m) + 0.5 * h * x, 0.5 * (m + b) + 0.5 * h * x])
        vals = np.asarray(self.f(nodes))
        self.evaluations += 3 * n
        shape = (-1,) + (1,) * (vals.ndim - 1)
        whole = pairwise_sum((h * w).reshape(shape) * vals[:n])
        left = pairwise_sum((0.5 * h * w).reshape(shape) * vals[n:2 * n])
        right = pairwise_sum((0.5 * h * w).reshape(shape) * vals[2 * n:])
        return whole, left + right

    def __call__(self, a: float, b: float, tol: float, depth: int = 0):
        whole, halves = self._rules(a, b)
        err = float(np.max(np.abs(halves - whole)))
        if err <= max(tol, 64 * np.finfo(float).eps * float(np.max(np.abs(halves)))) or depth >= self.cfg.max_depth:
            self.panels += 2
            return halves, err
        m = 0.5 * (a + b)
        lv, le = self(a, m, 0.5 * tol, depth + 1)
        rv, re_ = self(m, b, 0.5 * tol, depth + 1)
        return lv + rv, le + re_


def integrate_halfline(
    f: Callable[[np.ndarray], np.ndarray],
    cfg: HalflineConfig = HalflineConfig(),
    support: float | None = None,
) -> HalflineResult:
    """Integrate f over [0, inf) with adaptive Gauss-Legendre panels.

    ``f`` maps an array of abscissae (shape (m,)) to values of shape (m,) or
    (m, k); vector-valued integrands share nodes and are integrated
    component-wise.  ``support``, if given, is a point beyond which f
    vanishes identically; integration stops there.

    Raises QuadratureError if block contributions fail to decrease for
    ``stall_limit`` consecutive extensions or the cutoff exceeds max_cutoff.
    """
    integ = _PanelIntegrator(f, cfg)
    total = None
    error = 0.0
    a, b = 0.0, cfg.initial_cutoff
    prev_mag = math.inf
    stalls = 0
    while True:
        if support is not None and b >= support:
            b = support
        npan = max(1, math.ceil((b - a) / cfg.panel - 1e-9))
        edges = np.linspace(a, b, npan + 1)
        block = None
        mag = 0.0
        scale = 0.0 if total is None else float(np.max(np.abs(total)))
        panel_tol = max(cfg.abs_tol, cfg.rel_tol * scale) / npan
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, err = integ(float(lo), float(hi), panel_tol)
            error += err
            mag += float(np.max(np.abs(val)))
            block = val if block is None else block + val
        total = block if total is None else total + block
        if support is not None and b >= support:
            break
        threshold = max(cfg.abs_tol, cfg.rel_tol * float(np.max(np.abs(total))))
        if mag <= threshold:
            error += mag
            break
        if cfg.tail_extrapolation and math.isfinite(prev_mag) and mag < prev_mag:
            r = mag / prev_mag
            tail = mag * r / (1.0 - r)
            if tail <= threshold:
                error += tail
                break
        stalls = stalls + 1 if mag >= prev_mag else 0
        if stalls >= cfg.stall_limit:
            raise QuadratureError(f"tail not decaying: block [{a:g}, {b:g}] contributes {mag:.3g}")
        prev_mag = mag
        a, b = b, b * cfg.growth
        if b > cfg.max_cutoff:
            raise QuadratureError(f"cutoff exceeded {cfg.max_cutoff:g} before the tail converged")
    value = total if np.ndim(total) else total[()]
    return HalflineResult(value=value, error=error, cutoff=b, evaluations=integ.evaluations, panels=integ.panels)
