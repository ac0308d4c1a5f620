"""Spectral analysis of the kernel: the weight K(nu; z) and the Bochner reconstruction.

The weight is the bilateral series

    K(nu; z) = -(4 pi / nu) z^2 e^z  sum_{n in Z} [nu + i(2n+1-z)]^(n-1) / [nu + i(2n+1+z)]^(n+2).

The terms n and -n-1 are complex conjugates of each other, so the sum is
real; its size is roughly exp(-pi nu) times that of the leading terms, which
decay only like n^-3.  Double precision therefore cannot resolve K beyond
nu of a few units.  The sum is accumulated in pairs with mpmath at a working
precision chosen from nu, and its algebraic tail is removed by Richardson
extrapolation on consecutive partial sums.  The window N is doubled until two
successive extrapolations agree to the requested relative tolerance.

The kernel exp(-z g(lambda)) is recovered as

    (1 / 2 pi^2) int_0^inf nu^2 K(nu; z) phi_nu(lambda) d nu + w phi_{1-z}(lambda),

where phi_nu(lambda) = sin(nu lambda) / (nu sinh lambda) are the principal
series spherical functions and phi_{nu0} = sinh(nu0 lambda)/(nu0 sinh lambda)
the supplementary ones.  The discrete weight w exists only for 0 < z < 1 and
is fixed here from the value at lambda = 0, not assumed.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath as mp
import numpy as np

from .kernel import levy_exponent
from .quadrature import HalflineConfig, HalflineResult, SphereRule, integrate_halfline, integrate_sphere, sphere_rule
from .geometry import as_vector, minkowski_dot

NU_FLOOR = 0.01
SERIES_TOL = 1e-12
IMAG_TOL = 1e-8
MAX_HALF_WIDTH = 10**6
# (window start N, Richardson order m); later stages double N.
_FIRST_STAGE = (16, 8)
_GUARD_DIGITS = 20


class SeriesError(ArithmeticError):
    """The weight series did not converge or failed its realness check."""


@dataclass(frozen=True)
class SeriesTruncation:
    """Certificate for one evaluation of the weight series.

    ``half_width`` is the window N at which two successive extrapolations
    (windows N/2 and N) agreed to ``rel_change``; ``terms`` is the number of
    symmetric pairs actually summed.
    """

    half_width: int
    terms: int
    richardson_order: int
    rel_change: float
    tail_tol: float
    im_ratio: float
    digits: int

    @property
    def converged(self) -> bool:
        return self.rel_change <= self.tail_tol and self.im_ratio <= IMAG_TOL


@dataclass(frozen=True)
class WeightValue:
    nu: float
    z: float
    value: float
    truncation: SeriesTruncation


def _richardson_weights(start: int, order: int) -> list:
    """c_k with sum_k c_k S_{start+k} eliminating 1/N, ..., 1/N^order tail terms."""
    return [
        mp.mpf(start + k) ** order * (-1) ** (k + order) / (mp.factorial(k) * mp.factorial(order - k))
        for k in range(order + 1)
    ]


class _PairSeries:
    """Partial sums of the paired weight series at fixed precision."""

    def __init__(self, nu: float, z: float):
        self.nu = mp.mpf(nu)
        self.iz = mp.mpc(0, z)
        self.partial = [mp.mpc(0)]

    def term(self, n: int):
        a = mp.mpc(self.nu, 2 * n + 1)
        return (a - self.iz) ** (n - 1) / (a + self.iz) ** (n + 2)

    def extend(self, count: int):
        s = self.partial[-1]
        for n in range(len(self.partial) - 1, count):
            s = s + (self.term(n) + self.term(-n - 1))
            self.partial.append(s)

    def extrapolate(self, start: int, order: int):
        self.extend(start + order + 1)
        w = _richardson_weights(start, order)
        return mp.fsum(c * self.partial[start + k] for k, c in enumerate(w))


def weight_term(n: int, nu: float, z: float) -> complex:
    """The single n-th term of K including the prefactor -(4 pi / nu) z^2 e^z."""
    with mp.workdps(30):
        s = _PairSeries(nu, z)
        val = -(4 * mp.pi / mp.mpf(nu)) * mp.mpf(z) ** 2 * mp.exp(z) * s.term(n)
        return complex(val)


def _stage(k: int) -> tuple[int, int]:
    """Ladder (16, 8), (32, 12), (64, 16), (128, 24), ... with the order capped at 64."""
    n0, m0 = _FIRST_STAGE
    order = m0 + 4 * k if k < 2 else min(8 * k, 64)
    return n0 * 2**k, order


def _amplification_digits(start: int, order: int) -> int:
    logs = [order * math.log10(start + k) - math.log10(math.factorial(k) * math.factorial(order - k)) for k in range(order + 1)]
    return int(math.ceil(max(logs) + math.log10(order + 1)))


def _evaluate_series(nu: float, z: float, tol: float, digits: int):
    """Run the doubling ladder at ``digits`` working digits; return (S, cert fields)."""
    with mp.workdps(digits):
        series = _PairSeries(nu, z)
        prev = None
        k = 0
        while True:
            start, order = _stage(k)
            if start > MAX_HALF_WIDTH:
                raise SeriesError(f"weight series not converged for nu={nu}, z={z} (N > {MAX_HALF_WIDTH})")
            needed = _amplification_digits(start, order) + _GUARD_DIGITS
            if needed > mp.mp.dps:
                return None, needed
            est = series.extrapolate(start, order)
            if prev is not None and est.real != 0:
                change = abs(est.real - prev.real) / abs(est.real)
                if change <= tol:
                    scale = max(abs(x) for x in series.partial[1:])
                    lost = int(math.ceil(float(mp.log10(scale / abs(est.real))))) if est.real != 0 else mp.mp.dps
                    return (est, start, len(series.partial) - 1, order, float(change), lost), None
            prev = est
            k += 1


@lru_cache(maxsize=200_000)
def weight_K(nu: float, z: float, tol: float = SERIES_TOL) -> WeightValue:
    """K(nu; z) with its truncation certificate (nu >= 0.01, z > 0)."""
    nu = float(nu)
    z = float(z)
    if nu < NU_FLOOR:
        raise ValueError(f"weight_K requires nu >= {NU_FLOOR}")
    if not z > 0:
        raise ValueError("weight_K requires z > 0")
    # exp(-pi nu) cancellation plus headroom for the extrapolation weights.
    digits = 30 + int(math.ceil(1.4 * nu + math.log10(1.0 / nu) + max(0.0, -2 * math.log10(z))))
    for _ in range(6):
        result, needed = _evaluate_series(nu, z, tol, digits)
        if result is None:
            digits = needed + 30 + int(math.ceil(1.4 * nu))
            continue
        est, start, terms, order, change, lost = result
        # the extrapolation and the cancellation must leave enough correct digits
        budget = digits - lost - _amplification_digits(start, order)
        if budget < _GUARD_DIGITS:
            digits += _GUARD_DIGITS - budget + 10
            continue
        break
    else:
        raise SeriesError(f"could not reach a safe working precision for nu={nu}, z={z}")
    with mp.workdps(digits):
        im_ratio = float(abs(est.imag) / abs(est.real))
        value = float((-(4 * mp.pi / mp.mpf(nu)) * mp.mpf(z) ** 2 * mp.exp(z) * est.real))
    cert = SeriesTruncation(
        half_width=start,
        terms=terms,
        richardson_order=order,
        rel_change=change,
        tail_tol=tol,
        im_ratio=im_ratio,
        digits=digits,
    )
    if im_ratio > IMAG_TOL:
        raise SeriesError(f"imaginary residue {im_ratio:.3g} exceeds {IMAG_TOL:g} at nu={nu}, z={z}")
    return WeightValue(nu=nu, z=z, value=value, truncation=cert)


def weight_K_window(nu: float, z: float, half_width: int, order: int, digits: int) -> float:
    """K from one fixed window: Richardson order ``order`` on partial sums from ``half_width``.

    Used to confirm a certificate: repeating the evaluation at twice the
    certified window must not move the value beyond the tolerance.
    """
    with mp.workdps(digits):
        est = _PairSeries(nu, z).extrapolate(half_width, order)
        return float(-(4 * mp.pi / mp.mpf(nu)) * mp.mpf(z) ** 2 * mp.exp(z) * est.real)


def small_nu_trend(z: float, count: int = 10, lo: float = NU_FLOOR, hi: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """K on a log grid of [lo, hi]; reported as data, no limit at nu -> 0 is asserted."""
    nus = np.geomspace(lo, hi, count)
    return nus, np.array([weight_K(float(n), z).value for n in nus])


def _weight_only(args) -> float:
    return weight_K(*args).value


def weight_values(nus, z: float, workers: int | None = None, pool=None) -> np.ndarray:
    """K at many nu (floored at NU_FLOOR); evaluations may run in a process pool.

    ``pool`` is an existing executor to reuse; otherwise one is created for
    this call when workers > 1.  Results come back in input order either way.
    """
    nus = np.maximum(np.asarray(nus, dtype=float), NU_FLOOR)
    jobs = [(float(n), float(z)) for n in nus.ravel()]
    if pool is not None and len(jobs) > 1:
        vals = list(pool.map(_weight_only, jobs))
    elif workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(_weight_only, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        vals = [_weight_only(j) for j in jobs]
    return np.array(vals).reshape(nus.shape)


def _sinc(x):
    x = np.asarray(x)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(xs) / xs)


def _sinhc(x):
    x = np.asarray(x)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 + x2 / 6.0 + x2 * x2 / 120.0, np.sinh(xs) / xs)


def lam_over_sinh(lam):
    """lambda / sinh(lambda), equal to 1 at lambda = 0."""
    return 1.0 / _sinhc(lam)


def phi_principal(nu, lam):
    """sin(nu lambda) / (nu sinh lambda); accepts complex nu for analytic continuation."""
    out = _sinc(np.asarray(nu) * np.asarray(lam)) * lam_over_sinh(np.asarray(lam, dtype=float))
    return out if np.ndim(out) else out[()]


def phi_supplementary(nu0, lam):
    """sinh(nu0 lambda) / (nu0 sinh lambda) for 0 < nu0 <= 1."""
    if not np.all((np.asarray(nu0) > 0) & (np.asarray(nu0) <= 1)):
        raise ValueError("supplementary series parameter must lie in (0, 1]")
    lam = np.asarray(lam, dtype=float)
    out = _sinhc(np.asarray(nu0) * lam) * lam_over_sinh(lam)
    return out if np.ndim(out) else out[()]


def phi_principal_integral(nu: float, u, v, rule: SphereRule | None = None) -> complex:
    """(1 / 4 pi) integral of conj((p.u)^(i nu - 1)) (p.v)^(i nu - 1) over the unit sphere."""
    rule = sphere_rule(64) if rule is None else rule
    pu = minkowski_dot(rule.nodes, as_vector(u))
    pv = minkowski_dot(rule.nodes, as_vector(v))
    vals = np.exp((-1j * nu - 1.0) * np.log(pu) + (1j * nu - 1.0) * np.log(pv))
    return complex(integrate_sphere(vals, rule)) / (4.0 * math.pi)


@dataclass(frozen=True)
class DiscretePart:
    """Supplementary-series contribution at nu0 = 1 - z (present only for 0 < z < 1)."""

    present: bool
    location: float | None
    weight: float
    candidate: float | None = None

    @property
    def ratio(self) -> float | None:
        if not self.present or not self.candidate:
            return None
        return self.weight / self.candidate


@dataclass(frozen=True)
class Reconstruction:
    z: float
    lam: np.ndarray
    continuous: np.ndarray
    discrete: DiscretePart
    total: np.ndarray
    kernel: np.ndarray
    sum_rule: float
    integration: HalflineResult = field(repr=False)

    @property
    def residual(self) -> np.ndarray:
        return self.total - self.kernel

    @property
    def relative_residual(self) -> np.ndarray:
        return np.abs(self.residual) / self.kernel


def reconstruction_config(lam_max: float) -> HalflineConfig:
    """Panels of at most half a period of sin(nu lam_max); the nu tail is extrapolated geometrically."""
    panel = min(1.0, math.pi / max(lam_max, 1e-3))
    return HalflineConfig(rel_tol=1e-8, abs_tol=1e-12, gauss_order=12, panel=panel, tail_extrapolation=True)


def reconstruct_kernel(lam, z: float, cfg: HalflineConfig | None = None, nu_floor: float = NU_FLOOR,
                       workers: int | None = None) -> Reconstruction:
    """Rebuild exp(-z g(lambda)) from the weight and the spherical functions.

    The continuous part integrates (1/2pi^2) nu^2 K(nu; z) phi_nu(lambda); below
    ``nu_floor`` the weight is frozen at K(nu_floor).  For 0 < z < 1 the
    discrete weight is whatever makes the total equal to 1 at lambda = 0; the
    closed-form candidate (1 - z) e^z / sqrt(2 pi) is reported next to it.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lam < 0) or np.any(lam > 6):
        raise ValueError("lambda must lie in [0, 6]")
    if not z > 0:
        raise ValueError("z must be positive")
    cfg = reconstruction_config(float(lam.max())) if cfg is None else cfg
    grid = np.concatenate([[0.0], lam])

    pool = ProcessPoolExecutor(max_workers=workers) if workers and workers > 1 else None

    def integrand(nus):
        k = weight_values(np.maximum(nus, nu_floor), z, pool=pool)
        phis = phi_principal(nus[:, None], grid[None, :])
        return (nus * nus * k)[:, None] * phis / (2.0 * math.pi**2)

    try:
        res = integrate_halfline(integrand, cfg)
    finally:
        if pool is not None:
            pool.shutdown()
    cont0 = float(res.value[0])
    cont = np.asarray(res.value[1:], dtype=float)
    if 0.0 < z < 1.0:
        nu0 = 1.0 - z
        disc = DiscretePart(True, nu0, 1.0 - cont0, candidate=nu0 * math.exp(z) / math.sqrt(2.0 * math.pi))
        total = cont + disc.weight * phi_supplementary(nu0, lam)
    else:
        # z = 1 is the weight-0 limit of the discrete branch
        disc = DiscretePart(False, None, 0.0)
        total = cont.copy()
    kernel = np.exp(-z * levy_exponent(lam))
    return Reconstruction(z=z, lam=lam, continuous=cont, discrete=disc, total=total, kernel=np.atleast_1d(kernel),
                          sum_rule=cont0 + disc.weight, integration=res)


@dataclass(frozen=True)
class SpectralWeightTable:
    z: float
    nu: np.ndarray
    values: np.ndarray
    certificates: list
    status: list

    @property
    def minimum(self) -> float | None:
        return float(self.values.min()) if len(self.values) else None

    @property
    def nonnegative(self) -> bool | None:
        """None for an empty grid; otherwise min K >= -1e-10 max|K| and every entry converged."""
        if not len(self.values):
            return None
        if any(s != "ok" for s in self.status):
            return False
        return bool(self.values.min() >= -1e-10 * np.abs(self.values).max())


def _scan_cell(args):
    nu, z = args
    try:
        w = weight_K(nu, z)
        return w.value, w.truncation, "ok"
    except SeriesError as exc:
        return math.nan, None, "not-converged" if "converged" in str(exc) else "imaginary-residue"


def default_nu_grid(count: int = 200, lo: float = NU_FLOOR, hi: float = 20.0) -> np.ndarray:
    return np.geomspace(lo, hi, count) if count else np.empty(0)


def positivity_scan(z_list, nu_grid, workers: int | None = None) -> list[SpectralWeightTable]:
    """Tabulate K(nu; z) with certificates for every z in ``z_list``."""
    nu_grid = np.asarray(nu_grid, dtype=float)
    cells = [(float(nu), float(z)) for z in z_list for nu in nu_grid]
    if workers and workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_scan_cell, cells, chunksize=max(1, len(cells) // (4 * workers))))
    else:
        out = [_scan_cell(c) for c in cells]
    tables = []
    for i, z in enumerate(z_list):
        chunk = out[i * len(nu_grid):(i + 1) * len(nu_grid)]
        tables.append(SpectralWeightTable(
            z=float(z),
            nu=nu_grid.copy(),
            values=np.array([c[0] for c in chunk], dtype=float),
            certificates=[c[1] for c in chunk],
            status=[c[2] for c in chunk],
        ))
    return tables
