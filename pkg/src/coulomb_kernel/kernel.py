"""The Levy exponent, the invariant kernel family and positivity certificates.

For t >= 0 the kernel is <u|v>_t = exp(-4 pi t g(lambda)) with
g(lambda) = lambda coth(lambda) - 1 and lambda the hyperbolic angle between u
and v.  g is conditionally negative definite on the Lobachevsky space, so by
Schoenberg's theorem every exponentiated kernel is positive definite.  This
module computes the Gram matrices, certifies them with a cyclic Jacobi
eigensolver and measures the conditional negative definiteness directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import pairwise_angles

PSD_TOL = 1e-9
SERIES_CUTOFF = 1e-3


@dataclass(frozen=True)
class KernelParams:
    """Schoenberg parameter t; the coupling is z = 4 pi t."""

    t: float

    @classmethod
    def from_coupling(cls, z: float) -> "KernelParams":
        return cls(z / (4.0 * math.pi))

    @property
    def z(self) -> float:
        return 4.0 * math.pi * self.t


@dataclass(frozen=True)
class GramReport:
    n: int
    min_eigenvalue: float
    max_diagonal: float
    tolerance: float
    sweeps: int

    @property
    def threshold(self) -> float:
        return -self.tolerance * self.n * max(1.0, self.max_diagonal)

    @property
    def psd(self) -> bool:
        return self.min_eigenvalue >= self.threshold


def levy_exponent(lam):
    """g(lambda) = lambda coth(lambda) - 1, even in lambda and >= 0.

    Below |lambda| = 1e-3 the Taylor series lambda^2/3 - lambda^4/45 +
    2 lambda^6/945 replaces the cancelling closed form.
    """
    lam = np.asarray(lam, dtype=float)
    small = np.abs(lam) < SERIES_CUTOFF
    l2 = lam * lam
    series = l2 * (1.0 / 3.0 - l2 * (1.0 / 45.0 - l2 * (2.0 / 945.0)))
    safe = np.where(small, 1.0, lam)
    closed = safe / np.tanh(safe) - 1.0
    out = np.where(small, series, closed)
    return out if out.ndim else float(out)


def kernel_from_angles(lam, params: KernelParams):
    return np.exp(-params.z * levy_exponent(lam))


def kernel_value(u, v, params: KernelParams) -> float:
    """<u|v>_t = exp(-4 pi t g(lambda(u, v)))."""
    return float(kernel_from_angles(pairwise_angles([u, v])[0, 1], params))


def gram_matrix(points, params: KernelParams) -> np.ndarray:
    g = kernel_from_angles(pairwise_angles(points), params)
    np.fill_diagonal(g, 1.0)
    return g


def jacobi_eigenvalues(a, rtol: float = 1e-14, max_sweeps: int = 60) -> tuple[np.ndarray, int]:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps over (p, q) in row order until the off-diagonal Frobenius norm drops
    below ``rtol`` times the Frobenius norm of the input.  Returns the sorted
    eigenvalues and the number of sweeps used.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 1:
        return a.diagonal().copy(), 0
    target = rtol * np.linalg.norm(a)
    sweeps = 0
    while sweeps < max_sweeps:
        off = math.sqrt(max(0.0, float(np.sum(a * a) - np.sum(a.diagonal() ** 2))))
        if off <= target:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * max(abs(diff), 1e-300):
                    # theta^2 would overflow; t = 1 / (2 theta) to first order
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
    return np.sort(a.diagonal()), sweeps


def gram_psd_certificate(points, params: KernelParams, tol: float = PSD_TOL) -> GramReport:
    """Build the Gram matrix of the kernel on ``points`` and bound its spectrum from below."""
    n = len(points)
    if not 1 <= n <= 200:
        raise ValueError("gram certificate supports 1 <= n <= 200 points")
    g = gram_matrix(points, params)
    eig, sweeps = jacobi_eigenvalues(g)
    return GramReport(
        n=n,
        min_eigenvalue=float(eig[0]),
        max_diagonal=float(g.diagonal().max()),
        tolerance=tol,
        sweeps=sweeps,
    )


def cnd_defect(points, alpha) -> float:
    """Q = sum_ij conj(alpha_i) alpha_j g(lambda_ij) for coefficients summing to zero.

    Conditional negative definiteness of g means Q <= 0.
    """
    alpha = np.asarray(alpha, dtype=complex)
    if len(alpha) != len(points):
        raise ValueError("need one coefficient per point")
    if abs(alpha.sum()) > 1e-12 * np.abs(alpha).sum():
        raise ValueError("coefficients must sum to zero")
    g = levy_exponent(pairwise_angles(points))
    q = np.conj(alpha) @ g @ alpha
    if abs(q.imag) > 1e-12 * max(1.0, float(np.abs(alpha) @ np.abs(g) @ np.abs(alpha))):
        raise ArithmeticError(f"quadratic form has imaginary part {q.imag!r}")
    return float(q.real)


def zero_sum_coefficients(rng: np.random.Generator, n: int, complex_valued: bool = True) -> np.ndarray:
    """Random coefficients projected onto sum(alpha) = 0."""
    a = rng.standard_normal(n) + (1j * rng.standard_normal(n) if complex_valued else 0.0)
    a = a - a.mean()
    # Remove the residual of the mean subtraction exactly where it is left.
    a[-1] = -a[:-1].sum()
    return a
