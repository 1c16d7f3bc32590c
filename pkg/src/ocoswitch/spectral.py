"""Tridiagonal matrices behind the quadratic OPT lower bound.

``B`` is the T by T switching-cost form (diagonal 2, .., 2, 1 and
off-diagonal -1), ``A = B + mu I`` and ``H = A / mu`` is the stationarity
matrix of the identical-curvature OPT problem. ``H^{-1}`` has a closed form
in terms of ``rho = (sqrt(mu+4) - sqrt(mu)) / (sqrt(mu+4) + sqrt(mu))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgument, NumericRangeError
from .tridiag import thomas_solve

Matrix = NDArray[np.float64]

_EXP_LIMIT = 700.0


def b_bands(T: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Diagonal and off-diagonal of ``B``."""
    if T < 1:
        raise InvalidArgument("T must be at least 1")
    diag = np.full(T, 2.0)
    diag[-1] = 1.0
    return diag, np.full(T - 1, -1.0)


def _dense(diag: NDArray[np.float64], off: NDArray[np.float64]) -> Matrix:
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def b_matrix(T: int) -> Matrix:
    return _dense(*b_bands(T))


def a_matrix(T: int, mu: float) -> Matrix:
    return b_matrix(T) + mu * np.eye(T)


def h_matrix(T: int, mu: float) -> Matrix:
    return a_matrix(T, mu) / mu


def rho_of(mu: float) -> float:
    if not mu > 0:
        raise InvalidArgument("mu must be positive")
    s, r = math.sqrt(mu + 4.0), math.sqrt(mu)
    return (s - r) / (s + r)


def gershgorin_interval(M: ArrayLike) -> tuple[float, float]:
    """Interval containing the union of the Gershgorin discs of a symmetric matrix."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgument("Gershgorin interval needs a square matrix")
    centre = np.diag(M)
    radius = np.abs(M).sum(axis=1) - np.abs(centre)
    return float(np.min(centre - radius)), float(np.max(centre + radius))


def dominance_gap(M: ArrayLike) -> float:
    """min_i (|m_ii| - sum_{j != i} |m_ij|); positive means strictly dominant."""
    M = np.asarray(M, dtype=np.float64)
    d = np.abs(np.diag(M))
    return float(np.min(2.0 * d - np.abs(M).sum(axis=1)))


def _sturm_count(diag: NDArray[np.float64], off2: NDArray[np.float64], x: NDArray[np.float64]) -> NDArray[np.int64]:
    # Negative pivots of the LDL^T factorisation of (M - x I) count eigenvalues below x.
    tiny = np.finfo(np.float64).tiny
    count = np.zeros(x.shape, dtype=np.int64)
    q = diag[0] - x
    for i in range(diag.shape[0]):
        if i > 0:
            q = diag[i] - x - off2[i - 1] / q
        q = np.where(q == 0.0, -tiny, q)
        count += q < 0
    return count


def eigs_tridiag_bands(diag: ArrayLike, off: ArrayLike, tol: float = 1e-14) -> NDArray[np.float64]:
    """All eigenvalues of a symmetric tridiagonal matrix by Sturm bisection, ascending."""
    diag = np.asarray(diag, dtype=np.float64)
    off = np.asarray(off, dtype=np.float64)
    n = diag.shape[0]
    if n == 0:
        return np.empty(0)
    radius = np.zeros(n)
    radius[:-1] += np.abs(off)
    radius[1:] += np.abs(off)
    lo0 = float(np.min(diag - radius))
    hi0 = float(np.max(diag + radius))
    scale = max(abs(lo0), abs(hi0), 1.0)
    lo = np.full(n, lo0 - tol * scale)
    hi = np.full(n, hi0 + tol * scale)
    k = np.arange(n)
    off2 = off * off
    while np.max(hi - lo) > tol * scale:
        mid = 0.5 * (lo + hi)
        below = _sturm_count(diag, off2, mid) > k
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    return 0.5 * (lo + hi)


def eigs_tridiag(M: ArrayLike) -> NDArray[np.float64]:
    """Eigenvalues of a dense symmetric tridiagonal matrix, ascending."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgument("eigs_tridiag needs a square matrix")
    n = M.shape[0]
    if n > 512:
        raise InvalidArgument("full spectra are limited to T <= 512")
    band = np.abs(np.subtract.outer(np.arange(n), np.arange(n))) <= 1
    if np.any(M[~band] != 0.0) or not np.allclose(M, M.T, rtol=0, atol=0):
        raise InvalidArgument("matrix must be symmetric tridiagonal")
    return eigs_tridiag_bands(np.diag(M), np.diag(M, 1))


def combined_matrix(T: int, mu: float) -> Matrix:
    """mu A^{-1} + A / (mu + 4)."""
    A = a_matrix(T, mu)
    return mu * np.linalg.inv(A) + A / (mu + 4.0)


def psi_value(mu: float, xstar: ArrayLike, x: ArrayLike) -> float:
    """psi(x) = (mu/2)||x - x*||^2 + (1/2) x^T B x, summed over columns."""
    xs = np.asarray(xstar, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    diag, off = b_bands(xs.shape[0])
    bx = diag.reshape(diag.shape + (1,) * (x.ndim - 1)) * x
    if xs.shape[0] > 1:
        bx[1:] += -x[:-1]
        bx[:-1] += -x[1:]
    return float(0.5 * mu * np.sum((x - xs) ** 2) + 0.5 * np.sum(x * bx))


def psi_optimum(mu: float, xstar: ArrayLike) -> tuple[NDArray[np.float64], float]:
    """Minimizer mu A^{-1} x* of psi and the value (mu/2) x*^T (I - mu A^{-1}) x*."""
    if not mu > 0:
        raise InvalidArgument("mu must be positive")
    xs = np.asarray(xstar, dtype=np.float64)
    diag, off = b_bands(xs.shape[0])
    xbar = thomas_solve(off, diag + mu, off, mu * xs)
    return xbar, float(0.5 * mu * np.sum(xs * (xs - xbar)))


def quadratic_form_b(x: ArrayLike) -> float:
    """x^T B x, summed over columns; equals ||x_1||^2 + sum_t ||x_t - x_{t-1}||^2."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(x[0] ** 2) + np.sum(np.diff(x, axis=0) ** 2))


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Matrices B, A, H and the closed-form parameters of H^{-1}."""

    T: int
    mu: float
    rho: float
    xi: float
    w: NDArray[np.float64]
    v: NDArray[np.float64]
    c1: float
    c2: float

    @classmethod
    def build(cls, T: int, mu: float) -> SpectralModel:
        if T < 1:
            raise InvalidArgument("T must be at least 1")
        rho = rho_of(mu)
        if T * math.log(1.0 / rho) > _EXP_LIMIT:
            raise NumericRangeError(f"rho^-T overflows for T={T}, mu={mu}")
        xi = mu + 2.0
        t = np.arange(0, T + 1, dtype=np.float64)
        w = rho / (1.0 - rho**2) * (rho ** (-t) - rho**t)
        denom = (xi - 1.0) * w[T] - w[T - 1]
        if not denom > 0:
            raise NumericRangeError("v_T denominator is not positive")
        vT = 1.0 / denom
        c1 = vT * ((xi - 1.0) * rho - rho**2) / (1.0 - rho**2)
        c2 = vT * (1.0 - (xi - 1.0) * rho) / (1.0 - rho**2)
        v = c1 * rho ** (-(T - t)) + c2 * rho ** (T - t)
        return cls(T, float(mu), rho, xi, w, v, float(c1), float(c2))

    @property
    def B(self) -> Matrix:
        return b_matrix(self.T)

    @property
    def A(self) -> Matrix:
        return a_matrix(self.T, self.mu)

    @property
    def H(self) -> Matrix:
        return h_matrix(self.T, self.mu)

    def h_inverse(self) -> Matrix:
        idx = np.arange(1, self.T + 1)
        i = np.minimum.outer(idx, idx)
        j = np.maximum.outer(idx, idx)
        return self.mu * self.w[i] * self.v[j]


def h_inverse_closed_form(T: int, mu: float) -> Matrix:
    """H^{-1} from h_{t,t+tau} = mu w_t v_{t+tau}, mirrored by symmetry."""
    return SpectralModel.build(T, mu).h_inverse()


def h_inverse_by_solves(T: int, mu: float) -> Matrix:
    """H^{-1} assembled column by column from tridiagonal solves."""
    diag, off = b_bands(T)
    return thomas_solve(off / mu, (diag + mu) / mu, off / mu, np.eye(T))


def h_inverse_row_deficits(T: int, mu: float) -> NDArray[np.float64]:
    """1 - (row sums of H^{-1}), computed without cancellation.

    H 1 = 1 + e_1 / mu, so H^{-1} 1 = 1 - (first column of H^{-1}) / mu.
    """
    m = SpectralModel.build(T, mu)
    return m.w[1] * m.v[1:]
