"""Thomas algorithm for tridiagonal systems, vectorized over right-hand sides."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidArgument


def thomas_solve(
    lower: ArrayLike,
    diag: ArrayLike,
    upper: ArrayLike,
    rhs: ArrayLike,
) -> NDArray[np.float64]:
    """Solve ``M x = rhs`` for tridiagonal ``M`` without pivoting.

    ``diag`` and ``rhs`` have leading length ``n``; ``lower`` and ``upper``
    have length ``n - 1``. Extra trailing axes are solved independently,
    and ``diag``/``lower``/``upper`` may carry the same trailing axes so
    every column gets its own matrix. Intended for diagonally dominant
    systems, which need no pivoting.
    """
    b = np.array(diag, dtype=np.float64)
    d = np.array(rhs, dtype=np.float64)
    n = d.shape[0]
    if b.shape[0] != n:
        raise InvalidArgument("diagonal and right-hand side lengths differ")
    a = np.asarray(lower, dtype=np.float64)
    c = np.asarray(upper, dtype=np.float64)
    if a.shape[0] != n - 1 or c.shape[0] != n - 1:
        raise InvalidArgument("off-diagonals must have length n - 1")
    a = _column(a, d.ndim)
    c = _column(c, d.ndim)
    b, d = np.broadcast_arrays(_column(b, d.ndim), d)
    b = b.copy()
    d = d.copy()
    for i in range(1, n):
        w = a[i - 1] / b[i - 1]
        b[i] = b[i] - w * c[i - 1]
        d[i] = d[i] - w * d[i - 1]
    x = np.empty_like(d)
    x[-1] = d[-1] / b[-1]
    for i in range(n - 2, -1, -1):
        x[i] = (d[i] - c[i] * x[i + 1]) / b[i]
    return x


def tridiag_matvec(
    lower: ArrayLike, diag: ArrayLike, upper: ArrayLike, x: ArrayLike
) -> NDArray[np.float64]:
    """Product ``M x`` for the same banded layout as :func:`thomas_solve`."""
    x = np.asarray(x, dtype=np.float64)
    a = _column(np.asarray(lower, dtype=np.float64), x.ndim)
    c = _column(np.asarray(upper, dtype=np.float64), x.ndim)
    y = _column(np.asarray(diag, dtype=np.float64), x.ndim) * x
    if x.shape[0] > 1:
        y[1:] += a * x[:-1]
        y[:-1] += c * x[1:]
    return y


def _column(v: NDArray[np.float64], ndim: int) -> NDArray[np.float64]:
    return v.reshape(v.shape + (1,) * (ndim - v.ndim))
