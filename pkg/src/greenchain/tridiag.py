"""Tridiagonal linear solves.

The matrix is given by three length-``n`` arrays: ``lower[i] = M[i, i-1]``
(``lower[0]`` ignored), ``diag[i] = M[i, i]`` and ``upper[i] = M[i, i+1]``
(``upper[-1]`` ignored).
"""
from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import SolverError

# relative pivot size below which Thomas elimination is abandoned
PIVOT_RTOL = 1e-10
DENSE_LIMIT = 64


def tridiag_matvec(lower, diag, upper, x):
    """``M @ x`` for a tridiagonal ``M``; ``x`` may be 1-D or 2-D."""
    x = np.asarray(x, dtype=float)
    out = diag.reshape((-1,) + (1,) * (x.ndim - 1)) * x
    if len(diag) > 1:
        out[1:] += lower[1:].reshape((-1,) + (1,) * (x.ndim - 1)) * x[:-1]
        out[:-1] += upper[:-1].reshape((-1,) + (1,) * (x.ndim - 1)) * x[1:]
    return out


def transpose_bands(lower, diag, upper):
    """Bands of the transpose, in the same layout."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    return np.r_[0.0, upper[:-1]], np.asarray(diag, dtype=float), np.r_[lower[1:], 0.0]


def tridiag_dense(lower, diag, upper):
    n = len(diag)
    m = np.diag(np.asarray(diag, dtype=float))
    if n > 1:
        m += np.diag(np.asarray(lower[1:], dtype=float), -1)
        m += np.diag(np.asarray(upper[:-1], dtype=float), 1)
    return m


class TridiagonalFactorization:
    """Factor a tridiagonal matrix once, solve for many right-hand sides.

    Thomas elimination is used while every pivot stays above
    ``PIVOT_RTOL`` times its row scale.  If a pivot degrades the matrix is
    refactored with partial pivoting: dense LU below ``DENSE_LIMIT`` rows,
    banded LU above.  ``method`` records which path is active.
    """

    def __init__(self, lower, diag, upper):
        self.lower = np.array(lower, dtype=float)
        self.diag = np.array(diag, dtype=float)
        self.upper = np.array(upper, dtype=float)
        n = len(self.diag)
        if n == 0 or len(self.lower) != n or len(self.upper) != n:
            raise SolverError("tridiagonal bands must be non-empty and of equal length")
        self.lower[0] = 0.0
        self.upper[-1] = 0.0
        self.n = n
        self.worst_pivot = None
        self._fallback = None
        self.method = "thomas"

        pivots = np.empty(n)
        mult = np.zeros(n)
        scale = np.abs(self.diag) + np.abs(self.lower) + np.abs(self.upper)
        pivots[0] = self.diag[0]
        worst = (abs(pivots[0]) / scale[0] if scale[0] else 0.0, 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            for i in range(1, n):
                mult[i] = self.lower[i] / pivots[i - 1]
                pivots[i] = self.diag[i] - mult[i] * self.upper[i - 1]
                rel = abs(pivots[i]) / scale[i] if scale[i] else 0.0
                if rel < worst[0]:
                    worst = (rel, i)
        self.worst_pivot = worst
        self._pivots = pivots
        self._mult = mult
        if not np.all(np.isfinite(pivots)) or worst[0] < PIVOT_RTOL:
            self._refactor()

    def _refactor(self):
        if self.n < DENSE_LIMIT:
            dense = tridiag_dense(self.lower, self.diag, self.upper)
            with warnings.catch_warnings():
                # singularity is reported below as a SolverError
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu, piv = scipy.linalg.lu_factor(dense, check_finite=True)
            small = np.min(np.abs(np.diag(lu)))
            if small <= PIVOT_RTOL * np.max(np.abs(dense)):
                i = int(np.argmin(np.abs(np.diag(lu))))
                raise SolverError(f"singular tridiagonal system: pivot {i} is {small:.3e}")
            self._fallback = (lu, piv)
            self.method = "dense-lu"
        else:
            ab = np.zeros((3, self.n))
            ab[0, 1:] = self.upper[:-1]
            ab[1, :] = self.diag
            ab[2, :-1] = self.lower[1:]
            self._fallback = ab
            self.method = "banded-lu"

    def solve(self, rhs):
        """Solve ``M x = rhs`` for a vector or a matrix of columns."""
        b = np.array(rhs, dtype=float)
        if b.shape[0] != self.n:
            raise SolverError(f"right-hand side has {b.shape[0]} rows, expected {self.n}")
        if self.method == "dense-lu":
            return scipy.linalg.lu_solve(self._fallback, b)
        if self.method == "banded-lu":
            try:
                return scipy.linalg.solve_banded((1, 1), self._fallback, b)
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"singular tridiagonal system: {exc}") from None
        for i in range(1, self.n):
            b[i] -= self._mult[i] * b[i - 1]
        x = b
        x[-1] = b[-1] / self._pivots[-1]
        for i in range(self.n - 2, -1, -1):
            x[i] = (b[i] - self.upper[i] * x[i + 1]) / self._pivots[i]
        return x

    def residual(self, x, rhs) -> float:
        """Max-abs residual ``|M x - rhs|``."""
        r = tridiag_matvec(self.lower, self.diag, self.upper, x) - np.asarray(rhs, dtype=float)
        return float(np.max(np.abs(r))) if r.size else 0.0


def solve_tridiagonal(lower, diag, upper, rhs):
    return TridiagonalFactorization(lower, diag, upper).solve(rhs)
